#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nara/bundle.hpp"
#include "nara/rng.hpp"

namespace nara {

struct GenerationConfig {
  double epsilon = 0.5;
  std::size_t horizon = 100;
  std::uint64_t seed = kDefaultSeed;
  bool record_chunks = false;  // keep a ChunkDraft per iteration for auditing
};

/// One iteration of the approximate loop. Heads and drafted values cover the
/// accepted prefix only; scores and mask cover the (possibly truncated) chunk.
struct ChunkDraft {
  std::int64_t start_position = 0;  // samples seen before the chunk
  PriorChunk priors;
  std::vector<GaussianHead> heads;
  std::vector<double> drafted;
  ConfidenceVector scores;
  AcceptMask mask;
};

struct GenerationTrace {
  std::vector<double> generated;
  std::size_t sequential_rounds = 0;
  std::size_t draft_passes = 0;
  std::size_t accepted_total = 0;
  std::size_t resampled_total = 0;
  double wall_ms = 0.0;
  std::vector<ChunkDraft> chunks;

  double acceptance_ratio() const noexcept {
    return generated.empty() ? 0.0
                             : static_cast<double>(accepted_total) / static_cast<double>(generated.size());
  }
};

/// Approximate generation: per chunk, predict priors from the trailing
/// window, score them, accept the prefix whose scores clear epsilon, sample
/// that prefix from one draft pass (one dependent round), then re-sample the
/// first rejected position from the AR model (one more round). Draft values
/// at absolute position p use substream(seed, p, draft); re-samples use
/// substream(seed, p, resample).
GenerationTrace generate_nara(const ModelBundle& bundle, std::span<const double> context,
                              const GenerationConfig& config);

/// Sequential reference: one sample_next per position, drawing from
/// substream(seed, p, resample).
GenerationTrace generate_pure_ar(const ArParams& ar, std::span<const double> context,
                                 std::size_t horizon, std::uint64_t seed);

}  // namespace nara
