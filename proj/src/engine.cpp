#include "nara/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace nara {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double checked(double x) {
  if (!std::isfinite(x)) throw Error("diverged");
  return x;
}

// Samples x_p from `state` on the resample substream and feeds it back.
double resample_at(const ArParams& ar, ArState& state, std::uint64_t seed, std::uint64_t position) {
  Rng rng = substream(seed, position, DrawPurpose::resample);
  auto next = sample_next(ar, state, rng);
  state = std::move(next.state);
  return checked(next.value);
}

}  // namespace

GenerationTrace generate_nara(const ModelBundle& bundle, std::span<const double> context,
                              const GenerationConfig& config) {
  if (context.empty()) throw Error("generation needs a non-empty context");
  if (config.epsilon < 0.0 || config.epsilon > 1.0) throw Error("epsilon must lie in [0, 1]");
  const auto start = Clock::now();
  const ArParams& ar = bundle.ar;
  const std::size_t o = bundle.prior.window();
  const std::size_t chunk = bundle.prior.chunk();

  GenerationTrace trace;
  trace.generated.reserve(config.horizon);
  std::vector<double> history(context.begin(), context.end());
  ArState state = warmup(ar, context);

  while (trace.generated.size() < config.horizon) {
    const std::size_t len = std::min(chunk, config.horizon - trace.generated.size());
    const auto window = context_window(history, o);
    auto priors = predict_priors(bundle.prior, window, state.position);
    auto scores = predict_confidence(bundle.conf, window, priors.values);
    scores.values.resize(len);
    auto mask = accept_prefix(scores.values, config.epsilon);
    const std::size_t accepted = mask.accepted();

    ChunkDraft draft;
    draft.start_position = state.position;
    if (accepted > 0) {
      draft.heads = draft_pass(ar, state, std::span<const double>(priors.values).first(accepted));
      draft.drafted.resize(accepted);
      for (std::size_t k = 0; k < accepted; ++k) {
        const auto position = static_cast<std::uint64_t>(state.position) + k + 1;
        Rng rng = substream(config.seed, position, DrawPurpose::draft);
        draft.drafted[k] = checked(gaussian_sample(draft.heads[k], standard_normal(rng)));
      }
      ++trace.draft_passes;
      ++trace.sequential_rounds;
      trace.accepted_total += accepted;
      for (double x : draft.drafted) {
        state = advance(ar, state, x);
        history.push_back(x);
        trace.generated.push_back(x);
      }
    }
    if (accepted < len) {
      const auto position = static_cast<std::uint64_t>(state.position) + 1;
      const double x = resample_at(ar, state, config.seed, position);
      history.push_back(x);
      trace.generated.push_back(x);
      ++trace.resampled_total;
      ++trace.sequential_rounds;
    }

    if (config.record_chunks) {
      draft.priors = std::move(priors);
      draft.scores = std::move(scores);
      draft.mask = std::move(mask);
      trace.chunks.push_back(std::move(draft));
    }
  }
  trace.wall_ms = elapsed_ms(start);
  return trace;
}

GenerationTrace generate_pure_ar(const ArParams& ar, std::span<const double> context,
                                 std::size_t horizon, std::uint64_t seed) {
  if (context.empty()) throw Error("generation needs a non-empty context");
  const auto start = Clock::now();
  GenerationTrace trace;
  trace.generated.reserve(horizon);
  ArState state = warmup(ar, context);
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto position = static_cast<std::uint64_t>(state.position) + 1;
    trace.generated.push_back(resample_at(ar, state, seed, position));
    ++trace.resampled_total;
    ++trace.sequential_rounds;
  }
  trace.wall_ms = elapsed_ms(start);
  return trace;
}

}  // namespace nara
