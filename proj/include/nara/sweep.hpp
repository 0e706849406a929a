#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "nara/bundle.hpp"
#include "nara/parallel.hpp"

namespace nara {

struct SweepRow {
  double epsilon = 0.0;
  double acceptance_ratio_pct = 0.0;
  double mean_l1 = 0.0;  // raw (unstandardized) units
  std::size_t sequential_rounds = 0;
  std::size_t draft_passes = 0;
  double wall_ms = 0.0;
};

/// "start:stop:step" (inclusive, values rounded to 1e-12) or a comma list.
std::vector<double> parse_grid(std::string_view spec);

struct SweepOptions {
  std::vector<double> grid;
  std::size_t horizon = 100;
  std::uint64_t seed = kDefaultSeed;
  Execution execution = Execution::parallel;
};

/// For every epsilon and every standardized sequence: the first o samples
/// are the context, the next `horizon` the reference. Sequence s uses
/// generation seed mix_seed(seed, s, 0x5EE9) at every epsilon. Throws
/// "confidence predictor untrained" when the bundle has no trained
/// confidence predictor.
std::vector<SweepRow> run_sweep(const ModelBundle& bundle, const std::vector<std::vector<double>>& sequences,
                                const SweepOptions& options);

inline constexpr std::string_view kSweepHeader =
    "epsilon,acceptance_ratio_pct,mean_l1,sequential_rounds,draft_passes,wall_ms";

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

/// Self-contained SVG: mean l1 and acceptance ratio against epsilon.
void write_sweep_svg(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace nara
