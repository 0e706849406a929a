#include "nara/prior.hpp"

#include <algorithm>
#include <cmath>

namespace nara {

PriorParams PriorParams::zeros(std::size_t window, std::size_t chunk) {
  return {DenseLayer(window, chunk)};
}

PriorParams PriorParams::random(std::size_t window, std::size_t chunk, Rng& rng) {
  return {DenseLayer::uniform(window, chunk, rng)};
}

std::vector<double> context_window(std::span<const double> history, std::size_t length) {
  std::vector<double> window(length, 0.0);
  const std::size_t take = std::min(length, history.size());
  std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(),
            window.end() - static_cast<std::ptrdiff_t>(take));
  return window;
}

PriorChunk predict_priors(const PriorParams& params, std::span<const double> window,
                          std::int64_t source_position) {
  if (window.size() != params.window()) throw Error("prior window has the wrong length");
  return {params.layer.forward(window), source_position};
}

double prior_l1(const PriorParams& params, const std::vector<std::vector<double>>& sequences) {
  const std::size_t o = params.window();
  const std::size_t m = params.chunk();
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& seq : sequences) {
    for (std::size_t v = o; v + m <= seq.size(); v += m) {
      const std::span<const double> s(seq);
      const auto priors = predict_priors(params, s.subspan(v - o, o)).values;
      for (std::size_t k = 0; k < m; ++k) total += std::abs(priors[k] - seq[v + k]);
      count += m;
    }
  }
  if (count == 0) throw Error("prior_l1 needs at least one evaluation window");
  return total / static_cast<double>(count);
}

}  // namespace nara
