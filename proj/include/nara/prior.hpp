#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nara/dense.hpp"

namespace nara {

inline constexpr std::size_t kDefaultContext = 200;
inline constexpr std::size_t kDefaultChunk = 20;

/// Chunk-wise prior predictor: one fully-connected layer from the trailing
/// window of `window()` samples to `chunk()` prior values.
struct PriorParams {
  DenseLayer layer;

  static PriorParams zeros(std::size_t window = kDefaultContext, std::size_t chunk = kDefaultChunk);
  static PriorParams random(std::size_t window, std::size_t chunk, Rng& rng);

  std::size_t window() const noexcept { return layer.inputs(); }
  std::size_t chunk() const noexcept { return layer.outputs(); }

  std::vector<Tensor*> tensors() { return layer.tensors(); }
  std::vector<const Tensor*> tensors() const { return layer.tensors(); }
  std::vector<std::string> tensor_names() const { return {"prior.weight", "prior.bias"}; }

  friend bool operator==(const PriorParams&, const PriorParams&) = default;
};

struct PriorChunk {
  std::vector<double> values;
  std::int64_t source_position = 0;
};

/// Last `length` samples of `history`, left-padded with zeros when shorter.
std::vector<double> context_window(std::span<const double> history, std::size_t length);

PriorChunk predict_priors(const PriorParams& params, std::span<const double> window,
                          std::int64_t source_position = 0);

/// Mean |m - x| between priors predicted from every fully observed window
/// (positions o, o + M, ... with M future samples available) and the true
/// continuation.
double prior_l1(const PriorParams& params, const std::vector<std::vector<double>>& sequences);

}  // namespace nara
