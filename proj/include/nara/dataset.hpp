#pragma once

#include <cstdint>
#include <vector>

#include "nara/bundle.hpp"

namespace nara {

/// Generator ranges for the synthetic sinusoid corpus.
struct SinusoidParams {
  double amp_min = 0.5;
  double amp_max = 1.5;
  double freq_min = 0.01;  // cycles per step
  double freq_max = 0.05;
  double noise = 0.02;     // additive Gaussian noise std
  std::size_t length = 400;
  std::size_t count = 120;
  double val_fraction = 0.2;

  void validate() const;
};

/// A * sin(2 pi f t + phase) for t = 0 .. length - 1, noise-free.
std::vector<double> sinusoid(double amplitude, double frequency, double phase, std::size_t length);

struct SinusoidDataset {
  SinusoidParams params;
  std::uint64_t seed = kDefaultSeed;
  std::vector<std::size_t> train_ids;  // generator indices, disjoint from val_ids
  std::vector<std::size_t> val_ids;
  std::vector<std::vector<double>> raw_train;
  std::vector<std::vector<double>> raw_validation;
  std::vector<std::vector<double>> train;       // standardized
  std::vector<std::vector<double>> validation;  // standardized with training statistics
  Standardization stats;
};

SinusoidDataset make_sinusoids(const SinusoidParams& params, std::uint64_t seed);

}  // namespace nara
