#include "nara/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace nara {

void SinusoidParams::validate() const {
  if (!(amp_min > 0.0) || amp_max < amp_min) throw Error("invalid amplitude range");
  if (!(freq_min > 0.0) || freq_max < freq_min || freq_max >= 0.5) throw Error("invalid frequency range");
  if (!(noise >= 0.0)) throw Error("invalid noise level");
  if (length < 2) throw Error("sequence length must be >= 2");
  if (count < 2) throw Error("dataset needs at least 2 sequences");
  if (!(val_fraction > 0.0) || !(val_fraction < 1.0)) throw Error("val_fraction must lie in (0, 1)");
}

std::vector<double> sinusoid(double amplitude, double frequency, double phase, std::size_t length) {
  std::vector<double> x(length);
  for (std::size_t t = 0; t < length; ++t) {
    x[t] = amplitude * std::sin(2.0 * std::numbers::pi * frequency * static_cast<double>(t) + phase);
  }
  return x;
}

SinusoidDataset make_sinusoids(const SinusoidParams& params, std::uint64_t seed) {
  params.validate();
  SinusoidDataset ds;
  ds.params = params;
  ds.seed = seed;

  std::vector<std::vector<double>> raw(params.count);
  for (std::size_t i = 0; i < params.count; ++i) {
    Rng rng(mix_seed(seed, i, 0x51A5));
    const double amplitude = uniform(rng, params.amp_min, params.amp_max);
    const double frequency = uniform(rng, params.freq_min, params.freq_max);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    raw[i] = sinusoid(amplitude, frequency, phase, params.length);
    if (params.noise > 0.0) {
      for (double& x : raw[i]) x += params.noise * standard_normal(rng);
    }
  }

  std::vector<std::size_t> ids(params.count);
  std::iota(ids.begin(), ids.end(), 0);
  Rng split_rng(mix_seed(seed, 0x5E11));
  std::shuffle(ids.begin(), ids.end(), split_rng);
  const auto val_count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(params.val_fraction * static_cast<double>(params.count))), 1,
      params.count - 1);
  ds.val_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(val_count));
  ds.train_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(val_count), ids.end());
  std::sort(ds.val_ids.begin(), ds.val_ids.end());
  std::sort(ds.train_ids.begin(), ds.train_ids.end());
  for (std::size_t i : ds.train_ids) ds.raw_train.push_back(raw[i]);
  for (std::size_t i : ds.val_ids) ds.raw_validation.push_back(raw[i]);

  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : ds.raw_train) {
    sum += std::accumulate(s.begin(), s.end(), 0.0);
    n += s.size();
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& s : ds.raw_train) {
    for (double x : s) ss += (x - mean) * (x - mean);
  }
  ds.stats = {mean, std::sqrt(ss / static_cast<double>(n))};
  if (!(ds.stats.scale > 0.0)) throw Error("training data has zero variance");

  for (const auto& s : ds.raw_train) ds.train.push_back(ds.stats.apply(s));
  for (const auto& s : ds.raw_validation) ds.validation.push_back(ds.stats.apply(s));
  return ds;
}

}  // namespace nara
