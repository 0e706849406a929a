#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "nara/ar_model.hpp"
#include "nara/confidence.hpp"
#include "nara/prior.hpp"

namespace nara {

/// Affine map to zero mean / unit variance, fitted on training data.
struct Standardization {
  double mean = 0.0;
  double scale = 1.0;

  double apply(double x) const noexcept { return (x - mean) / scale; }
  double invert(double z) const noexcept { return z * scale + mean; }
  std::vector<double> apply(std::span<const double> xs) const;
  std::vector<double> invert(std::span<const double> zs) const;

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

struct ModelDims {
  std::size_t context = kDefaultContext;
  std::size_t chunk = kDefaultChunk;
  std::size_t hidden = kDefaultHidden;
  std::size_t layers = kDefaultLayers;
  std::size_t conf_hidden = kDefaultConfHidden;
};

/// The three parameter sets plus everything inference needs around them.
struct ModelBundle {
  ModelDims dims;
  ArParams ar;
  PriorParams prior;
  ConfParams conf;
  ThresholdCalibration calibration;
  Standardization standardization;
  bool ar_trained = false;
  bool prior_trained = false;
  bool conf_trained = false;
  std::map<std::string, std::string> config;  // echoed run configuration

  /// Random initialization from one seeded generator.
  static ModelBundle initialize(const ModelDims& dims, std::uint64_t seed);
};

}  // namespace nara
