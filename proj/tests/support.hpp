#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "nara/ar_model.hpp"
#include "nara/bundle.hpp"
#include "nara/rng.hpp"

namespace nara::test {

inline std::vector<double> random_values(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform(rng, -scale, scale);
  return v;
}

/// Small random bundle flagged as fully trained, with a quantile calibration
/// built from a synthetic stream, for engine and CLI tests.
inline ModelBundle small_bundle(std::uint64_t seed, std::size_t context = 12, std::size_t chunk = 4) {
  ModelDims dims;
  dims.context = context;
  dims.chunk = chunk;
  dims.hidden = 6;
  dims.layers = 2;
  dims.conf_hidden = 5;
  ModelBundle b = ModelBundle::initialize(dims, seed);
  Rng rng(seed + 1);
  std::vector<double> stream(200);
  for (auto& x : stream) x = uniform(rng, -3.0, 1.0);
  b.calibration = ThresholdCalibration(CalibrationMode::quantile);
  b.calibration.observe(stream);
  b.ar_trained = b.prior_trained = b.conf_trained = true;
  return b;
}

inline double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Independent scalar LSTM step written from the gate equations.
inline LstmState lstm_reference(const LstmCell& cell, const LstmState& s, const std::vector<double>& x) {
  const std::size_t h = cell.hidden_size;
  LstmState out(h);
  for (std::size_t j = 0; j < h; ++j) {
    double z[4];
    for (std::size_t g = 0; g < 4; ++g) {
      const std::size_t row = g * h + j;
      double acc = cell.bias[row];
      for (std::size_t i = 0; i < x.size(); ++i) acc += cell.input_weight.at(row, i) * x[i];
      for (std::size_t i = 0; i < h; ++i) acc += cell.recurrent_weight.at(row, i) * s.h[i];
      z[g] = acc;
    }
    const double ig = sigmoid_ref(z[0]), fg = sigmoid_ref(z[1]), og = sigmoid_ref(z[2]), cg = std::tanh(z[3]);
    out.c[j] = fg * s.c[j] + ig * cg;
    out.h[j] = og * std::tanh(out.c[j]);
  }
  return out;
}

/// Independent AR forward: layers of lstm_reference, head read from the top
/// hidden state, log-variance clamped.
struct ReferenceAr {
  const ArParams& p;
  std::vector<LstmState> layers;

  explicit ReferenceAr(const ArParams& params) : p(params) {
    for (const auto& c : p.layers) layers.emplace_back(c.hidden_size);
    feed(0.0);
  }
  void feed(double x) {
    std::vector<double> in{x};
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      layers[l] = lstm_reference(p.layers[l], layers[l], in);
      in = layers[l].h;
    }
  }
  std::pair<double, double> head() const {
    const auto& h = layers.back().h;
    double out[2];
    for (std::size_t r = 0; r < 2; ++r) {
      out[r] = p.head.bias[r];
      for (std::size_t i = 0; i < h.size(); ++i) out[r] += p.head.weight.at(r, i) * h[i];
    }
    return {out[0], std::clamp(out[1], -10.0, 10.0)};
  }
  double nll(double x) const {
    const auto [mu, lv] = head();
    return 0.5 * std::log(2.0 * M_PI) + 0.5 * lv + 0.5 * (x - mu) * (x - mu) / std::exp(lv);
  }
};

}  // namespace nara::test
