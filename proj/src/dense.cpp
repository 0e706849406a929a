#include "nara/dense.hpp"

#include <cmath>

namespace nara {

namespace kernels {

void affine(std::span<const double> weight, std::span<const double> bias, std::size_t rows,
            std::size_t cols, std::span<const double> x, std::span<double> y) noexcept {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = weight.data() + r * cols;
    double acc = bias.empty() ? 0.0 : bias[r];
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    y[r] = acc;
  }
}

void affine_input_grad(std::span<const double> weight, std::size_t rows, std::size_t cols,
                       std::span<const double> dy, std::span<double> dx) noexcept {
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    const double* w = weight.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) dx[c] += w[c] * g;
  }
}

void affine_param_grad(std::size_t rows, std::size_t cols, std::span<const double> x,
                       std::span<const double> dy, std::span<double> dweight,
                       std::span<double> dbias) noexcept {
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    if (!dbias.empty()) dbias[r] += g;
    if (g == 0.0) continue;
    double* dw = dweight.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) dw[c] += g * x[c];
  }
}

}  // namespace kernels

DenseLayer::DenseLayer(std::size_t inputs, std::size_t outputs)
    : weight({outputs, inputs}), bias({outputs}) {}

DenseLayer DenseLayer::uniform(std::size_t inputs, std::size_t outputs, Rng& rng) {
  DenseLayer layer(inputs, outputs);
  const double bound = 1.0 / std::sqrt(static_cast<double>(inputs));
  for (double& w : layer.weight.values()) w = nara::uniform(rng, -bound, bound);
  for (double& b : layer.bias.values()) b = nara::uniform(rng, -bound, bound);
  return layer;
}

void DenseLayer::forward(std::span<const double> x, std::span<double> y) const {
  if (x.size() != inputs() || y.size() != outputs()) throw Error("dense layer shape mismatch");
  kernels::affine(weight.values(), bias.values(), outputs(), inputs(), x, y);
}

std::vector<double> DenseLayer::forward(std::span<const double> x) const {
  std::vector<double> y(outputs());
  forward(x, y);
  return y;
}

void DenseLayer::backward(std::span<const double> x, std::span<const double> dy, DenseLayer& grad,
                          std::span<double> dx) const {
  if (x.size() != inputs() || dy.size() != outputs() || !grad.weight.same_shape(weight)) {
    throw Error("dense layer shape mismatch");
  }
  kernels::affine_param_grad(outputs(), inputs(), x, dy, grad.weight.values(), grad.bias.values());
  if (!dx.empty()) {
    if (dx.size() != inputs()) throw Error("dense layer shape mismatch");
    kernels::affine_input_grad(weight.values(), outputs(), inputs(), dy, dx);
  }
}

}  // namespace nara
