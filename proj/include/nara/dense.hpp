#pragma once

#include <span>
#include <string>
#include <vector>

#include "nara/rng.hpp"
#include "nara/tensor.hpp"

namespace nara {

// y = weight * x + bias, written out explicitly so the inner loops stay
// contiguous for the compiler. These are the only matrix kernels in the
// library; everything larger is built on top of them.
namespace kernels {
void affine(std::span<const double> weight, std::span<const double> bias, std::size_t rows,
            std::size_t cols, std::span<const double> x, std::span<double> y) noexcept;
// dx += weight^T * dy
void affine_input_grad(std::span<const double> weight, std::size_t rows, std::size_t cols,
                       std::span<const double> dy, std::span<double> dx) noexcept;
// dweight += dy * x^T, dbias += dy
void affine_param_grad(std::size_t rows, std::size_t cols, std::span<const double> x,
                       std::span<const double> dy, std::span<double> dweight,
                       std::span<double> dbias) noexcept;
}  // namespace kernels

struct DenseLayer {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]

  DenseLayer() = default;
  DenseLayer(std::size_t inputs, std::size_t outputs);

  /// PyTorch-style init: U(-1/sqrt(in), 1/sqrt(in)) for weights and biases.
  static DenseLayer uniform(std::size_t inputs, std::size_t outputs, Rng& rng);

  std::size_t inputs() const noexcept { return weight.shape().empty() ? 0 : weight.dim(1); }
  std::size_t outputs() const noexcept { return bias.size(); }

  void forward(std::span<const double> x, std::span<double> y) const;
  std::vector<double> forward(std::span<const double> x) const;

  /// Accumulates d(loss)/d(weight, bias) into `grad` and, when `dx` is
  /// non-empty, adds the input gradient into it.
  void backward(std::span<const double> x, std::span<const double> dy, DenseLayer& grad,
                std::span<double> dx) const;

  std::vector<Tensor*> tensors() { return {&weight, &bias}; }
  std::vector<const Tensor*> tensors() const { return {&weight, &bias}; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

}  // namespace nara
