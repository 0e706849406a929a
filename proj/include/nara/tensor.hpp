#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nara {

/// Single error type thrown across the library. Messages are part of the
/// contract where callers match on them ("diverged", "non-finite input").
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major array of doubles with a fixed shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  // Rank-2 element access.
  double& at(std::size_t row, std::size_t col) noexcept { return values_[row * shape_[1] + col]; }
  double at(std::size_t row, std::size_t col) const noexcept { return values_[row * shape_[1] + col]; }

  void fill(double value) noexcept;
  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

// Flat views over an ordered parameter list, used by the optimizer, the
// finite-difference checks and the checkpoint writer.
std::size_t total_size(const std::vector<const Tensor*>& tensors);
std::vector<double> flatten(const std::vector<const Tensor*>& tensors);
void unflatten(const std::vector<Tensor*>& tensors, std::span<const double> flat);

}  // namespace nara
