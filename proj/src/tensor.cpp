#include "nara/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace nara {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw Error("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_product(shape_) != values_.size()) {
    throw Error("tensor value count does not match shape");
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) throw Error("tensor axis out of range");
  return shape_[axis];
}

void Tensor::fill(double value) noexcept { std::fill(values_.begin(), values_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::size_t total_size(const std::vector<const Tensor*>& tensors) {
  std::size_t n = 0;
  for (const Tensor* t : tensors) n += t->size();
  return n;
}

std::vector<double> flatten(const std::vector<const Tensor*>& tensors) {
  std::vector<double> flat;
  flat.reserve(total_size(tensors));
  for (const Tensor* t : tensors) flat.insert(flat.end(), t->values().begin(), t->values().end());
  return flat;
}

void unflatten(const std::vector<Tensor*>& tensors, std::span<const double> flat) {
  std::size_t offset = 0;
  for (Tensor* t : tensors) {
    if (offset + t->size() > flat.size()) throw Error("flat parameter vector too short");
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t->size(), t->data());
    offset += t->size();
  }
  if (offset != flat.size()) throw Error("flat parameter vector too long");
}

}  // namespace nara
