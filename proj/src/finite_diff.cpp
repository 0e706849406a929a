#include "nara/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "nara/tensor.hpp"

namespace nara {

std::vector<double> finite_difference_gradient(const ScalarFunction& f,
                                               std::span<const double> params, double step,
                                               Stencil stencil) {
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> grad(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double saved = p[k];
    auto at = [&](double offset) {
      p[k] = saved + offset;
      const double value = f(p);
      p[k] = saved;
      return value;
    };
    if (stencil == Stencil::three_point) {
      grad[k] = (at(step) - at(-step)) / (2.0 * step);
    } else {
      grad[k] = (8.0 * (at(step) - at(-step)) - (at(2.0 * step) - at(-2.0 * step))) / (12.0 * step);
    }
  }
  return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw Error("gradient length mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a[k]), std::abs(b[k]), floor});
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

}  // namespace nara
