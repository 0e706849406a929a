#include "nara/gaussian.hpp"

#include <algorithm>
#include <cmath>

#include "nara/tensor.hpp"

namespace nara {

double clamp_log_var(double raw) noexcept { return std::clamp(raw, kLogVarMin, kLogVarMax); }

double gaussian_log_density(double x, const GaussianHead& head) {
  if (!std::isfinite(x) || !std::isfinite(head.mean) || !std::isfinite(head.log_var)) {
    throw Error("non-finite input");
  }
  if (head.log_var < kLogVarMin || head.log_var > kLogVarMax) {
    throw Error("log-variance outside clamp bounds");
  }
  const double d = x - head.mean;
  return -kHalfLog2Pi - 0.5 * head.log_var - d * d / (2.0 * std::exp(head.log_var));
}

HeadGrad gaussian_nll_grad(double x, const GaussianHead& head) noexcept {
  const double inv_var = std::exp(-head.log_var);
  const double d = x - head.mean;
  return {-d * inv_var, 0.5 - 0.5 * d * d * inv_var};
}

double gaussian_sample(const GaussianHead& head, double standard_normal_draw) noexcept {
  return head.mean + std::exp(0.5 * head.log_var) * standard_normal_draw;
}

}  // namespace nara
