#pragma once

namespace nara {

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

/// Conditional density of one scalar sample: N(mean, exp(log_var)).
struct GaussianHead {
  double mean = 0.0;
  double log_var = 0.0;

  friend bool operator==(const GaussianHead&, const GaussianHead&) = default;
};

double clamp_log_var(double raw) noexcept;

/// log N(x; mean, exp(log_var)). Throws "non-finite input" on NaN/Inf.
double gaussian_log_density(double x, const GaussianHead& head);

/// Gradient of -log N(x; head) with respect to (mean, log_var).
struct HeadGrad {
  double d_mean = 0.0;
  double d_log_var = 0.0;
};
HeadGrad gaussian_nll_grad(double x, const GaussianHead& head) noexcept;

/// mean + exp(log_var / 2) * z
double gaussian_sample(const GaussianHead& head, double standard_normal_draw) noexcept;

}  // namespace nara
