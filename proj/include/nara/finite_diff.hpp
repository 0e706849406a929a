#pragma once

#include <functional>
#include <span>
#include <vector>

namespace nara {

using ScalarFunction = std::function<double(std::span<const double>)>;

/// three_point: (f(p + d) - f(p - d)) / 2d.
/// five_point: (-f(p + 2d) + 8 f(p + d) - 8 f(p - d) + f(p - 2d)) / 12d,
/// fourth-order accurate, which allows a larger step and so less round-off.
enum class Stencil { three_point, five_point };

/// Central differences, one coordinate at a time.
std::vector<double> finite_difference_gradient(const ScalarFunction& f,
                                               std::span<const double> params,
                                               double step = 1e-5,
                                               Stencil stencil = Stencil::three_point);

/// max_k |a_k - b_k| / max(|a_k|, |b_k|, floor). The floor keeps
/// coordinates whose true gradient is ~0 from dominating through
/// round-off in the numerical estimate.
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-6);

}  // namespace nara
