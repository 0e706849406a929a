#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nara/finite_diff.hpp"

namespace nara {

inline constexpr double kGradTolerance = 1e-4;
inline constexpr std::size_t kGradSeeds = 5;
inline constexpr double kGradStep = 1e-3;

/// A scalar loss over a flat parameter vector together with its analytic
/// gradient.
struct GradCheckCase {
  std::string name;
  std::vector<double> params;
  ScalarFunction loss;
  std::function<std::vector<double>(std::span<const double>)> analytic;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = kGradTolerance;
  std::size_t seeds = 0;

  bool passed() const noexcept { return max_rel_error < tolerance; }
};

GradCheckResult run_grad_check(const GradCheckCase& c, double tolerance = kGradTolerance);

/// One instance per differentiable op: gaussian_nll, dense, lstm_step,
/// two_layer_net, ar_sequence_nll, joint_loss, confidence_bce.
std::vector<GradCheckCase> standard_grad_cases(std::uint64_t seed);

/// Worst relative error per op over `seeds` seeds. When `inject_fault`
/// names an op, its analytic gradient is deliberately corrupted so the
/// check must fail.
std::vector<GradCheckResult> run_grad_suite(std::uint64_t seed = 0, std::size_t seeds = kGradSeeds,
                                            const std::string& inject_fault = {});

}  // namespace nara
