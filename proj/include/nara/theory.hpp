#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nara/rng.hpp"

namespace nara::theory {

using Symbol = int;

/// p(x_l | last `order` symbols) over an alphabet of `alphabet` symbols,
/// stored as [alphabet^order rows][alphabet] with strictly positive rows
/// summing to one.
struct ConditionalTable {
  std::size_t alphabet = 3;
  std::size_t order = 2;
  std::vector<double> probs;

  static ConditionalTable random(std::size_t alphabet, std::size_t order, Rng& rng);

  void validate() const;
  std::size_t rows() const noexcept { return probs.size() / alphabet; }
  /// Probability of `symbol` given the last `order` entries of `history`.
  double prob(std::span<const Symbol> history, Symbol symbol) const;
  /// Row index addressed by the last `order` entries of `history`.
  std::size_t row_of(std::span<const Symbol> history) const;
};

/// The exact AR model p_theta of the toy setting.
struct DiscreteAr {
  ConditionalTable table;
};

/// The approximate conditional q_phi(x_l | context, priors), read from the
/// last `order` symbols of context followed by the priors so far.
struct DiscreteQ {
  ConditionalTable table;
};

/// q_phi with phi = theta: the AR table reused on prior-filled histories.
DiscreteQ q_from_ar(const DiscreteAr& ar);

/// p(chunk | context) by the chain rule over the true history.
double ar_chunk_probability(const DiscreteAr& ar, std::span<const Symbol> context,
                            std::span<const Symbol> chunk);

/// p(x_1 | context) * prod_{l >= 2} q(x_l | context, priors_1..priors_{l-1}).
/// Needs at least chunk.size() - 1 priors.
double q_product(const DiscreteQ& q, const DiscreteAr& ar, std::span<const Symbol> context,
                 std::span<const Symbol> priors, std::span<const Symbol> chunk);
double log_q_product(const DiscreteQ& q, const DiscreteAr& ar, std::span<const Symbol> context,
                     std::span<const Symbol> priors, std::span<const Symbol> chunk);

/// Per-position ratios q(x_l | context, priors_<l) / p(x_l | context, x_<l)
/// (the first ratio is 1), and their summed logarithm, so that
/// q_product = p(chunk | context) * R.
struct RegularizerValue {
  double log_r = 0.0;
  std::vector<double> factors;
};

RegularizerValue regularizer(const DiscreteQ& q, const DiscreteAr& ar, std::span<const Symbol> context,
                             std::span<const Symbol> priors, std::span<const Symbol> chunk);

/// Full joint over all alphabet^length chunks, built as the outer product of
/// the per-position marginals of the approximate model (its factors do not
/// depend on earlier chunk symbols). Index is base-alphabet, first symbol most
/// significant.
std::vector<double> approximate_joint_table(const DiscreteQ& q, const DiscreteAr& ar,
                                            std::span<const Symbol> context, std::span<const Symbol> priors,
                                            std::size_t length);
std::size_t chunk_index(std::span<const Symbol> chunk, std::size_t alphabet);

inline constexpr std::size_t kMaxEnumeratedPaths = 729;  // 3^6

/// Exact expectations under p(chunk | context), chunk length priors + 1.
struct Decomposition {
  double nll_p = 0.0;   // E[-log p]
  double neg_log_r = 0.0;  // E[-log R]
  double nll_q = 0.0;   // E[-log q]
  double residual() const noexcept;
};

Decomposition objective_decomposition(const DiscreteQ& q, const DiscreteAr& ar,
                                      std::span<const Symbol> context, std::span<const Symbol> priors);

struct TheoryCheck {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool passed() const noexcept { return max_residual < tolerance; }
};

/// Randomized identity checks over `instances` draws (alphabet 3, order 2,
/// chunk length up to 4).
std::vector<TheoryCheck> run_theory_suite(std::uint64_t seed = kDefaultSeed, std::size_t instances = 100);

}  // namespace nara::theory
