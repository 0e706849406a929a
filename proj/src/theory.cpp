#include "nara/theory.hpp"

#include <algorithm>
#include <cmath>

#include "nara/tensor.hpp"

namespace nara::theory {

namespace {

std::vector<Symbol> concat(std::span<const Symbol> a, std::span<const Symbol> b) {
  std::vector<Symbol> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void require_positive(double p) {
  if (!(p > 0.0)) throw Error("zero-probability factor: tables must be strictly positive");
}

std::vector<Symbol> random_symbols(std::size_t n, std::size_t alphabet, Rng& rng) {
  std::uniform_int_distribution<Symbol> pick(0, static_cast<Symbol>(alphabet) - 1);
  std::vector<Symbol> out(n);
  for (auto& s : out) s = pick(rng);
  return out;
}

}  // namespace

ConditionalTable ConditionalTable::random(std::size_t alphabet, std::size_t order, Rng& rng) {
  ConditionalTable t;
  t.alphabet = alphabet;
  t.order = order;
  std::size_t rows = 1;
  for (std::size_t k = 0; k < order; ++k) rows *= alphabet;
  t.probs.resize(rows * alphabet);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t s = 0; s < alphabet; ++s) {
      const double w = uniform(rng, 0.05, 1.0);
      t.probs[r * alphabet + s] = w;
      sum += w;
    }
    for (std::size_t s = 0; s < alphabet; ++s) t.probs[r * alphabet + s] /= sum;
  }
  return t;
}

void ConditionalTable::validate() const {
  if (alphabet < 2) throw Error("alphabet needs at least 2 symbols");
  std::size_t expected = alphabet;
  for (std::size_t k = 0; k < order; ++k) expected *= alphabet;
  if (probs.size() != expected) throw Error("conditional table has the wrong size");
  for (std::size_t r = 0; r < rows(); ++r) {
    double sum = 0.0;
    for (std::size_t s = 0; s < alphabet; ++s) {
      require_positive(probs[r * alphabet + s]);
      sum += probs[r * alphabet + s];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw Error("conditional row does not sum to one");
  }
}

std::size_t ConditionalTable::row_of(std::span<const Symbol> history) const {
  if (history.size() < order) throw Error("history shorter than the table order");
  std::size_t row = 0;
  for (std::size_t k = history.size() - order; k < history.size(); ++k) {
    const Symbol s = history[k];
    if (s < 0 || static_cast<std::size_t>(s) >= alphabet) throw Error("symbol outside the alphabet");
    row = row * alphabet + static_cast<std::size_t>(s);
  }
  return row;
}

double ConditionalTable::prob(std::span<const Symbol> history, Symbol symbol) const {
  if (symbol < 0 || static_cast<std::size_t>(symbol) >= alphabet) throw Error("symbol outside the alphabet");
  return probs[row_of(history) * alphabet + static_cast<std::size_t>(symbol)];
}

DiscreteQ q_from_ar(const DiscreteAr& ar) { return {ar.table}; }

double ar_chunk_probability(const DiscreteAr& ar, std::span<const Symbol> context,
                            std::span<const Symbol> chunk) {
  std::vector<Symbol> history(context.begin(), context.end());
  double p = 1.0;
  for (Symbol s : chunk) {
    const double f = ar.table.prob(history, s);
    require_positive(f);
    p *= f;
    history.push_back(s);
  }
  return p;
}

double log_q_product(const DiscreteQ& q, const DiscreteAr& ar, std::span<const Symbol> context,
                     std::span<const Symbol> priors, std::span<const Symbol> chunk) {
  if (chunk.empty()) throw Error("chunk must be non-empty");
  if (priors.size() + 1 < chunk.size()) throw Error("not enough priors for the chunk");
  const double first = ar.table.prob(context, chunk[0]);
  require_positive(first);
  double log_q = std::log(first);
  for (std::size_t l = 1; l < chunk.size(); ++l) {
    const auto history = concat(context, priors.first(l));
    const double f = q.table.prob(history, chunk[l]);
    require_positive(f);
    log_q += std::log(f);
  }
  return log_q;
}

double q_product(const DiscreteQ& q, const DiscreteAr& ar, std::span<const Symbol> context,
                 std::span<const Symbol> priors, std::span<const Symbol> chunk) {
  if (chunk.empty()) throw Error("chunk must be non-empty");
  if (priors.size() + 1 < chunk.size()) throw Error("not enough priors for the chunk");
  double product = ar.table.prob(context, chunk[0]);
  require_positive(product);
  for (std::size_t l = 1; l < chunk.size(); ++l) {
    const double f = q.table.prob(concat(context, priors.first(l)), chunk[l]);
    require_positive(f);
    product *= f;
  }
  return product;
}

RegularizerValue regularizer(const DiscreteQ& q, const DiscreteAr& ar, std::span<const Symbol> context,
                             std::span<const Symbol> priors, std::span<const Symbol> chunk) {
  if (chunk.empty()) throw Error("chunk must be non-empty");
  if (priors.size() + 1 < chunk.size()) throw Error("not enough priors for the chunk");
  RegularizerValue r;
  r.factors.push_back(1.0);
  for (std::size_t l = 1; l < chunk.size(); ++l) {
    const double num = q.table.prob(concat(context, priors.first(l)), chunk[l]);
    const double den = ar.table.prob(concat(context, chunk.first(l)), chunk[l]);
    require_positive(num);
    require_positive(den);
    r.factors.push_back(num / den);
    r.log_r += std::log(num) - std::log(den);
  }
  return r;
}

std::size_t chunk_index(std::span<const Symbol> chunk, std::size_t alphabet) {
  std::size_t index = 0;
  for (Symbol s : chunk) index = index * alphabet + static_cast<std::size_t>(s);
  return index;
}

std::vector<double> approximate_joint_table(const DiscreteQ& q, const DiscreteAr& ar,
                                            std::span<const Symbol> context, std::span<const Symbol> priors,
                                            std::size_t length) {
  if (length == 0) throw Error("chunk must be non-empty");
  if (priors.size() + 1 < length) throw Error("not enough priors for the chunk");
  const std::size_t alphabet = ar.table.alphabet;
  std::vector<double> joint{1.0};
  for (std::size_t l = 0; l < length; ++l) {
    std::vector<double> marginal(alphabet);
    for (std::size_t s = 0; s < alphabet; ++s) {
      const auto sym = static_cast<Symbol>(s);
      marginal[s] = l == 0 ? ar.table.prob(context, sym) : q.table.prob(concat(context, priors.first(l)), sym);
    }
    std::vector<double> next(joint.size() * alphabet);
    for (std::size_t i = 0; i < joint.size(); ++i) {
      for (std::size_t s = 0; s < alphabet; ++s) next[i * alphabet + s] = joint[i] * marginal[s];
    }
    joint = std::move(next);
  }
  return joint;
}

double Decomposition::residual() const noexcept { return std::abs(nll_q - nll_p - neg_log_r); }

Decomposition objective_decomposition(const DiscreteQ& q, const DiscreteAr& ar,
                                      std::span<const Symbol> context, std::span<const Symbol> priors) {
  const std::size_t alphabet = ar.table.alphabet;
  const std::size_t length = priors.size() + 1;
  std::size_t paths = 1;
  for (std::size_t l = 0; l < length; ++l) {
    paths *= alphabet;
    if (paths > kMaxEnumeratedPaths) {
      throw Error("enumeration too large: alphabet^length must be <= " + std::to_string(kMaxEnumeratedPaths));
    }
  }
  Decomposition d;
  std::vector<Symbol> chunk(length, 0);
  for (std::size_t index = 0; index < paths; ++index) {
    std::size_t rest = index;
    for (std::size_t l = length; l-- > 0;) {
      chunk[l] = static_cast<Symbol>(rest % alphabet);
      rest /= alphabet;
    }
    const double p = ar_chunk_probability(ar, context, chunk);
    d.nll_p -= p * std::log(p);
    d.neg_log_r -= p * regularizer(q, ar, context, priors, chunk).log_r;
    d.nll_q -= p * log_q_product(q, ar, context, priors, chunk);
  }
  return d;
}

std::vector<TheoryCheck> run_theory_suite(std::uint64_t seed, std::size_t instances) {
  constexpr std::size_t alphabet = 3;
  constexpr std::size_t order = 2;
  TheoryCheck identity{"log q = log p + log R", 0.0, 1e-10};
  TheoryCheck identity_shared{"log q = log p + log R (phi = theta)", 0.0, 1e-10};
  TheoryCheck extremum{"log R = 0 at m = x, q = p", 0.0, 1e-12};
  TheoryCheck enumeration{"q_product matches joint enumeration (L <= 4)", 0.0, 1e-12};
  TheoryCheck normalization{"approximate joint sums to one", 0.0, 1e-12};
  TheoryCheck decomposition{"E[-log q] = E[-log p] + E[-log R]", 0.0, 1e-10};

  for (std::size_t n = 0; n < instances; ++n) {
    Rng rng(mix_seed(seed, n, 0x7E0));
    const DiscreteAr ar{ConditionalTable::random(alphabet, order, rng)};
    const DiscreteQ q{ConditionalTable::random(alphabet, order, rng)};
    const DiscreteQ shared = q_from_ar(ar);
    const std::size_t length = 1 + static_cast<std::size_t>(rng() % 4);
    const auto context = random_symbols(order + rng() % 3, alphabet, rng);
    const auto priors = random_symbols(length - 1, alphabet, rng);
    const auto chunk = random_symbols(length, alphabet, rng);

    const double log_p = std::log(ar_chunk_probability(ar, context, chunk));
    for (auto* check : {&identity, &identity_shared}) {
      const DiscreteQ& qq = check == &identity ? q : shared;
      const double log_q = std::log(q_product(qq, ar, context, priors, chunk));
      const double log_r = regularizer(qq, ar, context, priors, chunk).log_r;
      check->max_residual = std::max(check->max_residual, std::abs(log_q - log_p - log_r));
    }

    const double at_extremum = regularizer(shared, ar, context, std::span<const Symbol>(chunk).first(length - 1),
                                           chunk).log_r;
    extremum.max_residual = std::max(extremum.max_residual, std::abs(at_extremum));

    const auto joint = approximate_joint_table(q, ar, context, priors, length);
    double total = 0.0;
    for (double j : joint) total += j;
    normalization.max_residual = std::max(normalization.max_residual, std::abs(total - 1.0));
    enumeration.max_residual = std::max(
        enumeration.max_residual,
        std::abs(q_product(q, ar, context, priors, chunk) - joint[chunk_index(chunk, alphabet)]));

    const auto d = objective_decomposition(q, ar, context, priors);
    decomposition.max_residual = std::max(decomposition.max_residual, d.residual());
  }
  return {identity, identity_shared, extremum, enumeration, normalization, decomposition};
}

}  // namespace nara::theory
