#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nara/dense.hpp"
#include "nara/gaussian.hpp"
#include "nara/lstm.hpp"
#include "nara/rng.hpp"

namespace nara {

inline constexpr std::size_t kDefaultHidden = 51;
inline constexpr std::size_t kDefaultLayers = 2;

/// Parameters of the base autoregressive model: a stack of LSTM layers over
/// scalar inputs and a Gaussian head reading the top hidden state. The first
/// layer's input weights act as the scalar-to-vector input projection.
struct ArParams {
  std::vector<LstmCell> layers;
  DenseLayer head;  // hidden -> (mean, raw log-variance)

  static ArParams zeros(std::size_t hidden = kDefaultHidden, std::size_t num_layers = kDefaultLayers);
  static ArParams random(std::size_t hidden, std::size_t num_layers, Rng& rng);

  std::size_t hidden_size() const noexcept { return layers.empty() ? 0 : layers.front().hidden_size; }

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<std::string> tensor_names() const;

  /// Zero tensors with the same layout, for gradient accumulation.
  ArParams zeros_like() const;
  void add(const ArParams& other);
  void scale(double factor);

  friend bool operator==(const ArParams&, const ArParams&) = default;
};

/// Recurrent state after consuming the start token and `position` samples.
struct ArState {
  std::vector<LstmState> layers;
  std::int64_t position = 0;

  friend bool operator==(const ArState&, const ArState&) = default;
};

/// Layer states before anything (including the start token) is consumed.
std::vector<LstmState> blank_layers(const ArParams& params);

/// State after the constant start input 0; its head predicts sample 1.
ArState start_state(const ArParams& params);

/// Feeds one known sample through every layer.
ArState advance(const ArParams& params, const ArState& state, double x);

/// Teacher-forced pass over a non-empty context.
ArState warmup(const ArParams& params, std::span<const double> context);

GaussianHead next_dist(const ArParams& params, const ArState& state);

struct SampleResult {
  double value = 0.0;
  ArState state;
};

/// Draws one value from next_dist with a single standard-normal draw from
/// `rng`, then feeds it back. One sequential sampling round.
SampleResult sample_next(const ArParams& params, const ArState& state, Rng& rng);

/// -sum_t log p(x_t | x_<t) under teacher forcing, x_1 conditioned on the
/// start token.
double sequence_nll(const ArParams& params, std::span<const double> x);

/// -sum log p of `suffix` continuing from `state`.
double continuation_nll(const ArParams& params, const ArState& state, std::span<const double> suffix);

/// Prior-conditioned heads for one chunk: head 0 is next_dist(state) and head
/// l > 0 is conditioned on the context state plus priors[0..l-1]. The last
/// prior is never consumed. No sampled value enters the recurrence.
std::vector<GaussianHead> draft_pass(const ArParams& params, const ArState& state,
                                     std::span<const double> priors);

/// Gradient w.r.t. the state after a tape step, per layer (h and c).
struct StateGrad {
  std::size_t step = 0;
  std::vector<LstmState> grad;
};

/// Recorded forward pass over known inputs, for backpropagation through time.
/// heads[t] is the conditional produced after consuming inputs[t].
class ArTape {
 public:
  ArTape(const ArParams& params, std::vector<LstmState> init, std::span<const double> inputs);

  std::size_t steps() const noexcept { return heads_.size(); }
  const GaussianHead& head(std::size_t t) const { return heads_.at(t); }
  std::span<const GaussianHead> heads() const noexcept { return heads_; }
  const std::vector<LstmState>& states_after(std::size_t t) const { return states_.at(t); }

  /// Accumulates parameter gradients into `grad` given per-step head
  /// gradients (d loss / d(mean, log_var); entries may be zero) and optional
  /// injected state gradients. Input gradients are added into `d_inputs`
  /// when non-empty. Returns the gradient w.r.t. the initial layer states.
  std::vector<LstmState> backward(const ArParams& params, std::span<const HeadGrad> head_grads,
                                  std::span<const StateGrad> injected, ArParams& grad,
                                  std::span<double> d_inputs) const;

 private:
  std::size_t hidden_ = 0;
  std::vector<std::vector<LstmStepCache>> caches_;  // [step][layer]
  std::vector<std::vector<LstmState>> states_;      // [step][layer]
  std::vector<double> raw_log_var_;
  std::vector<GaussianHead> heads_;
};

/// sequence_nll plus its gradient accumulated into `grad`.
double sequence_nll_with_grad(const ArParams& params, std::span<const double> x, ArParams& grad);

}  // namespace nara
