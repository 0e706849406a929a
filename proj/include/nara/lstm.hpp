#pragma once

#include <span>
#include <vector>

#include "nara/rng.hpp"
#include "nara/tensor.hpp"

namespace nara {

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;

  LstmState() = default;
  explicit LstmState(std::size_t hidden) : h(hidden, 0.0), c(hidden, 0.0) {}

  friend bool operator==(const LstmState&, const LstmState&) = default;
};

/// One LSTM layer. The four gates are packed row-wise in the order
/// input, forget, output, candidate:
///   z = W_x x + W_h h + b
///   i = sigmoid(z_i), f = sigmoid(z_f), o = sigmoid(z_o), g = tanh(z_g)
///   c' = f * c + i * g,  h' = o * tanh(c')
struct LstmCell {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Tensor input_weight;      // [4h, in]
  Tensor recurrent_weight;  // [4h, h]
  Tensor bias;              // [4h]

  LstmCell() = default;
  LstmCell(std::size_t inputs, std::size_t hidden);
  static LstmCell uniform(std::size_t inputs, std::size_t hidden, Rng& rng);

  std::vector<Tensor*> tensors() { return {&input_weight, &recurrent_weight, &bias}; }
  std::vector<const Tensor*> tensors() const { return {&input_weight, &recurrent_weight, &bias}; }

  friend bool operator==(const LstmCell&, const LstmCell&) = default;
};

inline constexpr std::size_t kGateInput = 0;
inline constexpr std::size_t kGateForget = 1;
inline constexpr std::size_t kGateOutput = 2;
inline constexpr std::size_t kGateCandidate = 3;

/// Everything the backward step needs from one forward step.
struct LstmStepCache {
  std::vector<double> input;
  std::vector<double> h_prev;
  std::vector<double> c_prev;
  std::vector<double> gates;  // activated, [4h]
  std::vector<double> c;
  std::vector<double> tanh_c;
};

/// Advances one step. The output vector of the layer is the returned `h`.
LstmState lstm_step(const LstmCell& cell, const LstmState& state, std::span<const double> input,
                    LstmStepCache* cache = nullptr);

/// Backward through one recorded step. `dh`/`dc` are gradients w.r.t. the
/// step's output state; writes gradients w.r.t. the previous state into
/// `dprev` (overwriting) and adds the input gradient into `dinput` when it is
/// non-empty. Parameter gradients accumulate into `grad`.
void lstm_step_backward(const LstmCell& cell, const LstmStepCache& cache,
                        std::span<const double> dh, std::span<const double> dc, LstmCell& grad,
                        LstmState& dprev, std::span<double> dinput);

double sigmoid(double x) noexcept;

}  // namespace nara
