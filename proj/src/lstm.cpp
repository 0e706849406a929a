#include "nara/lstm.hpp"

#include <cmath>

#include "nara/dense.hpp"

namespace nara {

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LstmCell::LstmCell(std::size_t inputs, std::size_t hidden)
    : input_size(inputs),
      hidden_size(hidden),
      input_weight({4 * hidden, inputs}),
      recurrent_weight({4 * hidden, hidden}),
      bias({4 * hidden}) {}

LstmCell LstmCell::uniform(std::size_t inputs, std::size_t hidden, Rng& rng) {
  LstmCell cell(inputs, hidden);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Tensor* t : cell.tensors()) {
    for (double& v : t->values()) v = nara::uniform(rng, -bound, bound);
  }
  return cell;
}

LstmState lstm_step(const LstmCell& cell, const LstmState& state, std::span<const double> input,
                    LstmStepCache* cache) {
  const std::size_t h = cell.hidden_size;
  if (input.size() != cell.input_size) throw Error("lstm input size mismatch");
  if (state.h.size() != h || state.c.size() != h) throw Error("lstm state size mismatch");

  std::vector<double> z(4 * h);
  kernels::affine(cell.input_weight.values(), cell.bias.values(), 4 * h, cell.input_size, input, z);
  std::vector<double> zh(4 * h);
  kernels::affine(cell.recurrent_weight.values(), {}, 4 * h, h, state.h, zh);

  LstmState next(h);
  std::vector<double> tanh_c(h);
  for (std::size_t j = 0; j < h; ++j) {
    const double i = sigmoid(z[kGateInput * h + j] + zh[kGateInput * h + j]);
    const double f = sigmoid(z[kGateForget * h + j] + zh[kGateForget * h + j]);
    const double o = sigmoid(z[kGateOutput * h + j] + zh[kGateOutput * h + j]);
    const double g = std::tanh(z[kGateCandidate * h + j] + zh[kGateCandidate * h + j]);
    z[kGateInput * h + j] = i;
    z[kGateForget * h + j] = f;
    z[kGateOutput * h + j] = o;
    z[kGateCandidate * h + j] = g;
    next.c[j] = f * state.c[j] + i * g;
    tanh_c[j] = std::tanh(next.c[j]);
    next.h[j] = o * tanh_c[j];
  }

  if (cache != nullptr) {
    cache->input.assign(input.begin(), input.end());
    cache->h_prev = state.h;
    cache->c_prev = state.c;
    cache->gates = std::move(z);
    cache->c = next.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

void lstm_step_backward(const LstmCell& cell, const LstmStepCache& cache,
                        std::span<const double> dh, std::span<const double> dc, LstmCell& grad,
                        LstmState& dprev, std::span<double> dinput) {
  const std::size_t h = cell.hidden_size;
  if (cache.gates.size() != 4 * h) throw Error("lstm backward called without a recorded step");
  if (dh.size() != h || dc.size() != h) throw Error("lstm gradient size mismatch");

  std::vector<double> dz(4 * h);
  dprev.c.assign(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    const double i = cache.gates[kGateInput * h + j];
    const double f = cache.gates[kGateForget * h + j];
    const double o = cache.gates[kGateOutput * h + j];
    const double g = cache.gates[kGateCandidate * h + j];
    const double tc = cache.tanh_c[j];
    const double dc_total = dc[j] + dh[j] * o * (1.0 - tc * tc);
    dz[kGateInput * h + j] = dc_total * g * i * (1.0 - i);
    dz[kGateForget * h + j] = dc_total * cache.c_prev[j] * f * (1.0 - f);
    dz[kGateOutput * h + j] = dh[j] * tc * o * (1.0 - o);
    dz[kGateCandidate * h + j] = dc_total * i * (1.0 - g * g);
    dprev.c[j] = dc_total * f;
  }

  kernels::affine_param_grad(4 * h, cell.input_size, cache.input, dz, grad.input_weight.values(),
                             grad.bias.values());
  kernels::affine_param_grad(4 * h, h, cache.h_prev, dz, grad.recurrent_weight.values(), {});
  dprev.h.assign(h, 0.0);
  kernels::affine_input_grad(cell.recurrent_weight.values(), 4 * h, h, dz, dprev.h);
  if (!dinput.empty()) {
    kernels::affine_input_grad(cell.input_weight.values(), 4 * h, cell.input_size, dz, dinput);
  }
}

}  // namespace nara
