#include "nara/ar_model.hpp"

#include <cmath>

namespace nara {

namespace {

GaussianHead head_from(const DenseLayer& head, std::span<const double> top_h, double* raw_log_var) {
  double raw[2];
  head.forward(top_h, raw);
  if (raw_log_var != nullptr) *raw_log_var = raw[1];
  return {raw[0], clamp_log_var(raw[1])};
}

std::vector<LstmState> step_layers(const ArParams& params, const std::vector<LstmState>& layers,
                                   double x, std::vector<LstmStepCache>* caches) {
  std::vector<LstmState> next;
  next.reserve(layers.size());
  const double scalar[1] = {x};
  std::span<const double> input(scalar, 1);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    LstmStepCache* cache = caches != nullptr ? &(*caches)[l] : nullptr;
    next.push_back(lstm_step(params.layers[l], layers[l], input, cache));
    input = next.back().h;
  }
  return next;
}

}  // namespace

ArParams ArParams::zeros(std::size_t hidden, std::size_t num_layers) {
  if (hidden == 0 || num_layers == 0) throw Error("AR model needs at least one non-empty layer");
  ArParams p;
  for (std::size_t l = 0; l < num_layers; ++l) p.layers.emplace_back(l == 0 ? 1 : hidden, hidden);
  p.head = DenseLayer(hidden, 2);
  return p;
}

ArParams ArParams::random(std::size_t hidden, std::size_t num_layers, Rng& rng) {
  if (hidden == 0 || num_layers == 0) throw Error("AR model needs at least one non-empty layer");
  ArParams p;
  for (std::size_t l = 0; l < num_layers; ++l) {
    p.layers.push_back(LstmCell::uniform(l == 0 ? 1 : hidden, hidden, rng));
  }
  p.head = DenseLayer::uniform(hidden, 2, rng);
  return p;
}

std::vector<Tensor*> ArParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& cell : layers) {
    for (Tensor* t : cell.tensors()) out.push_back(t);
  }
  for (Tensor* t : head.tensors()) out.push_back(t);
  return out;
}

std::vector<const Tensor*> ArParams::tensors() const {
  std::vector<const Tensor*> out;
  for (const auto& cell : layers) {
    for (const Tensor* t : cell.tensors()) out.push_back(t);
  }
  for (const Tensor* t : head.tensors()) out.push_back(t);
  return out;
}

std::vector<std::string> ArParams::tensor_names() const {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "ar.lstm" + std::to_string(l) + ".";
    names.push_back(prefix + "input_weight");
    names.push_back(prefix + "recurrent_weight");
    names.push_back(prefix + "bias");
  }
  names.emplace_back("ar.head.weight");
  names.emplace_back("ar.head.bias");
  return names;
}

ArParams ArParams::zeros_like() const {
  ArParams z = *this;
  for (Tensor* t : z.tensors()) t->fill(0.0);
  return z;
}

void ArParams::add(const ArParams& other) {
  auto dst = tensors();
  auto src = other.tensors();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    double* d = dst[k]->data();
    const double* s = src[k]->data();
    for (std::size_t i = 0; i < dst[k]->size(); ++i) d[i] += s[i];
  }
}

void ArParams::scale(double factor) {
  for (Tensor* t : tensors()) {
    for (double& v : t->values()) v *= factor;
  }
}

std::vector<LstmState> blank_layers(const ArParams& params) {
  return std::vector<LstmState>(params.layers.size(), LstmState(params.hidden_size()));
}

ArState start_state(const ArParams& params) {
  return {step_layers(params, blank_layers(params), 0.0, nullptr), 0};
}

ArState advance(const ArParams& params, const ArState& state, double x) {
  return {step_layers(params, state.layers, x, nullptr), state.position + 1};
}

ArState warmup(const ArParams& params, std::span<const double> context) {
  if (context.empty()) throw Error("warmup needs a non-empty context");
  ArState state = start_state(params);
  for (double x : context) state = advance(params, state, x);
  return state;
}

GaussianHead next_dist(const ArParams& params, const ArState& state) {
  return head_from(params.head, state.layers.back().h, nullptr);
}

SampleResult sample_next(const ArParams& params, const ArState& state, Rng& rng) {
  const double x = gaussian_sample(next_dist(params, state), standard_normal(rng));
  return {x, advance(params, state, x)};
}

double continuation_nll(const ArParams& params, const ArState& state, std::span<const double> suffix) {
  double nll = 0.0;
  ArState s = state;
  for (std::size_t t = 0; t < suffix.size(); ++t) {
    nll -= gaussian_log_density(suffix[t], next_dist(params, s));
    if (t + 1 < suffix.size()) s = advance(params, s, suffix[t]);
  }
  return nll;
}

double sequence_nll(const ArParams& params, std::span<const double> x) {
  if (x.empty()) throw Error("sequence must be non-empty");
  return continuation_nll(params, start_state(params), x);
}

std::vector<GaussianHead> draft_pass(const ArParams& params, const ArState& state,
                                     std::span<const double> priors) {
  if (priors.empty()) throw Error("draft pass needs at least one prior");
  std::vector<GaussianHead> heads;
  heads.reserve(priors.size());
  heads.push_back(next_dist(params, state));
  ArState s = state;
  for (std::size_t l = 1; l < priors.size(); ++l) {
    s = advance(params, s, priors[l - 1]);
    heads.push_back(next_dist(params, s));
  }
  return heads;
}

ArTape::ArTape(const ArParams& params, std::vector<LstmState> init, std::span<const double> inputs)
    : hidden_(params.hidden_size()) {
  if (init.size() != params.layers.size()) throw Error("tape initial state has wrong depth");
  const std::size_t steps = inputs.size();
  caches_.resize(steps, std::vector<LstmStepCache>(params.layers.size()));
  states_.reserve(steps);
  raw_log_var_.resize(steps);
  heads_.reserve(steps);
  const std::vector<LstmState>* prev = &init;
  for (std::size_t t = 0; t < steps; ++t) {
    states_.push_back(step_layers(params, *prev, inputs[t], &caches_[t]));
    heads_.push_back(head_from(params.head, states_.back().back().h, &raw_log_var_[t]));
    prev = &states_.back();
  }
}

std::vector<LstmState> ArTape::backward(const ArParams& params, std::span<const HeadGrad> head_grads,
                                        std::span<const StateGrad> injected, ArParams& grad,
                                        std::span<double> d_inputs) const {
  if (steps() == 0) throw Error("backward called before any forward step was recorded");
  if (head_grads.size() != steps()) throw Error("head gradient count does not match tape length");
  if (!d_inputs.empty() && d_inputs.size() != steps()) throw Error("input gradient size mismatch");

  const std::size_t depth = params.layers.size();
  std::vector<LstmState> dstate(depth, LstmState(hidden_));
  LstmState dprev(hidden_);
  std::vector<double> dtop(hidden_);

  for (std::size_t t = steps(); t-- > 0;) {
    for (const StateGrad& inj : injected) {
      if (inj.step != t) continue;
      for (std::size_t l = 0; l < depth; ++l) {
        for (std::size_t j = 0; j < hidden_; ++j) {
          dstate[l].h[j] += inj.grad[l].h[j];
          dstate[l].c[j] += inj.grad[l].c[j];
        }
      }
    }

    const HeadGrad& hg = head_grads[t];
    const bool in_range = raw_log_var_[t] >= kLogVarMin && raw_log_var_[t] <= kLogVarMax;
    const double draw[2] = {hg.d_mean, in_range ? hg.d_log_var : 0.0};
    if (draw[0] != 0.0 || draw[1] != 0.0) {
      std::fill(dtop.begin(), dtop.end(), 0.0);
      params.head.backward(states_[t].back().h, draw, grad.head, dtop);
      for (std::size_t j = 0; j < hidden_; ++j) dstate.back().h[j] += dtop[j];
    }

    for (std::size_t l = depth; l-- > 0;) {
      const LstmStepCache& cache = caches_[t][l];
      std::span<double> dinput;
      if (l > 0) {
        dinput = dstate[l - 1].h;
      } else if (!d_inputs.empty()) {
        dinput = d_inputs.subspan(t, 1);
      }
      lstm_step_backward(params.layers[l], cache, dstate[l].h, dstate[l].c, grad.layers[l], dprev,
                         dinput);
      std::swap(dstate[l], dprev);
    }
  }
  return dstate;
}

double sequence_nll_with_grad(const ArParams& params, std::span<const double> x, ArParams& grad) {
  if (x.empty()) throw Error("sequence must be non-empty");
  std::vector<double> inputs(x.size());
  inputs[0] = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) inputs[t] = x[t - 1];
  ArTape tape(params, blank_layers(params), inputs);
  std::vector<HeadGrad> head_grads(x.size());
  double nll = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    nll -= gaussian_log_density(x[t], tape.head(t));
    head_grads[t] = gaussian_nll_grad(x[t], tape.head(t));
  }
  tape.backward(params, head_grads, {}, grad, {});
  return nll;
}

}  // namespace nara
