#include "nara/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "nara/ar_model.hpp"
#include "nara/confidence.hpp"
#include "nara/dense.hpp"
#include "nara/gaussian.hpp"
#include "nara/lstm.hpp"
#include "nara/prior.hpp"
#include "nara/trainer.hpp"

namespace nara {

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform(rng, -scale, scale);
  return v;
}

// Copies a parameter struct, overwrites its tensors from a flat vector.
template <class Params>
Params with_values(const Params& like, std::span<const double> flat) {
  Params p = like;
  unflatten(p.tensors(), flat);
  return p;
}

template <class Params>
std::vector<double> flat_of(const Params& p) {
  return flatten(p.tensors());
}

GradCheckCase gaussian_case(Rng& rng) {
  const double x = uniform(rng, -2.0, 2.0);
  GradCheckCase c;
  c.name = "gaussian_nll";
  c.params = {uniform(rng, -1.0, 1.0), uniform(rng, -2.0, 2.0)};
  c.loss = [x](std::span<const double> p) { return -gaussian_log_density(x, {p[0], p[1]}); };
  c.analytic = [x](std::span<const double> p) {
    const auto g = gaussian_nll_grad(x, {p[0], p[1]});
    return std::vector<double>{g.d_mean, g.d_log_var};
  };
  return c;
}

GradCheckCase dense_case(Rng& rng) {
  constexpr std::size_t in = 5, out = 3;
  const DenseLayer like = DenseLayer::uniform(in, out, rng);
  const auto weights = random_vector(out, rng);
  const std::size_t np = like.weight.size() + like.bias.size();
  GradCheckCase c;
  c.name = "dense";
  c.params = flat_of(like);
  const auto x0 = random_vector(in, rng);
  c.params.insert(c.params.end(), x0.begin(), x0.end());
  c.loss = [=](std::span<const double> p) {
    const auto layer = with_values(like, p.first(np));
    const auto y = layer.forward(p.subspan(np));
    double s = 0.0;
    for (std::size_t i = 0; i < out; ++i) s += weights[i] * y[i];
    return s;
  };
  c.analytic = [=](std::span<const double> p) {
    const auto layer = with_values(like, p.first(np));
    DenseLayer grad(in, out);
    std::vector<double> dx(in, 0.0);
    layer.backward(p.subspan(np), weights, grad, dx);
    auto g = flat_of(grad);
    g.insert(g.end(), dx.begin(), dx.end());
    return g;
  };
  return c;
}

GradCheckCase lstm_case(Rng& rng) {
  constexpr std::size_t in = 3, hid = 4;
  const LstmCell like = LstmCell::uniform(in, hid, rng);
  const auto wh = random_vector(hid, rng);
  const auto wc = random_vector(hid, rng);
  const std::size_t np = total_size({&like.input_weight, &like.recurrent_weight, &like.bias});
  GradCheckCase c;
  c.name = "lstm_step";
  c.params = flat_of(like);
  for (std::size_t n : {hid, hid, in}) {
    const auto v = random_vector(n, rng);
    c.params.insert(c.params.end(), v.begin(), v.end());
  }
  auto unpack = [=](std::span<const double> p, LstmState& s) {
    s = LstmState(hid);
    std::copy_n(p.begin() + np, hid, s.h.begin());
    std::copy_n(p.begin() + np + hid, hid, s.c.begin());
    return with_values(like, p.first(np));
  };
  c.loss = [=](std::span<const double> p) {
    LstmState s;
    const auto cell = unpack(p, s);
    const auto next = lstm_step(cell, s, p.subspan(np + 2 * hid));
    double total = 0.0;
    for (std::size_t j = 0; j < hid; ++j) total += wh[j] * next.h[j] + wc[j] * next.c[j];
    return total;
  };
  c.analytic = [=](std::span<const double> p) {
    LstmState s;
    const auto cell = unpack(p, s);
    LstmStepCache cache;
    lstm_step(cell, s, p.subspan(np + 2 * hid), &cache);
    LstmCell grad(in, hid);
    LstmState dprev(hid);
    std::vector<double> dx(in, 0.0);
    lstm_step_backward(cell, cache, wh, wc, grad, dprev, dx);
    auto g = flat_of(grad);
    g.insert(g.end(), dprev.h.begin(), dprev.h.end());
    g.insert(g.end(), dprev.c.begin(), dprev.c.end());
    g.insert(g.end(), dx.begin(), dx.end());
    return g;
  };
  return c;
}

struct TwoLayer {
  DenseLayer first;
  DenseLayer second;
  std::vector<Tensor*> tensors() { return {&first.weight, &first.bias, &second.weight, &second.bias}; }
  std::vector<const Tensor*> tensors() const { return {&first.weight, &first.bias, &second.weight, &second.bias}; }
};

GradCheckCase two_layer_case(Rng& rng) {
  constexpr std::size_t in = 4, hid = 6, out = 2;
  const TwoLayer like{DenseLayer::uniform(in, hid, rng), DenseLayer::uniform(hid, out, rng)};
  const auto x = random_vector(in, rng);
  const auto target = random_vector(out, rng);
  GradCheckCase c;
  c.name = "two_layer_net";
  c.params = flat_of(like);
  c.loss = [=](std::span<const double> p) {
    const auto net = with_values(like, p);
    auto h = net.first.forward(x);
    for (auto& v : h) v = std::tanh(v);
    const auto y = net.second.forward(h);
    double s = 0.0;
    for (std::size_t k = 0; k < out; ++k) s += 0.5 * (y[k] - target[k]) * (y[k] - target[k]);
    return s;
  };
  c.analytic = [=](std::span<const double> p) {
    const auto net = with_values(like, p);
    auto h = net.first.forward(x);
    for (auto& v : h) v = std::tanh(v);
    const auto y = net.second.forward(h);
    std::vector<double> dy(out);
    for (std::size_t k = 0; k < out; ++k) dy[k] = y[k] - target[k];
    TwoLayer grad{DenseLayer(in, hid), DenseLayer(hid, out)};
    std::vector<double> dh(hid, 0.0);
    net.second.backward(h, dy, grad.second, dh);
    for (std::size_t j = 0; j < hid; ++j) dh[j] *= 1.0 - h[j] * h[j];
    net.first.backward(x, dh, grad.first, {});
    return flat_of(grad);
  };
  return c;
}

GradCheckCase ar_case(Rng& rng) {
  const ArParams like = ArParams::random(5, 2, rng);
  const auto x = random_vector(10, rng);
  GradCheckCase c;
  c.name = "ar_sequence_nll";
  c.params = flat_of(like);
  c.loss = [=](std::span<const double> p) { return sequence_nll(with_values(like, p), x); };
  c.analytic = [=](std::span<const double> p) {
    const auto ar = with_values(like, p);
    ArParams grad = ar.zeros_like();
    sequence_nll_with_grad(ar, x, grad);
    return flat_of(grad);
  };
  return c;
}

struct JointParams {
  ArParams ar;
  PriorParams prior;
  std::vector<Tensor*> tensors() {
    auto t = ar.tensors();
    for (auto* p : prior.tensors()) t.push_back(p);
    return t;
  }
  std::vector<const Tensor*> tensors() const {
    auto t = ar.tensors();
    for (auto* p : prior.tensors()) t.push_back(p);
    return t;
  }
};

GradCheckCase joint_case(Rng& rng) {
  constexpr std::size_t length = 10, window = 4, chunk = 4;
  const JointParams like{ArParams::random(4, 2, rng), PriorParams::random(window, chunk, rng)};
  const std::vector<std::vector<double>> sequences{random_vector(length, rng), random_vector(length, rng)};
  std::vector<TrainingSample> batch;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (int k = 0; k < 2; ++k) {
      TrainingSample t;
      do {
        t = draw_training_sample(s, length, chunk, rng);
      } while (t.chunk < 2);
      batch.push_back(t);
    }
  }
  const Rollouts rollouts = draw_rollouts(like.ar, sequences, batch, 2, rng(), Execution::serial);
  GradCheckCase c;
  c.name = "joint_loss";
  c.params = flat_of(like);
  c.loss = [=](std::span<const double> p) {
    const auto jp = with_values(like, p);
    return joint_loss(jp.ar, jp.prior, sequences, batch, rollouts, nullptr, nullptr, Execution::serial).total();
  };
  c.analytic = [=](std::span<const double> p) {
    const auto jp = with_values(like, p);
    JointParams grad{jp.ar.zeros_like(), PriorParams::zeros(window, chunk)};
    joint_loss(jp.ar, jp.prior, sequences, batch, rollouts, &grad.ar, &grad.prior, Execution::serial);
    return flat_of(grad);
  };
  return c;
}

GradCheckCase confidence_case(Rng& rng) {
  constexpr std::size_t window = 6, chunk = 4, hid = 5, rows = 3;
  const ConfParams like = ConfParams::random(window, chunk, hid, rng);
  ConfidenceExamples ex;
  for (std::size_t r = 0; r < rows; ++r) {
    ex.windows.push_back(random_vector(window, rng));
    ex.priors.push_back(random_vector(chunk, rng));
    std::vector<double> t(chunk);
    for (auto& v : t) v = uniform(rng, 0.0, 1.0);
    ex.targets.push_back(t);
    ex.oracle.push_back(std::vector<double>(chunk, 0.0));
  }
  GradCheckCase c;
  c.name = "confidence_bce";
  c.params = flat_of(like);
  c.loss = [=](std::span<const double> p) { return confidence_bce(with_values(like, p), ex); };
  c.analytic = [=](std::span<const double> p) {
    const auto conf = with_values(like, p);
    ConfParams grad = conf.zeros_like();
    std::vector<std::size_t> all(rows);
    for (std::size_t r = 0; r < rows; ++r) all[r] = r;
    confidence_bce_with_grad(conf, ex, all, grad);
    return flat_of(grad);
  };
  return c;
}

}  // namespace

GradCheckResult run_grad_check(const GradCheckCase& c, double tolerance) {
  const auto numeric = finite_difference_gradient(c.loss, c.params, kGradStep, Stencil::five_point);
  const auto analytic = c.analytic(c.params);
  if (analytic.size() != numeric.size()) throw Error("gradient size mismatch in " + c.name);
  GradCheckResult r;
  r.name = c.name;
  r.tolerance = tolerance;
  r.seeds = 1;
  r.max_rel_error = max_relative_error(analytic, numeric);
  return r;
}

std::vector<GradCheckCase> standard_grad_cases(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckCase> cases;
  cases.push_back(gaussian_case(rng));
  cases.push_back(dense_case(rng));
  cases.push_back(lstm_case(rng));
  cases.push_back(two_layer_case(rng));
  cases.push_back(ar_case(rng));
  cases.push_back(joint_case(rng));
  cases.push_back(confidence_case(rng));
  return cases;
}

std::vector<GradCheckResult> run_grad_suite(std::uint64_t seed, std::size_t seeds, const std::string& inject_fault) {
  std::vector<GradCheckResult> results;
  bool fault_used = inject_fault.empty();
  for (std::size_t s = 0; s < seeds; ++s) {
    auto cases = standard_grad_cases(mix_seed(seed, s, 0x6AD));
    if (results.empty()) {
      for (const auto& c : cases) results.push_back({c.name, 0.0, kGradTolerance, 0});
    }
    for (std::size_t i = 0; i < cases.size(); ++i) {
      auto& c = cases[i];
      if (c.name == inject_fault) {
        fault_used = true;
        auto inner = c.analytic;
        c.analytic = [inner](std::span<const double> p) {
          auto g = inner(p);
          g[0] = g[0] * 1.01 + 1e-3;
          return g;
        };
      }
      const auto r = run_grad_check(c);
      if (!(r.max_rel_error <= results[i].max_rel_error)) results[i].max_rel_error = r.max_rel_error;
      ++results[i].seeds;
    }
  }
  if (!fault_used) throw Error("unknown op for fault injection: " + inject_fault);
  return results;
}

}  // namespace nara
