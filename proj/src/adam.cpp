#include "nara/adam.hpp"

#include <cmath>

namespace nara {

AdamState::AdamState(const std::vector<const Tensor*>& like, AdamOptions options)
    : options_(options) {
  if (!(options.lr > 0.0)) throw Error("learning rate must be positive");
  m_.reserve(like.size());
  v_.reserve(like.size());
  for (const Tensor* t : like) {
    m_.emplace_back(t->shape());
    v_.emplace_back(t->shape());
  }
}

void AdamState::apply(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw Error("adam parameter list mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(m_[k]) || !grads[k]->same_shape(m_[k])) {
      throw Error("adam parameter shape mismatch");
    }
    if (!grads[k]->all_finite()) throw Error("diverged");
  }

  ++step_;
  const auto& o = options_;
  const double correction1 = 1.0 - std::pow(o.beta1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(o.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    double* p = params[k]->data();
    const double* g = grads[k]->data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::size_t i = 0; i < m_[k].size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

}  // namespace nara
