#pragma once

#include <cstdint>
#include <vector>

#include "nara/tensor.hpp"

namespace nara {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-parameter first/second moments for one ordered parameter list.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const std::vector<const Tensor*>& like, AdamOptions options);

  const AdamOptions& options() const noexcept { return options_; }
  std::int64_t step() const noexcept { return step_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

  /// One bias-corrected Adam update. Throws "diverged" on a non-finite
  /// gradient, leaving parameters and moments untouched.
  void apply(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

 private:
  AdamOptions options_;
  std::int64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

inline void adam_step(AdamState& state, const std::vector<Tensor*>& params,
                      const std::vector<const Tensor*>& grads) {
  state.apply(params, grads);
}

}  // namespace nara
