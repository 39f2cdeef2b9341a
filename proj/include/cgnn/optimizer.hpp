#pragma once

#include <vector>

#include "cgnn/autodiff.hpp"

namespace cgnn::nn {

struct AdamConfig {
  double learning_rate{0.01};
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};
};

/// Adaptive moment estimation with bias correction. Moment buffers are keyed
/// by position in the parameter list, so the same list (same order) must be
/// passed to every step.
class Adam {
public:
  explicit Adam(AdamConfig config = {});

  void step(const std::vector<Parameter*>& params);
  std::size_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }

private:
  AdamConfig config_;
  std::size_t t_{0};
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

void zero_grads(const std::vector<Parameter*>& params);

/// Sum of squared entries over the parameters flagged as regularised.
double l2_norm_squared(const std::vector<Parameter*>& params);

}  // namespace cgnn::nn
