#include "cgnn/optimizer.hpp"

#include <cmath>

namespace cgnn::nn {

Adam::Adam(AdamConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) {
    throw InvalidValueError("Adam: learning rate must be positive");
  }
}

void Adam::step(const std::vector<Parameter*>& params) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) {
    throw DimensionError("Adam: parameter list changed between steps");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw DimensionError("Adam: gradient shape differs from value shape for " + p.name);
    }
    m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * p.grad;
    v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * p.grad.cwiseAbs2();
    const auto m_hat = m_[k].array() / c1;
    const auto v_hat = v_[k].array() / c2;
    p.value.array() -= config_.learning_rate * m_hat / (v_hat.sqrt() + config_.epsilon);
    if (!p.value.allFinite()) {
      throw NumericalError("Adam: parameter " + p.name + " became non-finite");
    }
  }
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (auto* p : params) {
    p->zero_grad();
  }
}

double l2_norm_squared(const std::vector<Parameter*>& params) {
  double acc = 0.0;
  for (const auto* p : params) {
    if (p->regularized) {
      acc += p->value.squaredNorm();
    }
  }
  return acc;
}

}  // namespace cgnn::nn
