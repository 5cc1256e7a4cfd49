#include "choreo/nn/adam.hpp"

#include <cmath>

namespace choreo::nn {

Adam::Adam(const ParameterRegistry& registry, AdamOptions options)
    : params_(registry.parameters), options_(options) {
  if (!(options_.learning_rate > 0.0)) throw ValidationError("adam", "learning rate must be positive");
  if (!(options_.beta1 > 0.0 && options_.beta1 < 1.0) || !(options_.beta2 > 0.0 && options_.beta2 < 1.0)) {
    throw ValidationError("adam", "betas must lie in (0, 1)");
  }
  if (!(options_.epsilon > 0.0)) throw ValidationError("adam", "epsilon must be positive");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.var.shape(), 0.0);
    v_.emplace_back(p.var.shape(), 0.0);
  }
}

void Adam::step() {
  for (const auto& p : params_) {
    if (p.var.has_grad() && !p.var.grad().all_finite()) {
      throw RuntimeError("adam", "non-finite gradient in parameter '" + p.name + "'");
    }
  }
  ++steps_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Var& var = params_[i].var;
    Tensor& value = var.mutable_value();
    const Tensor& g = var.grad();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      value[k] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

}  // namespace choreo::nn
