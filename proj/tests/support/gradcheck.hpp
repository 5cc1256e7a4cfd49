#pragma once

// Central finite-difference oracle for reverse-mode gradients. Independent of
// the backward closures: it only ever calls the forward pass.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "choreo/nn/autograd.hpp"
#include "choreo/nn/layers.hpp"

namespace choreo::testing {

struct GradCheckResult {
  double worst_relative_error = 0.0;
  std::string worst_name;
};

/// ||a - b|| / (||a|| + ||b||), zero when both vanish.
inline double relative_error(const nn::Tensor& a, const nn::Tensor& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nb);
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

/// `loss` must rebuild the graph from the current parameter values on every
/// call and return a scalar. Every entry of `params` is checked.
inline GradCheckResult gradcheck(const std::vector<nn::NamedParameter>& params,
                                 const std::function<nn::Var()>& loss, double step = 1e-5) {
  for (const auto& p : params) p.var.node()->grad = nn::Tensor();
  nn::backward(loss());

  GradCheckResult result;
  for (const auto& p : params) {
    nn::Tensor analytic = p.var.grad();
    nn::Tensor numeric(p.var.shape());
    nn::Tensor& value = p.var.node()->value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      double plus = 0.0, minus = 0.0;
      {
        nn::NoGradGuard guard;
        value[i] = saved + step;
        plus = loss().value()[0];
        value[i] = saved - step;
        minus = loss().value()[0];
      }
      value[i] = saved;
      numeric[i] = (plus - minus) / (2.0 * step);
    }
    const double err = relative_error(analytic, numeric);
    if (err >= result.worst_relative_error) {
      result.worst_relative_error = err;
      result.worst_name = p.name;
    }
  }
  return result;
}

}  // namespace choreo::testing
