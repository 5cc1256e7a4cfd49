#pragma once

#include <cstdint>
#include <vector>

#include "choreo/nn/layers.hpp"

namespace choreo::nn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. Moment buffers are laid
/// out in registry order and sized on construction.
class Adam {
 public:
  Adam(const ParameterRegistry& registry, AdamOptions options);

  /// Applies one update from the parameters' current gradients. Throws
  /// RuntimeError naming the first parameter whose gradient is non-finite;
  /// in that case nothing is updated.
  void step();

  std::uint64_t step_count() const { return steps_; }
  const AdamOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

  const Tensor& first_moment(std::size_t i) const { return m_.at(i); }
  const Tensor& second_moment(std::size_t i) const { return v_.at(i); }

 private:
  std::vector<NamedParameter> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  AdamOptions options_;
  std::uint64_t steps_ = 0;
};

}  // namespace choreo::nn
