#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "choreo/nn/tensor.hpp"

namespace choreo::nn {

/// One vertex of the recorded computation. Leaves with `requires_grad` are
/// parameters; interior nodes carry the closure that pushes their gradient
/// to their inputs.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Tensor& ensure_grad();
};

/// Handle to a node. Cheap to copy; copies alias the same node.
class Var {
 public:
  Var() : node_(std::make_shared<Node>()) {}
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }

  /// Gradient buffer; zero-filled tensor of the value's shape if never touched.
  const Tensor& grad() const;
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Reverse-mode sweep from a scalar loss. Gradients accumulate into leaves;
/// the recorded graph below `loss` is released afterwards.
void backward(const Var& loss);

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Builds the output node of an op. Records `backward_fn` only when grad mode
/// is on and some input requires a gradient.
Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn);

}  // namespace choreo::nn
