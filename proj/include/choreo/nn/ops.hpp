#pragma once

#include <cstddef>
#include <span>

#include "choreo/core/rng.hpp"
#include "choreo/nn/autograd.hpp"

namespace choreo::nn {

// Differentiable operations. Convolutional activations are [batch, channels,
// time]; dense activations are [batch, features].

/// Causal dilated convolution; output keeps the input time length.
Var conv1d(const Var& x, const Var& weight, const Var& bias, std::size_t dilation);
Var linear(const Var& x, const Var& weight, const Var& bias);

/// Non-overlapping when stride == kernel. Output length floor((T - kernel) / stride) + 1.
Var maxpool1d(const Var& x, std::size_t kernel, std::size_t stride);

/// Splits channels in half: tanh(first) * sigmoid(second).
Var gated_tanh(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var relu(const Var& x);
Var sigmoid(const Var& x);

/// Inverted dropout; the mask comes from `rng`.
Var dropout(const Var& x, double rate, Rng& rng);

/// Per-channel normalization over (batch, time) for rank-3 input or batch
/// for rank-2 input. In training mode running stats are updated as
/// running = momentum * running + (1 - momentum) * batch.
Var batchnorm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean, Tensor& running_var,
              bool training, double momentum, double eps);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_scalar(const Var& a, double s);
Var scale(const Var& a, double s);
Var sum(const Var& a);
Var mean(const Var& a);

/// [N, C, T] -> [N, C]
Var mean_over_time(const Var& x);
Var reshape(const Var& x, Shape shape);
/// [N, A] ++ [N, B] -> [N, A + B]
Var concat_features(const Var& a, const Var& b);

/// Row-wise softmax over the last axis of a [N, K] tensor.
Var softmax(const Var& logits);

/// Mean over rows of -log softmax(logits)[label].
Var cross_entropy(const Var& logits, std::span<const std::size_t> labels);
/// Mean of squared residuals against a constant target.
Var mse_loss(const Var& prediction, const Tensor& target);
/// Mean of absolute residuals against a constant target.
Var l1_loss(const Var& prediction, const Tensor& target);

}  // namespace choreo::nn
