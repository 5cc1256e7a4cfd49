#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "choreo/core/rng.hpp"
#include "choreo/nn/autograd.hpp"

namespace choreo::nn {

enum class LayerKind {
  kConv1d,
  kMaxPool1d,
  kFullyConnected,
  kBatchNorm,
  kDropout,
  kLeakyRelu,
  kGatedTanh,
  kRelu,
  kSoftmax,
  kResidual,
};

const char* to_string(LayerKind kind);

/// Kind plus the hyperparameters relevant to it; unused fields are ignored.
struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t dilation = 1;
  std::size_t pool = 2;
  std::size_t stride = 2;
  double dropout_rate = 0.0;
  double leak = 0.01;
  double momentum = 0.9;
  double eps = 1e-5;

  /// Throws ValidationError when the hyperparameters are invalid for `kind`.
  void validate() const;
};

enum class Mode { kTrain, kEval };

/// Per-forward settings. Batchnorm and dropout refuse to run when the mode
/// has not been set.
struct ForwardContext {
  std::optional<Mode> mode;
  Rng* rng = nullptr;

  bool training() const;
};

struct NamedParameter {
  std::string name;
  Var var;
};

struct NamedBuffer {
  std::string name;
  Tensor* tensor;
};

/// Flat, ordered view of a network's learnable parameters and state buffers.
struct ParameterRegistry {
  std::vector<NamedParameter> parameters;
  std::vector<NamedBuffer> buffers;

  std::size_t parameter_count() const;
  void zero_grad();
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Var forward(const Var& x, const ForwardContext& ctx) = 0;
  virtual void collect(const std::string& prefix, ParameterRegistry& registry);
  virtual LayerKind kind() const = 0;
};

class Conv1d final : public Layer {
 public:
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t dilation, Rng& rng);
  Var forward(const Var& x, const ForwardContext& ctx) override;
  void collect(const std::string& prefix, ParameterRegistry& registry) override;
  LayerKind kind() const override { return LayerKind::kConv1d; }

  Var weight;
  Var bias;
  std::size_t dilation;
};

class Linear final : public Layer {
 public:
  Linear(std::size_t in_features, std::size_t out_features, Rng& rng);
  Var forward(const Var& x, const ForwardContext& ctx) override;
  void collect(const std::string& prefix, ParameterRegistry& registry) override;
  LayerKind kind() const override { return LayerKind::kFullyConnected; }

  Var weight;
  Var bias;
};

class BatchNorm1d final : public Layer {
 public:
  explicit BatchNorm1d(std::size_t channels, double momentum = 0.9, double eps = 1e-5);
  Var forward(const Var& x, const ForwardContext& ctx) override;
  void collect(const std::string& prefix, ParameterRegistry& registry) override;
  LayerKind kind() const override { return LayerKind::kBatchNorm; }

  Var gamma;
  Var beta;
  Tensor running_mean;
  Tensor running_var;
  double momentum;
  double eps;
};

class Dropout final : public Layer {
 public:
  explicit Dropout(double rate);
  Var forward(const Var& x, const ForwardContext& ctx) override;
  LayerKind kind() const override { return LayerKind::kDropout; }

  double rate;
};

class MaxPool1d final : public Layer {
 public:
  MaxPool1d(std::size_t kernel, std::size_t stride) : kernel_(kernel), stride_(stride) {}
  Var forward(const Var& x, const ForwardContext& ctx) override;
  LayerKind kind() const override { return LayerKind::kMaxPool1d; }

 private:
  std::size_t kernel_;
  std::size_t stride_;
};

class LeakyRelu final : public Layer {
 public:
  explicit LeakyRelu(double slope) : slope_(slope) {}
  Var forward(const Var& x, const ForwardContext& ctx) override;
  LayerKind kind() const override { return LayerKind::kLeakyRelu; }

 private:
  double slope_;
};

class GatedTanh final : public Layer {
 public:
  Var forward(const Var& x, const ForwardContext& ctx) override;
  LayerKind kind() const override { return LayerKind::kGatedTanh; }
};

class Relu final : public Layer {
 public:
  Var forward(const Var& x, const ForwardContext& ctx) override;
  LayerKind kind() const override { return LayerKind::kRelu; }
};

class Softmax final : public Layer {
 public:
  Var forward(const Var& x, const ForwardContext& ctx) override;
  LayerKind kind() const override { return LayerKind::kSoftmax; }
};

class Sequential final : public Layer {
 public:
  Sequential() = default;
  Sequential& add(std::unique_ptr<Layer> layer);
  template <class L, class... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Var forward(const Var& x, const ForwardContext& ctx) override;
  void collect(const std::string& prefix, ParameterRegistry& registry) override;
  LayerKind kind() const override { return layers_.empty() ? LayerKind::kRelu : layers_.back()->kind(); }

  std::size_t size() const { return layers_.size(); }
  Layer& at(std::size_t i) { return *layers_.at(i); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// out = inner(x) + skip(x); skip is identity when channel counts agree,
/// otherwise a learned 1x1 convolution.
class Residual final : public Layer {
 public:
  Residual(std::unique_ptr<Layer> inner, std::size_t in_channels, std::size_t out_channels, Rng& rng);
  Var forward(const Var& x, const ForwardContext& ctx) override;
  void collect(const std::string& prefix, ParameterRegistry& registry) override;
  LayerKind kind() const override { return LayerKind::kResidual; }

 private:
  std::unique_ptr<Layer> inner_;
  std::unique_ptr<Conv1d> projection_;
};

/// Builds a single parameterized or stateless layer from its spec.
/// kResidual is composite and has to be built directly.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec, Rng& rng);

}  // namespace choreo::nn
