#include "choreo/nn/layers.hpp"

#include <cmath>

#include "choreo/nn/ops.hpp"

namespace choreo::nn {

namespace {

Tensor uniform_init(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kMaxPool1d: return "maxpool1d";
    case LayerKind::kFullyConnected: return "fully-connected";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kLeakyRelu: return "leaky-relu";
    case LayerKind::kGatedTanh: return "gated-tanh";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSoftmax: return "softmax";
    case LayerKind::kResidual: return "residual-wrapper";
  }
  return "unknown";
}

void LayerSpec::validate() const {
  auto fail = [this](const std::string& msg) { throw ValidationError(to_string(kind), msg); };
  switch (kind) {
    case LayerKind::kConv1d:
      if (kernel < 1) fail("kernel size must be >= 1");
      if (dilation < 1) fail("dilation must be >= 1");
      if (in_channels < 1 || out_channels < 1) fail("channel counts must be >= 1");
      break;
    case LayerKind::kMaxPool1d:
      if (pool < 1 || stride < 1) fail("pool ratio and stride must be >= 1");
      break;
    case LayerKind::kFullyConnected:
      if (in_channels < 1 || out_channels < 1) fail("feature counts must be >= 1");
      break;
    case LayerKind::kBatchNorm:
      if (in_channels < 1) fail("channel count must be >= 1");
      if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0, 1)");
      if (!(eps > 0.0)) fail("eps must be positive");
      break;
    case LayerKind::kDropout:
      if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout rate must be in [0, 1)");
      break;
    case LayerKind::kLeakyRelu:
      if (!(leak > 0.0)) fail("leak slope must be positive");
      break;
    case LayerKind::kResidual:
      if (in_channels < 1 || out_channels < 1) fail("channel counts must be >= 1");
      break;
    case LayerKind::kGatedTanh:
    case LayerKind::kRelu:
    case LayerKind::kSoftmax:
      break;
  }
}

bool ForwardContext::training() const {
  if (!mode) throw ValidationError("forward", "train/eval mode not set");
  return *mode == Mode::kTrain;
}

std::size_t ParameterRegistry::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters) n += p.var.value().size();
  return n;
}

void ParameterRegistry::zero_grad() {
  for (auto& p : parameters) p.var.zero_grad();
}

void Layer::collect(const std::string&, ParameterRegistry&) {}

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t dilation_,
               Rng& rng)
    : dilation(dilation_) {
  LayerSpec{.kind = LayerKind::kConv1d, .in_channels = in_channels, .out_channels = out_channels,
            .kernel = kernel, .dilation = dilation_}
      .validate();
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kernel));
  weight = Var(uniform_init({out_channels, in_channels, kernel}, bound, rng), true);
  bias = Var(Tensor({out_channels}, 0.0), true);
}

Var Conv1d::forward(const Var& x, const ForwardContext&) { return conv1d(x, weight, bias, dilation); }

void Conv1d::collect(const std::string& prefix, ParameterRegistry& registry) {
  registry.parameters.push_back({prefix + "weight", weight});
  registry.parameters.push_back({prefix + "bias", bias});
}

Linear::Linear(std::size_t in_features, std::size_t out_features, Rng& rng) {
  LayerSpec{.kind = LayerKind::kFullyConnected, .in_channels = in_features, .out_channels = out_features}.validate();
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  weight = Var(uniform_init({out_features, in_features}, bound, rng), true);
  bias = Var(Tensor({out_features}, 0.0), true);
}

Var Linear::forward(const Var& x, const ForwardContext&) { return linear(x, weight, bias); }

void Linear::collect(const std::string& prefix, ParameterRegistry& registry) {
  registry.parameters.push_back({prefix + "weight", weight});
  registry.parameters.push_back({prefix + "bias", bias});
}

BatchNorm1d::BatchNorm1d(std::size_t channels, double momentum_, double eps_)
    : gamma(Tensor({channels}, 1.0), true),
      beta(Tensor({channels}, 0.0), true),
      running_mean({channels}, 0.0),
      running_var({channels}, 1.0),
      momentum(momentum_),
      eps(eps_) {
  LayerSpec{.kind = LayerKind::kBatchNorm, .in_channels = channels, .momentum = momentum_, .eps = eps_}.validate();
}

Var BatchNorm1d::forward(const Var& x, const ForwardContext& ctx) {
  return batchnorm(x, gamma, beta, running_mean, running_var, ctx.training(), momentum, eps);
}

void BatchNorm1d::collect(const std::string& prefix, ParameterRegistry& registry) {
  registry.parameters.push_back({prefix + "gamma", gamma});
  registry.parameters.push_back({prefix + "beta", beta});
  registry.buffers.push_back({prefix + "running_mean", &running_mean});
  registry.buffers.push_back({prefix + "running_var", &running_var});
}

Dropout::Dropout(double rate_) : rate(rate_) {
  LayerSpec{.kind = LayerKind::kDropout, .dropout_rate = rate_}.validate();
}

Var Dropout::forward(const Var& x, const ForwardContext& ctx) {
  if (!ctx.training() || rate == 0.0) return x;
  if (!ctx.rng) throw ValidationError("dropout", "training mode requires a random generator");
  return dropout(x, rate, *ctx.rng);
}

Var MaxPool1d::forward(const Var& x, const ForwardContext&) {
  if (kernel_ == 1 && stride_ == 1) return x;
  return maxpool1d(x, kernel_, stride_);
}

Var LeakyRelu::forward(const Var& x, const ForwardContext&) { return leaky_relu(x, slope_); }
Var GatedTanh::forward(const Var& x, const ForwardContext&) { return gated_tanh(x); }
Var Relu::forward(const Var& x, const ForwardContext&) { return relu(x); }
Var Softmax::forward(const Var& x, const ForwardContext&) { return softmax(x); }

Sequential& Sequential::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  return *this;
}

Var Sequential::forward(const Var& x, const ForwardContext& ctx) {
  Var h = x;
  for (auto& layer : layers_) h = layer->forward(h, ctx);
  return h;
}

void Sequential::collect(const std::string& prefix, ParameterRegistry& registry) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->collect(prefix + std::to_string(i) + ".", registry);
}

Residual::Residual(std::unique_ptr<Layer> inner, std::size_t in_channels, std::size_t out_channels, Rng& rng)
    : inner_(std::move(inner)) {
  LayerSpec{.kind = LayerKind::kResidual, .in_channels = in_channels, .out_channels = out_channels}.validate();
  if (in_channels != out_channels) projection_ = std::make_unique<Conv1d>(in_channels, out_channels, 1, 1, rng);
}

Var Residual::forward(const Var& x, const ForwardContext& ctx) {
  Var main = inner_->forward(x, ctx);
  Var skip = projection_ ? projection_->forward(x, ctx) : x;
  return add(main, skip);
}

void Residual::collect(const std::string& prefix, ParameterRegistry& registry) {
  inner_->collect(prefix + "inner.", registry);
  if (projection_) projection_->collect(prefix + "proj.", registry);
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, Rng& rng) {
  spec.validate();
  switch (spec.kind) {
    case LayerKind::kConv1d:
      return std::make_unique<Conv1d>(spec.in_channels, spec.out_channels, spec.kernel, spec.dilation, rng);
    case LayerKind::kMaxPool1d: return std::make_unique<MaxPool1d>(spec.pool, spec.stride);
    case LayerKind::kFullyConnected: return std::make_unique<Linear>(spec.in_channels, spec.out_channels, rng);
    case LayerKind::kBatchNorm: return std::make_unique<BatchNorm1d>(spec.in_channels, spec.momentum, spec.eps);
    case LayerKind::kDropout: return std::make_unique<Dropout>(spec.dropout_rate);
    case LayerKind::kLeakyRelu: return std::make_unique<LeakyRelu>(spec.leak);
    case LayerKind::kGatedTanh: return std::make_unique<GatedTanh>();
    case LayerKind::kRelu: return std::make_unique<Relu>();
    case LayerKind::kSoftmax: return std::make_unique<Softmax>();
    case LayerKind::kResidual: break;
  }
  throw ValidationError("make_layer", "residual-wrapper must be constructed around an inner layer");
}

}  // namespace choreo::nn
