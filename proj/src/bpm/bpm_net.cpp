#include "choreo/bpm/bpm_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "choreo/audio/mulaw.hpp"
#include "choreo/audio/synth.hpp"
#include "choreo/nn/adam.hpp"
#include "choreo/nn/ops.hpp"

namespace choreo::bpm {

using nlohmann::json;
using nn::ForwardContext;
using nn::Mode;
using nn::Tensor;
using nn::Var;

BpmNetConfig BpmNetConfig::desk_default() {
  BpmNetConfig c;
  // 3*3*2*5*7*7 = 4410; the last four blocks keep length 10 and use growing
  // dilation so block 10 sees the whole 2 s crop.
  const std::size_t channels[] = {4, 8, 8, 16, 16, 32, 32, 64, 128, 128};
  const std::size_t pools[] = {3, 3, 2, 5, 7, 7, 1, 1, 1, 1};
  const std::size_t dilations[] = {1, 1, 1, 1, 1, 1, 1, 2, 4, 8};
  for (std::size_t i = 0; i < 10; ++i) c.blocks.push_back({channels[i], 3, dilations[i], pools[i]});
  return c;
}

std::size_t downsampled_length(const BpmNetConfig& config, std::size_t blocks) {
  std::size_t t = config.input_length;
  for (std::size_t i = 0; i < blocks && i < config.blocks.size(); ++i) {
    const std::size_t p = config.blocks[i].pool;
    if (p > 1) t = t < p ? 0 : (t - p) / p + 1;
  }
  return t;
}

void BpmNetConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("bpm-net config", m); };
  if (blocks.size() < kTransferBlocks) {
    fail("need at least " + std::to_string(kTransferBlocks) + " conv blocks, got " + std::to_string(blocks.size()));
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.channels < 1 || b.kernel < 1 || b.dilation < 1 || b.pool < 1) {
      fail("block " + std::to_string(i + 1) + " has a zero hyperparameter");
    }
  }
  if (blocks[kTransferBlocks - 1].channels != kFeatureDim) {
    fail("block 10 must emit " + std::to_string(kFeatureDim) + " channels, got " +
         std::to_string(blocks[kTransferBlocks - 1].channels));
  }
  const std::size_t t = downsampled_length(*this, kTransferBlocks);
  if (t != kFeatureSteps) {
    fail("first 10 blocks map " + std::to_string(input_length) + " samples to length " + std::to_string(t) +
         ", expected " + std::to_string(kFeatureSteps));
  }
  if (downsampled_length(*this, blocks.size()) < 1) fail("downsampling leaves no time steps");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  for (std::size_t h : head_hidden) {
    if (h < 1) fail("head layer sizes must be >= 1");
  }
  validate_stats();
}

void BpmNetConfig::validate_stats() const {
  if (!std::isfinite(bpm_mean) || !(bpm_std > 0.0) || !std::isfinite(bpm_std)) {
    throw ValidationError("bpm-net config", "standardization stats must be finite with std > 0");
  }
}

json BpmNetConfig::to_json() const {
  json j;
  j["input_length"] = input_length;
  j["blocks"] = json::array();
  for (const auto& b : blocks) {
    j["blocks"].push_back({{"channels", b.channels}, {"kernel", b.kernel}, {"dilation", b.dilation}, {"pool", b.pool}});
  }
  j["head_hidden"] = head_hidden;
  j["dropout"] = dropout;
  j["bpm_mean"] = bpm_mean;
  j["bpm_std"] = bpm_std;
  return j;
}

BpmNetConfig BpmNetConfig::from_json(const json& j) {
  try {
    BpmNetConfig c;
    c.input_length = j.at("input_length").get<std::size_t>();
    for (const auto& b : j.at("blocks")) {
      c.blocks.push_back({b.at("channels").get<std::size_t>(), b.at("kernel").get<std::size_t>(),
                          b.at("dilation").get<std::size_t>(), b.at("pool").get<std::size_t>()});
    }
    c.head_hidden = j.at("head_hidden").get<std::vector<std::size_t>>();
    c.dropout = j.at("dropout").get<double>();
    c.bpm_mean = j.at("bpm_mean").get<double>();
    c.bpm_std = j.at("bpm_std").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError("bpm-net config", std::string("malformed config: ") + e.what());
  }
}

BpmNet::BpmNet(BpmNetConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  std::size_t in = 1;
  for (const auto& b : config_.blocks) {
    auto inner = std::make_unique<nn::Sequential>();
    inner->emplace<nn::Conv1d>(in, 2 * b.channels, b.kernel, b.dilation, rng);
    inner->emplace<nn::BatchNorm1d>(2 * b.channels);
    inner->emplace<nn::GatedTanh>();
    auto block = std::make_unique<nn::Sequential>();
    block->emplace<nn::Residual>(std::move(inner), in, b.channels, rng);
    if (b.pool > 1) block->emplace<nn::MaxPool1d>(b.pool, b.pool);
    if (config_.dropout > 0.0) block->emplace<nn::Dropout>(config_.dropout);
    blocks_.push_back(std::move(block));
    in = b.channels;
  }
  for (std::size_t h : config_.head_hidden) {
    head_.emplace<nn::Linear>(in, h, rng);
    head_.emplace<nn::Relu>();
    in = h;
  }
  auto& out = head_.emplace<nn::Linear>(in, 1, rng);
  out.weight.mutable_value().fill(0.0);  // untrained net predicts the standardized mean
}

Var BpmNet::features(const Var& x, const ForwardContext& ctx, std::size_t blocks) {
  if (blocks > blocks_.size()) throw ValidationError("bpm-net", "requested more blocks than the net has");
  x.value().expect_shape({0, 1, config_.input_length}, "bpm-net input");
  Var h = x;
  for (std::size_t i = 0; i < blocks; ++i) h = blocks_[i]->forward(h, ctx);
  return h;
}

Var BpmNet::forward(const Var& x, const ForwardContext& ctx) {
  Var h = features(x, ctx, blocks_.size());
  return head_.forward(nn::mean_over_time(h), ctx);
}

nn::ParameterRegistry BpmNet::registry() {
  nn::ParameterRegistry r;
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i]->collect("block" + std::to_string(i) + ".", r);
  head_.collect("head.", r);
  return r;
}

double BpmNet::predict(std::span<const double> window) { return config_.destandardize(bpm_forward(*this, window)); }

double bpm_forward(BpmNet& net, std::span<const double> window) {
  const std::size_t n = net.config().input_length;
  if (window.size() != n) {
    throw ValidationError("bpm-net", "input window has " + std::to_string(window.size()) + " samples, expected " +
                                         std::to_string(n));
  }
  nn::NoGradGuard guard;
  Var x(Tensor({1, 1, n}, std::vector<double>(window.begin(), window.end())));
  const double y = net.forward(x, ForwardContext{Mode::kEval, nullptr}).value()[0];
  if (!std::isfinite(y)) throw RuntimeError("bpm-net", "non-finite prediction");
  return y;
}

Var bpm_loss(const Var& prediction, const Tensor& target) { return nn::mse_loss(prediction, target); }

void validate_bpm_dataset(std::span<const BpmSample> dataset, std::size_t crop_samples) {
  if (dataset.empty()) throw ValidationError("bpm dataset", "dataset is empty");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset[i];
    const std::string who = s.song_id.empty() ? "clip " + std::to_string(i) : "clip '" + s.song_id + "'";
    if (s.audio.codes.size() < crop_samples) {
      throw ValidationError("bpm dataset", who + " has " + std::to_string(s.audio.codes.size()) +
                                               " samples, shorter than the " + std::to_string(crop_samples) +
                                               "-sample crop");
    }
    if (!std::isfinite(s.bpm)) throw ValidationError("bpm dataset", who + " has a non-finite BPM target");
    if (s.bpm < audio::kMinBpm || s.bpm > audio::kMaxBpm) {
      throw ValidationError("bpm dataset", who + " has BPM " + std::to_string(s.bpm) + " outside [40, 240]");
    }
  }
}

namespace {

// Decodes codes[offset, offset + n) into out.
void decode_crop(const audio::QuantizedClip& q, std::size_t offset, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = audio::mulaw_decode_sample(q.codes[offset + i], q.resolution);
}

}  // namespace

double evaluate_bpm(BpmNet& net, std::span<const BpmSample> dataset, std::size_t crop_samples) {
  if (dataset.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto& cfg = net.config();
  if (crop_samples != cfg.input_length) throw ValidationError("bpm-net", "crop length differs from input length");
  nn::NoGradGuard guard;
  double se = 0.0;
  std::size_t count = 0;
  constexpr std::size_t kCrops = 3;
  for (const auto& s : dataset) {
    Tensor x({kCrops, 1, crop_samples});
    const std::size_t span = s.audio.codes.size() - crop_samples;
    for (std::size_t c = 0; c < kCrops; ++c) decode_crop(s.audio, span * c / (kCrops - 1), crop_samples, x.ptr() + c * crop_samples);
    const Tensor y = net.forward(Var(std::move(x)), ForwardContext{Mode::kEval, nullptr}).value();
    const double target = cfg.standardize(s.bpm);
    for (std::size_t c = 0; c < kCrops; ++c) se += (y[c] - target) * (y[c] - target);
    count += kCrops;
  }
  return se / static_cast<double>(count);
}

pipeline::ModelCheckpoint bpm_checkpoint(BpmNet& net, json metadata) {
  return pipeline::capture(pipeline::ModelKind::kBpm, net.config().to_json(), std::move(metadata), net.registry());
}

BpmNet load_bpm_net(const pipeline::ModelCheckpoint& checkpoint) {
  if (checkpoint.kind != pipeline::ModelKind::kBpm) {
    throw ValidationError("bpm-net", std::string("checkpoint holds a ") + pipeline::to_string(checkpoint.kind) +
                                         " model, not a bpm model");
  }
  BpmNet net(BpmNetConfig::from_json(checkpoint.config), 0);
  auto reg = net.registry();
  pipeline::restore(checkpoint, reg);
  return net;
}

TrainBpmResult train_bpm(std::span<const BpmSample> train, std::span<const BpmSample> validation, BpmNetConfig config,
                         const TrainBpmOptions& options) {
  validate_bpm_dataset(train, options.crop_samples);
  if (!validation.empty()) validate_bpm_dataset(validation, options.crop_samples);
  if (options.batch_size < 1) throw ValidationError("train-bpm", "batch size must be >= 1");
  if (options.crop_samples != config.input_length) {
    throw ValidationError("train-bpm", "crop length must equal the net's input length");
  }

  if (options.fixed_stats) {
    config.bpm_mean = options.fixed_stats->first;
    config.bpm_std = options.fixed_stats->second;
  } else {
    double mean = 0.0;
    for (const auto& s : train) mean += s.bpm;
    mean /= static_cast<double>(train.size());
    double var = 0.0;
    for (const auto& s : train) var += (s.bpm - mean) * (s.bpm - mean);
    var /= static_cast<double>(train.size());
    config.bpm_mean = mean;
    // A single-tempo corpus has no spread; fall back to unit scale.
    config.bpm_std = var > 1e-12 ? std::sqrt(var) : 1.0;
  }

  Rng rng(options.seed);
  BpmNet net(config, rng.next_u64());
  auto registry = net.registry();
  nn::Adam adam(registry, {.learning_rate = options.learning_rate});

  const std::size_t steps = options.steps_per_epoch > 0
                                ? options.steps_per_epoch
                                : (train.size() + options.batch_size - 1) / options.batch_size;
  const std::size_t n = options.crop_samples;
  const double total_steps = static_cast<double>(std::max<std::size_t>(1, options.epochs * steps - 1));
  std::size_t global_step = 0;
  TrainBpmResult result;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t step = 0; step < steps; ++step, ++global_step) {
      if (options.final_learning_rate) {
        const double f = 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(global_step) / total_steps));
        adam.set_learning_rate(*options.final_learning_rate + (options.learning_rate - *options.final_learning_rate) * f);
      }
      Tensor x({options.batch_size, 1, n});
      Tensor target({options.batch_size, 1});
      for (std::size_t b = 0; b < options.batch_size; ++b) {
        const auto& s = train[rng.index(train.size())];
        const std::size_t offset = rng.index(s.audio.codes.size() - n + 1);
        decode_crop(s.audio, offset, n, x.ptr() + b * n);
        target[b] = net.config().standardize(s.bpm);
      }
      registry.zero_grad();
      ForwardContext ctx{Mode::kTrain, &rng};
      Var loss = bpm_loss(net.forward(Var(std::move(x)), ctx), target);
      loss_sum += loss.value()[0];
      nn::backward(loss);
      adam.step();
    }
    BpmEpochLog row{epoch, loss_sum / static_cast<double>(steps),
                    validation.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : evaluate_bpm(net, validation, n)};
    result.log.push_back(row);
    if (options.on_epoch) options.on_epoch(row);
  }

  json meta;
  meta["epochs"] = options.epochs;
  meta["steps_per_epoch"] = steps;
  meta["batch_size"] = options.batch_size;
  meta["learning_rate"] = options.learning_rate;
  if (options.final_learning_rate) meta["final_learning_rate"] = *options.final_learning_rate;
  meta["seed"] = options.seed;
  meta["train_songs"] = train.size();
  if (!result.log.empty()) {
    meta["final_train_mse"] = result.log.back().train_mse;
    if (!validation.empty()) meta["final_val_mse"] = result.log.back().val_mse;
  }
  result.checkpoint = bpm_checkpoint(net, std::move(meta));
  return result;
}

void write_bpm_log_csv(std::ostream& out, std::span<const BpmEpochLog> log) {
  out << "epoch,train_mse,val_mse\n";
  out.precision(10);
  for (const auto& r : log) {
    out << r.epoch << ',' << r.train_mse << ',';
    if (std::isfinite(r.val_mse)) out << r.val_mse;
    out << '\n';
  }
}

FeatureExtractor::FeatureExtractor(std::shared_ptr<BpmNet> net, std::string checkpoint_hash)
    : net_(std::move(net)), hash_(std::move(checkpoint_hash)) {
  for (auto& p : net_->registry().parameters) p.var.node()->requires_grad = false;
}

Tensor FeatureExtractor::extract(std::span<const double> window) const {
  return extract_batch(window, 1).reshaped({kFeatureSteps, kFeatureDim});
}

Tensor FeatureExtractor::extract_batch(std::span<const double> windows, std::size_t count) const {
  const std::size_t n = input_length();
  if (count == 0 || windows.size() != count * n) {
    throw ShapeError("feature extractor input", {count, n}, {count, count ? windows.size() / count : windows.size()});
  }
  nn::NoGradGuard guard;
  Var x(Tensor({count, 1, n}, std::vector<double>(windows.begin(), windows.end())));
  const Tensor psi = net_->features(x, ForwardContext{Mode::kEval, nullptr}).value();  // [N, 128, 10]
  Tensor out({count, kFeatureSteps, kFeatureDim});
  for (std::size_t b = 0; b < count; ++b)
    for (std::size_t c = 0; c < kFeatureDim; ++c)
      for (std::size_t t = 0; t < kFeatureSteps; ++t) out.at(b, t, c) = psi.at(b, c, t);
  if (!out.all_finite()) throw RuntimeError("feature extractor", "non-finite features");
  return out;
}

FeatureExtractor extract_lower_blocks(const pipeline::ModelCheckpoint& checkpoint) {
  if (checkpoint.kind != pipeline::ModelKind::kBpm) {
    throw ValidationError("music-encoder", "feature extractor needs a bpm checkpoint");
  }
  const auto blocks = checkpoint.config.find("blocks");
  if (blocks == checkpoint.config.end() || !blocks->is_array() || blocks->size() < kTransferBlocks) {
    throw ValidationError("music-encoder", "checkpoint has fewer than " + std::to_string(kTransferBlocks) +
                                               " conv blocks to transfer");
  }
  return FeatureExtractor(std::make_shared<BpmNet>(load_bpm_net(checkpoint)), checkpoint.hash);
}

}  // namespace choreo::bpm
