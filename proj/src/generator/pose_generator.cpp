#include "choreo/generator/pose_generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "choreo/nn/adam.hpp"
#include "choreo/nn/ops.hpp"

namespace choreo::generator {

using nlohmann::json;
using nn::ForwardContext;
using nn::Mode;
using nn::Tensor;
using nn::Var;

GeneratorConfig GeneratorConfig::desk_default() {
  GeneratorConfig c;
  const std::size_t channels[] = {128, 256, 256, 512, 512};
  for (std::size_t i = 0; i < 5; ++i) c.blocks.push_back({channels[i], 3, std::size_t{1} << i, 2, 2});
  c.decoder_hidden = {1536, 1024};
  return c;
}

GeneratorConfig GeneratorConfig::small() {
  GeneratorConfig c;
  const std::size_t channels[] = {32, 32, 64, 64, 64};
  for (std::size_t i = 0; i < 5; ++i) c.blocks.push_back({channels[i], 3, std::size_t{1} << i, 2, 2});
  c.decoder_hidden = {256};
  return c;
}

std::size_t GeneratorConfig::conv_dilation(std::size_t block) const {
  std::size_t stride = 1;
  for (std::size_t i = 0; i < block; ++i) stride *= blocks[i].stride;
  return std::max<std::size_t>(1, blocks.at(block).dilation / stride);
}

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("generator config", m); };
  if (window < 1) fail("pose window must be >= 1");
  if (blocks.empty()) fail("need at least one PoseConvBlock");
  std::size_t t = window, stride = 1;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const std::string who = "block " + std::to_string(i + 1);
    if (b.channels < 1 || b.kernel < 1 || b.dilation < 1 || b.pool < 1 || b.stride < 1) fail(who + " has a zero hyperparameter");
    if (b.dilation >= stride && b.dilation % stride != 0) {
      fail(who + " dilation " + std::to_string(b.dilation) + " is not a multiple of the input stride " + std::to_string(stride));
    }
    if (t < b.pool) fail(who + " pools below one time step");
    t = (t - b.pool) / b.stride + 1;
    stride *= b.stride;
  }
  if (t != 1) fail("blocks reduce the " + std::to_string(window) + "-frame window to " + std::to_string(t) + " steps, expected 1");
  for (std::size_t h : decoder_hidden) {
    if (h < 1) fail("decoder sizes must be >= 1");
  }
  if (!(leak > 0.0)) fail("leak slope must be positive");
}

json GeneratorConfig::to_json() const {
  json j;
  j["window"] = window;
  j["blocks"] = json::array();
  for (const auto& b : blocks) {
    j["blocks"].push_back({{"channels", b.channels}, {"kernel", b.kernel}, {"dilation", b.dilation}, {"pool", b.pool}, {"stride", b.stride}});
  }
  j["decoder_hidden"] = decoder_hidden;
  j["leak"] = leak;
  return j;
}

GeneratorConfig GeneratorConfig::from_json(const json& j) {
  try {
    GeneratorConfig c;
    c.window = j.at("window").get<std::size_t>();
    for (const auto& b : j.at("blocks")) {
      c.blocks.push_back({b.at("channels").get<std::size_t>(), b.at("kernel").get<std::size_t>(), b.at("dilation").get<std::size_t>(),
                          b.at("pool").get<std::size_t>(), b.at("stride").get<std::size_t>()});
    }
    c.decoder_hidden = j.at("decoder_hidden").get<std::vector<std::size_t>>();
    c.leak = j.at("leak").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError("generator config", std::string("malformed config: ") + e.what());
  }
}

PoseGenerator::PoseGenerator(GeneratorConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  std::size_t in = kPoseDim;
  for (std::size_t i = 0; i < config_.blocks.size(); ++i) {
    const auto& b = config_.blocks[i];
    encoder_.emplace<nn::Conv1d>(in, b.channels, b.kernel, config_.conv_dilation(i), rng);
    encoder_.emplace<nn::MaxPool1d>(b.pool, b.stride);
    encoder_.emplace<nn::LeakyRelu>(config_.leak);
    in = b.channels;
  }
  in += kAudioDim;
  for (std::size_t h : config_.decoder_hidden) {
    decoder_.emplace<nn::Linear>(in, h, rng);
    decoder_.emplace<nn::LeakyRelu>(config_.leak);
    in = h;
  }
  decoder_.emplace<nn::Linear>(in, kPoseDim, rng);
}

Var PoseGenerator::encode(const Var& windows, const ForwardContext& ctx) {
  windows.value().expect_shape({0, kPoseDim, config_.window}, "pose window batch");
  Var h = encoder_.forward(windows, ctx);
  return nn::reshape(h, {windows.shape()[0], config_.pose_feature_dim()});
}

Var PoseGenerator::forward(const Var& windows, const Var& audio, const ForwardContext& ctx) {
  audio.value().expect_shape({windows.shape().at(0), kAudioDim}, "audio feature batch");
  return decoder_.forward(nn::concat_features(encode(windows, ctx), audio), ctx);
}

nn::ParameterRegistry PoseGenerator::registry() {
  nn::ParameterRegistry r;
  encoder_.collect("encoder.", r);
  decoder_.collect("decoder.", r);
  return r;
}

namespace {

const ForwardContext kEval{Mode::kEval, nullptr};

// Window of `history` rows [t - w, t) written as [74, w] at `out`; rows
// before 0 are zero.
void fill_window(const double* history, std::ptrdiff_t t, std::size_t w, double* out) {
  for (std::size_t i = 0; i < w; ++i) {
    const std::ptrdiff_t src = t - static_cast<std::ptrdiff_t>(w) + static_cast<std::ptrdiff_t>(i);
    for (std::size_t d = 0; d < kPoseDim; ++d) {
      out[d * w + i] = src < 0 ? 0.0 : history[static_cast<std::size_t>(src) * kPoseDim + d];
    }
  }
}

Tensor transpose_window(const Tensor& window, std::size_t w) {
  window.expect_shape({w, kPoseDim}, "pose window");
  Tensor x({1, kPoseDim, w});
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t d = 0; d < kPoseDim; ++d) x.at(0, d, i) = window.at(i, d);
  return x;
}

}  // namespace

std::vector<double> pose_feature_encode(PoseGenerator& model, const Tensor& window) {
  nn::NoGradGuard guard;
  const Tensor g = model.encode(Var(transpose_window(window, model.config().window)), kEval).value();
  return {g.data().begin(), g.data().end()};
}

GenerationState::GenerationState(std::size_t window) : size_(window), ring_(window * kPoseDim, 0.0) {
  if (window < 1) throw ValidationError("generation state", "window must be >= 1");
}

Tensor GenerationState::window() const {
  Tensor w({size_, kPoseDim});
  for (std::size_t i = 0; i < size_; ++i) {
    const std::size_t slot = (head_ + i) % size_;
    std::copy_n(ring_.data() + slot * kPoseDim, kPoseDim, w.ptr() + i * kPoseDim);
  }
  return w;
}

void GenerationState::push(std::span<const double> pose) {
  if (pose.size() != kPoseDim) throw ShapeError("pose vector", {kPoseDim}, {pose.size()});
  std::copy(pose.begin(), pose.end(), ring_.data() + head_ * kPoseDim);
  head_ = (head_ + 1) % size_;
  ++frame_;
}

std::vector<double> generate_frame(PoseGenerator& model, GenerationState& state, std::span<const double> audio) {
  if (!model.trained()) throw ValidationError("pose-generator", "model is untrained; train or load a checkpoint first");
  if (state.size() != model.config().window) {
    throw ValidationError("pose-generator", "generation state window differs from the model's");
  }
  if (audio.size() != kAudioDim) throw ShapeError("audio feature", {kAudioDim}, {audio.size()});
  nn::NoGradGuard guard;
  Var x(transpose_window(state.window(), state.size()));
  Var a(Tensor({1, kAudioDim}, std::vector<double>(audio.begin(), audio.end())));
  const Tensor y = model.forward(x, a, kEval).value();
  for (std::size_t d = 0; d < kPoseDim; ++d) {
    if (!std::isfinite(y[d])) {
      throw RuntimeError("pose-generator", "non-finite output at frame " + std::to_string(state.frame()) + ", dimension " +
                                               std::to_string(d));
    }
  }
  std::vector<double> pose(y.data().begin(), y.data().end());
  state.push(pose);
  return pose;
}

Tensor generate_sequence(PoseGenerator& model, const Tensor& features) {
  features.expect_shape({0, kAudioDim}, "audio features");
  const std::size_t n = features.dim(0);
  GenerationState state(model.config().window);
  Tensor out({n, kPoseDim});
  for (std::size_t t = 0; t < n; ++t) {
    const auto p = generate_frame(model, state, features.data().subspan(t * kAudioDim, kAudioDim));
    std::copy(p.begin(), p.end(), out.ptr() + t * kPoseDim);
  }
  return out;
}

double SamplingSchedule::teacher_probability(std::uint64_t step) const {
  if (interval == 0) throw ValidationError("sampling schedule", "interval must be positive");
  return std::pow(decay, static_cast<double>(step / interval));
}

void validate_generator_dataset(std::span<const GeneratorSample> dataset) {
  if (dataset.empty()) throw ValidationError("generator dataset", "dataset is empty");
  for (const auto& s : dataset) {
    s.features.expect_shape({0, kAudioDim}, "generator features");
    s.poses.expect_shape({0, kPoseDim}, "generator poses");
    if (s.features.dim(0) != s.poses.dim(0)) {
      throw ValidationError("generator dataset", "song '" + s.song_id + "' has " + std::to_string(s.features.dim(0)) +
                                                     " feature frames but " + std::to_string(s.poses.dim(0)) + " pose frames");
    }
    if (!s.poses.all_finite() || !s.features.all_finite()) {
      throw ValidationError("generator dataset", "song '" + s.song_id + "' has non-finite values");
    }
  }
}

double teacher_forced_l1(PoseGenerator& model, std::span<const GeneratorSample> dataset) {
  validate_generator_dataset(dataset);
  nn::NoGradGuard guard;
  const std::size_t w = model.config().window;
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& s : dataset) {
    const std::size_t n = s.poses.dim(0);
    Tensor x({n, kPoseDim, w});
    for (std::size_t t = 0; t < n; ++t) fill_window(s.poses.ptr(), static_cast<std::ptrdiff_t>(t), w, x.ptr() + t * kPoseDim * w);
    const Tensor y = model.forward(Var(std::move(x)), Var(s.features), kEval).value();
    for (std::size_t i = 0; i < y.size(); ++i) total += std::abs(y[i] - s.poses[i]);
    count += y.size();
  }
  return total / static_cast<double>(count);
}

pipeline::ModelCheckpoint generator_checkpoint(PoseGenerator& model, GenreId genre, const pose::PoseStats& stats, json metadata) {
  metadata["genre"] = genre.value();
  metadata["pose_stats"] = stats.to_json();
  metadata["trained"] = model.trained();
  return pipeline::capture(pipeline::ModelKind::kGenerator, model.config().to_json(), std::move(metadata), model.registry());
}

LoadedGenerator load_generator(const pipeline::ModelCheckpoint& checkpoint) {
  if (checkpoint.kind != pipeline::ModelKind::kGenerator) {
    throw ValidationError("pose-generator", std::string("checkpoint holds a ") + pipeline::to_string(checkpoint.kind) +
                                                " model, not a generator");
  }
  PoseGenerator model(GeneratorConfig::from_json(checkpoint.config), 0);
  auto reg = model.registry();
  pipeline::restore(checkpoint, reg);
  const auto& meta = checkpoint.metadata;
  if (!meta.contains("genre") || !meta.contains("pose_stats")) {
    throw ValidationError("pose-generator", "checkpoint metadata lacks genre or pose stats");
  }
  model.mark_trained(meta.value("trained", false));
  return {std::move(model), GenreId(meta["genre"].get<int>()), pose::PoseStats::from_json(meta["pose_stats"])};
}

TrainGeneratorResult train_generator(std::span<const GeneratorSample> dataset, GeneratorConfig config, GenreId genre,
                                     const pose::PoseStats& stats, const TrainGeneratorOptions& options) {
  validate_generator_dataset(dataset);
  if (options.batch_size < 1 || options.crop_frames < 1) throw ValidationError("train-generator", "batch and crop must be >= 1");

  Rng rng(options.seed);
  PoseGenerator model(std::move(config), rng.next_u64());
  TeacherSampler sampler(rng.next_u64());
  auto registry = model.registry();
  nn::Adam adam(registry, {.learning_rate = options.learning_rate});
  const std::size_t w = model.config().window;
  const std::size_t batch = options.batch_size;

  TrainGeneratorResult result;
  for (std::uint64_t k = 0; k < options.steps; ++k) {
    const std::uint64_t step = options.start_step + k;
    const double p_tf = options.schedule.teacher_probability(step);
    if (options.final_learning_rate) {
      const double f = 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(options.steps)));
      adam.set_learning_rate(*options.final_learning_rate + (options.learning_rate - *options.final_learning_rate) * f);
    }

    // Crops: (song, start, length). All crops in a step share one length.
    std::size_t len = options.crop_frames;
    std::vector<std::pair<const GeneratorSample*, std::size_t>> crops;
    for (std::size_t b = 0; b < batch; ++b) {
      const auto& s = dataset[rng.index(dataset.size())];
      crops.emplace_back(&s, 0);
      len = std::min(len, s.poses.dim(0));
    }
    // Start drawn from [-(len-1), n-1] and clamped, so the first frames (zero
    // history) and last frames are covered about as often as the middle.
    for (auto& [s, start] : crops) {
      const std::size_t n = s->poses.dim(0);
      const std::size_t raw = rng.index(n + len - 1);
      start = std::min(raw < len - 1 ? 0 : raw - (len - 1), n - len);
    }

    // Mixed history: ground truth everywhere, then student poses where the
    // sampler says so.
    std::vector<Tensor> history;
    for (const auto& [s, start] : crops) history.push_back(s->poses);
    std::size_t teacher = 0;
    if (p_tf < 1.0) {
      nn::NoGradGuard guard;
      for (std::size_t i = 0; i < len; ++i) {
        Tensor x({batch, kPoseDim, w});
        Tensor a({batch, kAudioDim});
        for (std::size_t b = 0; b < batch; ++b) {
          const auto t = crops[b].second + i;
          fill_window(history[b].ptr(), static_cast<std::ptrdiff_t>(t), w, x.ptr() + b * kPoseDim * w);
          std::copy_n(crops[b].first->features.ptr() + t * kAudioDim, kAudioDim, a.ptr() + b * kAudioDim);
        }
        const Tensor y = model.forward(Var(std::move(x)), Var(std::move(a)), kEval).value();
        for (std::size_t b = 0; b < batch; ++b) {
          if (sampler.use_teacher(p_tf)) {
            ++teacher;
          } else {
            std::copy_n(y.ptr() + b * kPoseDim, kPoseDim, history[b].ptr() + (crops[b].second + i) * kPoseDim);
          }
        }
      }
    } else {
      teacher = batch * len;
    }

    const std::size_t n = batch * len;
    Tensor x({n, kPoseDim, w});
    Tensor a({n, kAudioDim});
    Tensor target({n, kPoseDim});
    for (std::size_t b = 0; b < batch; ++b) {
      const auto& [s, start] = crops[b];
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t row = b * len + i, t = start + i;
        fill_window(history[b].ptr(), static_cast<std::ptrdiff_t>(t), w, x.ptr() + row * kPoseDim * w);
        std::copy_n(s->features.ptr() + t * kAudioDim, kAudioDim, a.ptr() + row * kAudioDim);
        std::copy_n(s->poses.ptr() + t * kPoseDim, kPoseDim, target.ptr() + row * kPoseDim);
      }
    }
    registry.zero_grad();
    Var loss = nn::l1_loss(model.forward(Var(std::move(x)), Var(std::move(a)), ForwardContext{Mode::kTrain, &rng}), target);
    nn::backward(loss);
    adam.step();

    GeneratorStepLog row{step, loss.value()[0], p_tf, static_cast<double>(teacher) / static_cast<double>(n)};
    if (options.log_every > 0 && ((k + 1) % options.log_every == 0 || k + 1 == options.steps)) {
      result.log.push_back(row);
      if (options.on_log) options.on_log(row);
    }
  }

  if (options.steps > 0) model.mark_trained();
  json meta{{"steps", options.steps},
            {"start_step", options.start_step},
            {"learning_rate", options.learning_rate},
            {"batch_size", options.batch_size},
            {"crop_frames", options.crop_frames},
            {"seed", options.seed},
            {"schedule", {{"decay", options.schedule.decay}, {"interval", options.schedule.interval}}}};
  if (options.final_learning_rate) meta["final_learning_rate"] = *options.final_learning_rate;
  if (!result.log.empty()) meta["final_l1"] = result.log.back().l1;
  result.checkpoint = generator_checkpoint(model, genre, stats, std::move(meta));
  return result;
}

}  // namespace choreo::generator
