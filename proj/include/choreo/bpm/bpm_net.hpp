#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "choreo/audio/audio_clip.hpp"
#include "choreo/audio/framing.hpp"
#include "choreo/nn/layers.hpp"
#include "choreo/pipeline/checkpoint.hpp"

namespace choreo::bpm {

inline constexpr std::size_t kTransferBlocks = 10;
inline constexpr std::size_t kFeatureDim = 128;
inline constexpr std::size_t kFeatureSteps = 10;

struct BpmBlockSpec {
  std::size_t channels = 0;
  std::size_t kernel = 3;
  std::size_t dilation = 1;
  std::size_t pool = 1;
};

/// One BPM ConvBlock is
///   residual(conv(2C) -> batchnorm -> gated tanh) -> maxpool(pool) -> dropout.
struct BpmNetConfig {
  std::size_t input_length = audio::kWindowSamples;
  std::vector<BpmBlockSpec> blocks;
  std::vector<std::size_t> head_hidden{64};  // FC sizes between pooled features and the scalar output
  double dropout = 0.1;
  double bpm_mean = 120.0;
  double bpm_std = 30.0;

  static BpmNetConfig desk_default();

  /// Throws ValidationError unless there are >= 10 blocks, block 10 emits
  /// 128 channels and the first 10 blocks map input_length to 10 steps.
  void validate() const;
  void validate_stats() const;

  double standardize(double bpm) const { return (bpm - bpm_mean) / bpm_std; }
  double destandardize(double y) const { return y * bpm_std + bpm_mean; }

  nlohmann::json to_json() const;
  static BpmNetConfig from_json(const nlohmann::json& j);
};

/// Temporal length after the first `blocks` blocks.
std::size_t downsampled_length(const BpmNetConfig& config, std::size_t blocks);

class BpmNet {
 public:
  BpmNet(BpmNetConfig config, std::uint64_t seed);

  /// [N, 1, input_length] -> [N, 1] standardized BPM.
  nn::Var forward(const nn::Var& x, const nn::ForwardContext& ctx);
  /// Activation after block `blocks` (1-based count): [N, C, T].
  nn::Var features(const nn::Var& x, const nn::ForwardContext& ctx, std::size_t blocks = kTransferBlocks);

  nn::ParameterRegistry registry();
  const BpmNetConfig& config() const { return config_; }
  BpmNetConfig& mutable_config() { return config_; }

  /// Eval-mode tempo estimate in BPM for one window of exactly input_length samples.
  double predict(std::span<const double> window);

 private:
  BpmNetConfig config_;
  std::vector<std::unique_ptr<nn::Sequential>> blocks_;
  nn::Sequential head_;
};

/// Scalar standardized prediction for one window. Throws ValidationError on
/// a window whose length is not the configured input length.
double bpm_forward(BpmNet& net, std::span<const double> window);

/// Mean over the batch of squared residuals.
nn::Var bpm_loss(const nn::Var& prediction, const nn::Tensor& target);

struct BpmSample {
  audio::QuantizedClip audio;
  double bpm = 0.0;
  std::string song_id;
};

struct BpmEpochLog {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;  // NaN without a validation set
};

struct TrainBpmOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  std::size_t steps_per_epoch = 0;  // 0: ceil(dataset size / batch size)
  std::size_t crop_samples = 44100;  // 2 s at 22,050 Hz
  double learning_rate = 1e-3;
  /// When set, the rate follows a cosine from learning_rate down to this value over all steps.
  std::optional<double> final_learning_rate;
  std::uint64_t seed = 1;
  /// When set, these standardization stats are used instead of the
  /// training-set mean and standard deviation.
  std::optional<std::pair<double, double>> fixed_stats;
  std::function<void(const BpmEpochLog&)> on_epoch;
};

struct TrainBpmResult {
  pipeline::ModelCheckpoint checkpoint;
  std::vector<BpmEpochLog> log;
};

/// Throws ValidationError on an empty set, a clip shorter than the crop or a
/// non-finite target.
void validate_bpm_dataset(std::span<const BpmSample> dataset, std::size_t crop_samples);

TrainBpmResult train_bpm(std::span<const BpmSample> train, std::span<const BpmSample> validation,
                         BpmNetConfig config, const TrainBpmOptions& options);

/// Mean squared error in standardized units over fixed crops (start, middle
/// and end of every clip), eval mode.
double evaluate_bpm(BpmNet& net, std::span<const BpmSample> dataset, std::size_t crop_samples);

void write_bpm_log_csv(std::ostream& out, std::span<const BpmEpochLog> log);

pipeline::ModelCheckpoint bpm_checkpoint(BpmNet& net, nlohmann::json metadata);
BpmNet load_bpm_net(const pipeline::ModelCheckpoint& checkpoint);

/// The first 10 blocks of a trained BPM net, frozen and in eval mode.
/// Maps a 44,100-sample window to Psi in R^{10 x 128} (time x features).
class FeatureExtractor {
 public:
  explicit FeatureExtractor(std::shared_ptr<BpmNet> net, std::string checkpoint_hash = {});

  std::size_t input_length() const { return net_->config().input_length; }
  const std::string& checkpoint_hash() const { return hash_; }

  /// Psi for one window: [10, 128].
  nn::Tensor extract(std::span<const double> window) const;
  /// Psi for many windows laid out back to back: [N, 10, 128].
  nn::Tensor extract_batch(std::span<const double> windows, std::size_t count) const;

 private:
  std::shared_ptr<BpmNet> net_;
  std::string hash_;
};

/// Throws ValidationError when the checkpoint is not a BPM net or has fewer
/// than 10 blocks.
FeatureExtractor extract_lower_blocks(const pipeline::ModelCheckpoint& checkpoint);

}  // namespace choreo::bpm
