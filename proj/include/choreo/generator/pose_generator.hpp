#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "choreo/core/genre.hpp"
#include "choreo/nn/layers.hpp"
#include "choreo/pipeline/checkpoint.hpp"
#include "choreo/pose/pose_format.hpp"

namespace choreo::generator {

inline constexpr std::size_t kAudioDim = 128;
using pose::kPoseDim;

/// One PoseConvBlock: causal conv -> maxpool -> leaky ReLU. `dilation` is
/// in units of input pose frames; the conv itself runs on the pooled signal,
/// so its tap spacing is dilation / (product of earlier pool strides).
struct PoseBlockSpec {
  std::size_t channels = 0;
  std::size_t kernel = 3;
  std::size_t dilation = 1;
  std::size_t pool = 2;
  std::size_t stride = 2;
};

struct GeneratorConfig {
  std::size_t window = 32;  // w_p
  std::vector<PoseBlockSpec> blocks;
  std::vector<std::size_t> decoder_hidden;  // FC sizes between [g_p, a] and the 74 outputs
  double leak = 0.01;

  /// Parameter budget around 4.15M.
  static GeneratorConfig desk_default();
  /// Narrow variant for quick experiments and tests.
  static GeneratorConfig small();

  /// Throws ValidationError unless pooling collapses `window` to exactly 1
  /// step and every dilation is a multiple of the stride before it.
  void validate() const;
  std::size_t pose_feature_dim() const { return blocks.back().channels; }
  std::size_t conv_dilation(std::size_t block) const;

  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
};

class PoseGenerator {
 public:
  PoseGenerator(GeneratorConfig config, std::uint64_t seed);

  /// g_p from a batch of windows [N, 74, w_p] -> [N, C].
  nn::Var encode(const nn::Var& windows, const nn::ForwardContext& ctx);
  /// Next pose from windows [N, 74, w_p] and audio features [N, 128] -> [N, 74].
  nn::Var forward(const nn::Var& windows, const nn::Var& audio, const nn::ForwardContext& ctx);

  nn::ParameterRegistry registry();
  std::size_t parameter_count() { return registry().parameter_count(); }
  const GeneratorConfig& config() const { return config_; }

  bool trained() const { return trained_; }
  /// Marks the weights usable for generation; tests use it on fresh weights.
  void mark_trained(bool v = true) { trained_ = v; }

 private:
  GeneratorConfig config_;
  nn::Sequential encoder_;
  nn::Sequential decoder_;
  bool trained_ = false;
};

/// g_p for a single window of w_p normalized poses given as [w_p, 74],
/// oldest first.
std::vector<double> pose_feature_encode(PoseGenerator& model, const nn::Tensor& window);

/// The last w_p generated poses, initially all zeros (the normalized mean).
class GenerationState {
 public:
  explicit GenerationState(std::size_t window);

  /// Unrolled window [w_p, 74], oldest first.
  nn::Tensor window() const;
  void push(std::span<const double> pose);
  std::size_t frame() const { return frame_; }
  std::size_t size() const { return size_; }

 private:
  std::size_t size_;
  std::vector<double> ring_;  // size_ x 74
  std::size_t head_ = 0;      // slot of the oldest pose
  std::size_t frame_ = 0;
};

/// p(t) from P(t-1; w_p) and a(t); appends p(t) to the state. Throws
/// ValidationError for an untrained model and RuntimeError naming the frame
/// when the output is non-finite.
std::vector<double> generate_frame(PoseGenerator& model, GenerationState& state, std::span<const double> audio);

/// One normalized pose per row of `features` ([T, 128]).
nn::Tensor generate_sequence(PoseGenerator& model, const nn::Tensor& features);

/// p_tf = decay^floor(step / interval).
struct SamplingSchedule {
  double decay = 0.999;
  std::uint64_t interval = 40000;

  double teacher_probability(std::uint64_t step) const;
};

/// Per-position teacher/student choice.
class TeacherSampler {
 public:
  explicit TeacherSampler(std::uint64_t seed) : rng_(seed) {}
  bool use_teacher(double p_tf) { return p_tf >= 1.0 || rng_.bernoulli(p_tf); }

 private:
  Rng rng_;
};

struct GeneratorSample {
  nn::Tensor features;  // [T, 128]
  nn::Tensor poses;     // [T, 74], normalized
  std::string song_id;
};

struct GeneratorStepLog {
  std::uint64_t step = 0;
  double l1 = 0.0;
  double teacher_probability = 1.0;
  double teacher_fraction = 1.0;  // share of history entries taken from ground truth
};

struct TrainGeneratorOptions {
  std::uint64_t steps = 1000;
  std::uint64_t start_step = 0;  // offset into the sampling schedule
  double learning_rate = 1e-5;
  /// When set, the rate follows a cosine from learning_rate down to this value over the run.
  std::optional<double> final_learning_rate;
  std::size_t batch_size = 4;
  std::size_t crop_frames = 250;
  SamplingSchedule schedule{};
  std::uint64_t seed = 1;
  std::size_t log_every = 1;
  std::function<void(const GeneratorStepLog&)> on_log;
};

struct TrainGeneratorResult {
  pipeline::ModelCheckpoint checkpoint;
  std::vector<GeneratorStepLog> log;
};

/// Throws ValidationError for an empty set or misaligned feature/pose lengths.
void validate_generator_dataset(std::span<const GeneratorSample> dataset);

/// Scheduled-sampling training with l1 loss. Each step draws `batch_size`
/// random crops. When p_tf < 1 the crop is first rolled out without
/// gradients, keeping each generated pose with probability 1 - p_tf; the
/// gradient pass then predicts every position from that mixed history.
TrainGeneratorResult train_generator(std::span<const GeneratorSample> dataset, GeneratorConfig config, GenreId genre,
                                     const pose::PoseStats& stats, const TrainGeneratorOptions& options);

/// Teacher-forced l1 over whole sequences, eval mode.
double teacher_forced_l1(PoseGenerator& model, std::span<const GeneratorSample> dataset);

/// Metadata carries the genre, the pose normalization stats and the trained flag.
pipeline::ModelCheckpoint generator_checkpoint(PoseGenerator& model, GenreId genre, const pose::PoseStats& stats,
                                               nlohmann::json metadata);

struct LoadedGenerator {
  PoseGenerator model;
  GenreId genre;
  pose::PoseStats stats;
};

LoadedGenerator load_generator(const pipeline::ModelCheckpoint& checkpoint);

}  // namespace choreo::generator
