#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "choreo/core/genre.hpp"
#include "choreo/encoder/music_encoder.hpp"
#include "choreo/nn/layers.hpp"
#include "choreo/pipeline/checkpoint.hpp"

namespace choreo::genre {

inline constexpr std::size_t kWindowHalf = 15;
inline constexpr std::size_t kWindowFrames = 2 * kWindowHalf + 1;  // w_a = 30 -> t-15 .. t+15

/// 4 PoseConvBlocks (conv -> maxpool/2 -> leaky ReLU) take the 31-frame
/// window to length 1, then one FC layer yields the genre logits.
struct GenreNetConfig {
  std::size_t window = kWindowFrames;
  std::vector<std::size_t> channels{64, 64, 64, 64};
  std::size_t kernel = 3;
  double leak = 0.01;

  void validate() const;
  nlohmann::json to_json() const;
  static GenreNetConfig from_json(const nlohmann::json& j);
};

/// Rows t-15 .. t+15 of `features`, out-of-range rows replaced by the
/// nearest edge row. Result is [31, 128].
nn::Tensor genre_window(const encoder::FeatureSequence& features, std::size_t t);

class GenreClassifier {
 public:
  GenreClassifier(GenreNetConfig config, std::uint64_t seed);

  /// [N, 128, window] -> [N, 4] logits. Inputs are standardized with the
  /// stored per-feature statistics first.
  nn::Var forward(const nn::Var& x, const nn::ForwardContext& ctx);

  nn::ParameterRegistry registry();
  const GenreNetConfig& config() const { return config_; }

  bool trained() const { return trained_; }
  void mark_trained(bool v = true) { trained_ = v; }

  /// Per-feature input standardization, fitted on the training set.
  void set_input_stats(std::vector<double> mean, std::vector<double> inv_std);
  const nn::Tensor& input_mean() const { return input_mean_; }
  const nn::Tensor& input_inv_std() const { return input_inv_std_; }

 private:
  GenreNetConfig config_;
  nn::Sequential body_;
  nn::Sequential head_;
  std::size_t body_channels_ = 0;
  nn::Tensor input_mean_;
  nn::Tensor input_inv_std_;
  bool trained_ = false;
};

struct FramePrediction {
  std::array<double, kGenreCount> probabilities{};
  GenreId genre;
};

/// argmax with ties going to the lowest genre id.
GenreId argmax_genre(std::span<const double> scores);

/// Softmax of logits plus the argmax decision.
FramePrediction decide(std::span<const double> logits);

/// Throws ValidationError for an untrained model or a window that is not
/// [31, 128].
FramePrediction classify_frame(GenreClassifier& model, const nn::Tensor& window);

/// Every frame's prediction, batched.
std::vector<FramePrediction> classify_frames(GenreClassifier& model, const encoder::FeatureSequence& features);

/// Modal vote; ties go to the lowest genre id. Throws on an empty sequence.
GenreId majority_vote(std::span<const GenreId> votes);

GenreId classify_song(GenreClassifier& model, const encoder::FeatureSequence& features);

struct GenreSong {
  encoder::FeatureSequence features;
  GenreId genre;
  std::string song_id;
};

struct GenreEpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;  // on the epoch's minibatch
};

struct TrainGenreOptions {
  std::size_t epochs = 6000;
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
  std::size_t log_every = 1;
  std::function<void(const GenreEpochLog&)> on_epoch;
};

struct TrainGenreResult {
  pipeline::ModelCheckpoint checkpoint;
  std::vector<GenreEpochLog> log;
  double initial_loss = 0.0;  // full-dataset cross-entropy before the first update
};

/// One epoch is one Adam step on a minibatch of frames drawn uniformly from
/// the whole training set. Throws ValidationError if some genre has no song.
TrainGenreResult train_genre(std::span<const GenreSong> dataset, GenreNetConfig config,
                             const TrainGenreOptions& options);

/// Mean cross-entropy over every frame of every song (eval mode).
double genre_loss(GenreClassifier& model, std::span<const GenreSong> dataset);

struct GenreReport {
  double frame_accuracy = 0.0;
  std::array<std::array<std::size_t, kGenreCount>, kGenreCount> confusion{};  // [truth][predicted]
  double song_accuracy = 0.0;
  std::vector<std::pair<std::string, GenreId>> song_predictions;

  nlohmann::json to_json() const;
};

GenreReport evaluate_genre(GenreClassifier& model, std::span<const GenreSong> dataset);

pipeline::ModelCheckpoint genre_checkpoint(GenreClassifier& model, nlohmann::json metadata);
GenreClassifier load_genre_classifier(const pipeline::ModelCheckpoint& checkpoint);

}  // namespace choreo::genre
