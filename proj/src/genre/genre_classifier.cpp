#include "choreo/genre/genre_classifier.hpp"

#include <algorithm>
#include <cmath>

#include "choreo/nn/adam.hpp"
#include "choreo/nn/ops.hpp"

namespace choreo::genre {

using encoder::kFeatureDim;
using nlohmann::json;
using nn::ForwardContext;
using nn::Mode;
using nn::Tensor;
using nn::Var;

namespace {

std::size_t body_length(const GenreNetConfig& c) {
  std::size_t t = c.window;
  for (std::size_t i = 0; i < c.channels.size(); ++i) t = t < 2 ? 0 : (t - 2) / 2 + 1;
  return t;
}

}  // namespace

void GenreNetConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("genre config", m); };
  if (window < 1) fail("window must be >= 1");
  if (channels.empty()) fail("need at least one conv block");
  for (std::size_t c : channels) {
    if (c < 1) fail("channel counts must be >= 1");
  }
  if (kernel < 1) fail("kernel size must be >= 1");
  if (!(leak > 0.0)) fail("leak slope must be positive");
  if (body_length(*this) < 1) fail("pooling collapses the window below one step");
}

json GenreNetConfig::to_json() const {
  return {{"window", window}, {"channels", channels}, {"kernel", kernel}, {"leak", leak}};
}

GenreNetConfig GenreNetConfig::from_json(const json& j) {
  try {
    GenreNetConfig c;
    c.window = j.at("window").get<std::size_t>();
    c.channels = j.at("channels").get<std::vector<std::size_t>>();
    c.kernel = j.at("kernel").get<std::size_t>();
    c.leak = j.at("leak").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError("genre config", std::string("malformed config: ") + e.what());
  }
}

Tensor genre_window(const encoder::FeatureSequence& features, std::size_t t) {
  const std::size_t n = features.frames();
  if (n == 0) throw ValidationError("genre window", "empty feature sequence");
  if (t >= n) throw ValidationError("genre window", "frame " + std::to_string(t) + " out of range");
  Tensor w({kWindowFrames, kFeatureDim});
  for (std::size_t i = 0; i < kWindowFrames; ++i) {
    const auto src = static_cast<std::ptrdiff_t>(t + i) - static_cast<std::ptrdiff_t>(kWindowHalf);
    const auto row = features.row(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(src, 0, static_cast<std::ptrdiff_t>(n) - 1)));
    std::copy(row.begin(), row.end(), w.ptr() + i * kFeatureDim);
  }
  return w;
}

GenreClassifier::GenreClassifier(GenreNetConfig config, std::uint64_t seed)
    : config_(std::move(config)), input_mean_({kFeatureDim}, 0.0), input_inv_std_({kFeatureDim}, 1.0) {
  config_.validate();
  Rng rng(seed);
  std::size_t in = kFeatureDim;
  for (std::size_t c : config_.channels) {
    body_.emplace<nn::Conv1d>(in, c, config_.kernel, 1, rng);
    body_.emplace<nn::MaxPool1d>(2, 2);
    body_.emplace<nn::LeakyRelu>(config_.leak);
    in = c;
  }
  body_channels_ = in * body_length(config_);
  head_.emplace<nn::Linear>(body_channels_, kGenreCount, rng);
}

void GenreClassifier::set_input_stats(std::vector<double> mean, std::vector<double> inv_std) {
  input_mean_ = Tensor({kFeatureDim}, std::move(mean));
  input_inv_std_ = Tensor({kFeatureDim}, std::move(inv_std));
}

Var GenreClassifier::forward(const Var& x, const ForwardContext& ctx) {
  x.value().expect_shape({0, kFeatureDim, config_.window}, "genre classifier input");
  const std::size_t n = x.shape()[0], w = config_.window;
  Tensor z = x.value();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t c = 0; c < kFeatureDim; ++c)
      for (std::size_t t = 0; t < w; ++t) z.at(b, c, t) = (z.at(b, c, t) - input_mean_[c]) * input_inv_std_[c];
  Var h = body_.forward(Var(std::move(z)), ctx);
  return head_.forward(nn::reshape(h, {n, body_channels_}), ctx);
}

nn::ParameterRegistry GenreClassifier::registry() {
  nn::ParameterRegistry r;
  body_.collect("body.", r);
  head_.collect("head.", r);
  r.buffers.push_back({"input.mean", &input_mean_});
  r.buffers.push_back({"input.inv_std", &input_inv_std_});
  return r;
}

GenreId argmax_genre(std::span<const double> scores) {
  if (scores.size() != kGenreCount) throw ShapeError("genre scores", {kGenreCount}, {scores.size()});
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return GenreId::from_index(best);
}

FramePrediction decide(std::span<const double> logits) {
  if (logits.size() != kGenreCount) throw ShapeError("genre logits", {kGenreCount}, {logits.size()});
  FramePrediction p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < kGenreCount; ++i) z += p.probabilities[i] = std::exp(logits[i] - m);
  for (double& v : p.probabilities) v /= z;
  // Decide on the logits so equal logits tie exactly even if exp rounds.
  p.genre = argmax_genre(logits);
  return p;
}

namespace {

// Windows for frames [first, first + count) of one song as [count, 128, 31].
Tensor window_batch(const encoder::FeatureSequence& features, std::span<const std::size_t> frames) {
  Tensor x({frames.size(), kFeatureDim, kWindowFrames});
  for (std::size_t b = 0; b < frames.size(); ++b) {
    const Tensor w = genre_window(features, frames[b]);
    for (std::size_t t = 0; t < kWindowFrames; ++t)
      for (std::size_t c = 0; c < kFeatureDim; ++c) x.at(b, c, t) = w.at(t, c);
  }
  return x;
}

void require_trained(const GenreClassifier& model) {
  if (!model.trained()) throw ValidationError("genre-classifier", "model is untrained; train or load a checkpoint first");
}

Tensor eval_logits(GenreClassifier& model, Tensor x) {
  nn::NoGradGuard guard;
  return model.forward(Var(std::move(x)), ForwardContext{Mode::kEval, nullptr}).value();
}

}  // namespace

FramePrediction classify_frame(GenreClassifier& model, const Tensor& window) {
  require_trained(model);
  window.expect_shape({kWindowFrames, kFeatureDim}, "genre window");
  Tensor x({1, kFeatureDim, kWindowFrames});
  for (std::size_t t = 0; t < kWindowFrames; ++t)
    for (std::size_t c = 0; c < kFeatureDim; ++c) x.at(0, c, t) = window.at(t, c);
  const Tensor logits = eval_logits(model, std::move(x));
  return decide(logits.data());
}

std::vector<FramePrediction> classify_frames(GenreClassifier& model, const encoder::FeatureSequence& features) {
  require_trained(model);
  const std::size_t n = features.frames();
  if (n == 0) throw ValidationError("genre-classifier", "empty feature sequence");
  std::vector<FramePrediction> out;
  out.reserve(n);
  constexpr std::size_t kBatch = 128;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += kBatch) {
    idx.clear();
    for (std::size_t t = start; t < std::min(n, start + kBatch); ++t) idx.push_back(t);
    const Tensor logits = eval_logits(model, window_batch(features, idx));
    for (std::size_t i = 0; i < idx.size(); ++i) out.push_back(decide(logits.data().subspan(i * kGenreCount, kGenreCount)));
  }
  return out;
}

GenreId majority_vote(std::span<const GenreId> votes) {
  if (votes.empty()) throw ValidationError("genre-classifier", "cannot vote over an empty sequence");
  std::array<double, kGenreCount> counts{};
  for (GenreId g : votes) counts[g.index()] += 1.0;
  return argmax_genre(counts);
}

GenreId classify_song(GenreClassifier& model, const encoder::FeatureSequence& features) {
  std::vector<GenreId> votes;
  for (const auto& p : classify_frames(model, features)) votes.push_back(p.genre);
  return majority_vote(votes);
}

double genre_loss(GenreClassifier& model, std::span<const GenreSong> dataset) {
  double total = 0.0;
  std::size_t frames = 0;
  for (const auto& song : dataset) {
    std::vector<std::size_t> idx(song.features.frames());
    for (std::size_t t = 0; t < idx.size(); ++t) idx[t] = t;
    const Tensor logits = eval_logits(model, window_batch(song.features, idx));
    std::vector<std::size_t> labels(idx.size(), song.genre.index());
    total += nn::cross_entropy(Var(logits), labels).value()[0] * static_cast<double>(idx.size());
    frames += idx.size();
  }
  return total / static_cast<double>(frames);
}

pipeline::ModelCheckpoint genre_checkpoint(GenreClassifier& model, json metadata) {
  metadata["trained"] = model.trained();
  return pipeline::capture(pipeline::ModelKind::kGenre, model.config().to_json(), std::move(metadata), model.registry());
}

GenreClassifier load_genre_classifier(const pipeline::ModelCheckpoint& checkpoint) {
  if (checkpoint.kind != pipeline::ModelKind::kGenre) {
    throw ValidationError("genre-classifier", std::string("checkpoint holds a ") + pipeline::to_string(checkpoint.kind) +
                                                  " model, not a genre model");
  }
  GenreClassifier model(GenreNetConfig::from_json(checkpoint.config), 0);
  auto reg = model.registry();
  pipeline::restore(checkpoint, reg);
  model.mark_trained(checkpoint.metadata.value("trained", false));
  return model;
}

TrainGenreResult train_genre(std::span<const GenreSong> dataset, GenreNetConfig config,
                             const TrainGenreOptions& options) {
  if (dataset.empty()) throw ValidationError("train-genre", "dataset is empty");
  std::array<std::size_t, kGenreCount> per_genre{};
  std::vector<std::pair<std::size_t, std::size_t>> frames;  // (song, frame)
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const auto& song = dataset[s];
    if (song.features.frames() == 0) throw ValidationError("train-genre", "song '" + song.song_id + "' has no frames");
    ++per_genre[song.genre.index()];
    for (std::size_t t = 0; t < song.features.frames(); ++t) frames.emplace_back(s, t);
  }
  for (std::size_t g = 0; g < kGenreCount; ++g) {
    if (per_genre[g] == 0) {
      throw ValidationError("train-genre", "no training song for genre " + std::string(GenreId::from_index(g).name()));
    }
  }
  if (options.batch_size < 1) throw ValidationError("train-genre", "batch size must be >= 1");

  Rng rng(options.seed);
  GenreClassifier model(std::move(config), rng.next_u64());

  // Per-feature standardization over all training frames.
  std::vector<double> mean(kFeatureDim, 0.0), inv_std(kFeatureDim, 1.0);
  {
    std::vector<double> sq(kFeatureDim, 0.0);
    for (const auto& song : dataset) {
      for (std::size_t t = 0; t < song.features.frames(); ++t) {
        const auto r = song.features.row(t);
        for (std::size_t c = 0; c < kFeatureDim; ++c) mean[c] += r[c];
      }
    }
    for (double& m : mean) m /= static_cast<double>(frames.size());
    for (const auto& song : dataset) {
      for (std::size_t t = 0; t < song.features.frames(); ++t) {
        const auto r = song.features.row(t);
        for (std::size_t c = 0; c < kFeatureDim; ++c) sq[c] += (r[c] - mean[c]) * (r[c] - mean[c]);
      }
    }
    for (std::size_t c = 0; c < kFeatureDim; ++c) {
      const double sd = std::sqrt(sq[c] / static_cast<double>(frames.size()));
      inv_std[c] = sd > 1e-8 ? 1.0 / sd : 1.0;
    }
  }
  model.set_input_stats(mean, inv_std);

  TrainGenreResult result;
  result.initial_loss = genre_loss(model, dataset);

  auto registry = model.registry();
  nn::Adam adam(registry, {.learning_rate = options.learning_rate});
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    Tensor x({options.batch_size, kFeatureDim, kWindowFrames});
    std::vector<std::size_t> labels(options.batch_size);
    for (std::size_t b = 0; b < options.batch_size; ++b) {
      const auto [s, t] = frames[rng.index(frames.size())];
      const Tensor w = genre_window(dataset[s].features, t);
      for (std::size_t i = 0; i < kWindowFrames; ++i)
        for (std::size_t c = 0; c < kFeatureDim; ++c) x.at(b, c, i) = w.at(i, c);
      labels[b] = dataset[s].genre.index();
    }
    registry.zero_grad();
    Var logits = model.forward(Var(std::move(x)), ForwardContext{Mode::kTrain, &rng});
    Var loss = nn::cross_entropy(logits, labels);
    std::size_t correct = 0;
    for (std::size_t b = 0; b < options.batch_size; ++b) {
      const auto row = logits.value().data().subspan(b * kGenreCount, kGenreCount);
      correct += argmax_genre(row).index() == labels[b];
    }
    nn::backward(loss);
    adam.step();
    GenreEpochLog row{epoch, loss.value()[0], static_cast<double>(correct) / static_cast<double>(options.batch_size)};
    if (options.log_every > 0 && (epoch % options.log_every == 0 || epoch == options.epochs)) {
      result.log.push_back(row);
      if (options.on_epoch) options.on_epoch(row);
    }
  }

  if (options.epochs > 0) model.mark_trained();
  json meta{{"epochs", options.epochs},
            {"learning_rate", options.learning_rate},
            {"batch_size", options.batch_size},
            {"seed", options.seed},
            {"train_songs", dataset.size()},
            {"initial_loss", result.initial_loss}};
  result.checkpoint = genre_checkpoint(model, std::move(meta));
  return result;
}

json GenreReport::to_json() const {
  json j;
  j["frame_accuracy"] = frame_accuracy;
  j["song_accuracy"] = song_accuracy;
  j["genres"] = json::array();
  for (auto name : kGenreNames) j["genres"].push_back(std::string(name));
  j["per_genre_confusion"] = confusion;
  j["songs"] = json::array();
  for (const auto& [id, g] : song_predictions) j["songs"].push_back({{"song", id}, {"predicted", g.value()}});
  return j;
}

GenreReport evaluate_genre(GenreClassifier& model, std::span<const GenreSong> dataset) {
  if (dataset.empty()) throw ValidationError("genre-classifier", "empty evaluation set");
  GenreReport r;
  std::size_t frames = 0, correct = 0, songs_correct = 0;
  for (const auto& song : dataset) {
    std::vector<GenreId> votes;
    for (const auto& p : classify_frames(model, song.features)) {
      ++r.confusion[song.genre.index()][p.genre.index()];
      correct += p.genre == song.genre;
      votes.push_back(p.genre);
    }
    frames += votes.size();
    const GenreId g = majority_vote(votes);
    songs_correct += g == song.genre;
    r.song_predictions.emplace_back(song.song_id, g);
  }
  r.frame_accuracy = static_cast<double>(correct) / static_cast<double>(frames);
  r.song_accuracy = static_cast<double>(songs_correct) / static_cast<double>(dataset.size());
  return r;
}

}  // namespace choreo::genre
