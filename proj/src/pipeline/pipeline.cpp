#include "choreo/pipeline/pipeline.hpp"

#include <fstream>

#include "choreo/audio/wav.hpp"
#include "choreo/bpm/bpm_net.hpp"
#include "choreo/core/runtime.hpp"
#include "choreo/encoder/music_encoder.hpp"
#include "choreo/generator/pose_generator.hpp"
#include "choreo/genre/genre_classifier.hpp"
#include "choreo/pose/export.hpp"

namespace choreo::pipeline {

PipelineResult run_pipeline(const PipelineConfig& config, const audio::AudioClip& clip, const std::string& song,
                            const std::filesystem::path& out_dir) {
  config.validate();
  configure_runtime(config.threads);
  clip.validate();
  if (clip.sample_rate != audio::kSampleRate) {
    throw ValidationError("audio-io", "expected " + std::to_string(static_cast<int>(audio::kSampleRate)) +
                                          " Hz audio, got " + std::to_string(clip.sample_rate));
  }

  const auto bpm_ckpt = load_checkpoint(config.bpm_checkpoint);
  const auto genre_ckpt = load_checkpoint(config.genre_checkpoint);
  const auto extractor = bpm::extract_lower_blocks(bpm_ckpt);
  auto classifier = genre::load_genre_classifier(genre_ckpt);

  // 1. music -> audio features
  encoder::EncoderOptions enc{.fps = config.fps, .centered_window = config.centered_window};
  const auto features = config.feature_cache_dir ? encoder::encode_song_cached(extractor, clip, *config.feature_cache_dir, enc)
                                                 : encoder::encode_song(extractor, clip, enc);
  // 2. genre by majority vote
  const GenreId genre = genre::classify_song(classifier, features);

  // 3. that genre's generator, and only that one
  const auto gen_ckpt = load_checkpoint(config.generators[genre.index()]);
  auto gen = generator::load_generator(gen_ckpt);
  if (gen.genre != genre) {
    throw ValidationError("pose-generator", "generator." + std::to_string(genre.value()) + " was trained for genre " +
                                                std::to_string(gen.genre.value()));
  }

  // 4. one pose per audio frame
  const nn::Tensor poses = generator::generate_sequence(gen.model, features.values);
  const auto globals = pose::features_to_globals(pose::denormalize(poses, gen.stats), pose::RootTransform{},
                                                 pose::Skeleton::standard(), config.fps);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw RuntimeError("pipeline", "cannot create " + out_dir.string() + ": " + ec.message());
  PipelineResult r{genre, poses.dim(0), out_dir / (song + ".poses.jsonl"), out_dir / (song + ".bvh"),
                   out_dir / (song + ".manifest.json"), {}};
  pose::write_pose_jsonl(r.poses_jsonl, poses, {config.fps, true, gen_ckpt.hash});
  pose::write_bvh(r.bvh, globals, pose::Skeleton::standard(), config.fps);

  r.manifest_json = {{"song", song},
                     {"genre", genre.value()},
                     {"genre_name", std::string(genre.name())},
                     {"frames", r.frames},
                     {"fps", config.fps},
                     {"seed", config.seed},
                     {"checkpoints",
                      {{"bpm", bpm_ckpt.hash}, {"genre", genre_ckpt.hash}, {"generator", gen_ckpt.hash}}},
                     {"outputs", {{"poses", r.poses_jsonl.filename().string()}, {"bvh", r.bvh.filename().string()}}}};
  std::ofstream out(r.manifest, std::ios::trunc);
  if (!out) throw RuntimeError("pipeline", "cannot write " + r.manifest.string());
  out << r.manifest_json.dump(2) << '\n';
  return r;
}

PipelineResult run_pipeline(const PipelineConfig& config, const std::filesystem::path& wav,
                            const std::filesystem::path& out_dir) {
  return run_pipeline(config, audio::read_wav(wav), wav.stem().string(), out_dir);
}

}  // namespace choreo::pipeline
