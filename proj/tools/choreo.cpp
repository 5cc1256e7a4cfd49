// choreo: dataset synthesis, training, inference and analysis front end.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "choreo/analysis/dtw.hpp"
#include "choreo/audio/mulaw.hpp"
#include "choreo/audio/wav.hpp"
#include "choreo/bpm/bpm_net.hpp"
#include "choreo/core/runtime.hpp"
#include "choreo/encoder/music_encoder.hpp"
#include "choreo/generator/pose_generator.hpp"
#include "choreo/genre/genre_classifier.hpp"
#include "choreo/pipeline/checkpoint.hpp"
#include "choreo/pipeline/config.hpp"
#include "choreo/pipeline/corpus.hpp"
#include "choreo/pipeline/pipeline.hpp"
#include "choreo/pose/export.hpp"

namespace fs = std::filesystem;
using namespace choreo;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
};

fs::path index_path(const fs::path& p) { return fs::is_directory(p) ? p / "index.json" : p; }

std::optional<pipeline::PipelineConfig> maybe_config(const Globals& g) {
  if (g.config.empty()) return std::nullopt;
  return pipeline::load_pipeline_config(g.config);
}

// Explicit flag wins, then the config file; otherwise a usage-level validation error.
fs::path bpm_checkpoint_path(const std::string& flag, const Globals& g) {
  if (!flag.empty()) return flag;
  if (auto cfg = maybe_config(g)) return cfg->bpm_checkpoint;
  throw ValidationError("cli", "need --bpm or --config with bpm_checkpoint");
}

fs::path require_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw ValidationError("cli", std::string("--out is required (") + what + ")");
  return g.out;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& p, const std::string& text) {
  ensure_parent(p);
  std::ofstream f(p, std::ios::trunc);
  if (!f) throw RuntimeError("cli", "cannot write " + p.string());
  f << text;
}

std::vector<bpm::BpmSample> load_bpm_split(const std::vector<pipeline::IndexedSong>& songs, const std::string& split) {
  std::vector<bpm::BpmSample> out;
  for (const auto& s : songs) {
    if (s.spec.split != split) continue;
    out.push_back({audio::mulaw_encode(audio::read_wav(s.wav)), s.spec.bpm, s.spec.id});
  }
  return out;
}

encoder::FeatureSequence encode(const bpm::FeatureExtractor& ex, const audio::AudioClip& clip,
                                const std::optional<fs::path>& cache, double fps) {
  encoder::EncoderOptions o{.fps = fps};
  return cache ? encoder::encode_song_cached(ex, clip, *cache, o) : encoder::encode_song(ex, clip, o);
}

std::optional<fs::path> cache_dir(const std::string& flag, const Globals& g) {
  if (!flag.empty()) return fs::path(flag);
  if (const char* env = std::getenv("CHOREO_CACHE_DIR"); env && *env) return fs::path(env);
  if (auto cfg = maybe_config(g)) return cfg->feature_cache_dir;
  return std::nullopt;
}

// Poses of a file in normalized units; raw files are normalized with `stats`.
nn::Tensor normalized_poses(const pose::PoseFile& f, const pose::PoseStats& stats) {
  return f.header.normalized ? f.poses : pose::normalize(f.poses, stats);
}

nn::Tensor raw_poses(const pose::PoseFile& f, const std::optional<pose::PoseStats>& stats, const std::string& what) {
  if (!f.header.normalized) return f.poses;
  if (!stats) throw ValidationError("cli", what + " is normalized; pass --generator to denormalize it");
  return pose::denormalize(f.poses, *stats);
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string kind = "all";
  pipeline::CorpusOptions corpus;
};

int cmd_synth(const SynthArgs& a, const Globals& g) {
  const fs::path out = require_out(g, "corpus directory");
  auto opts = a.corpus;
  opts.seed = g.seed;
  json summary;
  auto run = [&](const std::string& kind, const std::vector<pipeline::SongSpec>& plan, bool dance) {
    const auto songs = pipeline::write_corpus(out / kind, plan, dance);
    summary[kind] = {{"songs", songs.size()}, {"index", (out / kind / "index.json").string()}};
  };
  if (a.kind == "bpm" || a.kind == "all") run("bpm", pipeline::plan_bpm_corpus(opts), false);
  if (a.kind == "genre" || a.kind == "all") run("genre", pipeline::plan_genre_corpus(opts), false);
  if (a.kind == "dance" || a.kind == "all") run("dance", pipeline::plan_dance_corpus(opts), true);
  std::cout << summary.dump(2) << '\n';
  return 0;
}

struct TrainBpmArgs {
  std::string data;
  std::string log;
  bpm::TrainBpmOptions options;
};

int cmd_train_bpm(TrainBpmArgs& a, const Globals& g) {
  const fs::path out = require_out(g, "checkpoint path");
  const auto songs = pipeline::read_corpus_index(index_path(a.data));
  const auto train = load_bpm_split(songs, "train");
  const auto val = load_bpm_split(songs, "val");
  a.options.seed = g.seed;
  a.options.on_epoch = [](const bpm::BpmEpochLog& l) {
    std::fprintf(stderr, "epoch %zu  train_mse %.5f  val_mse %.5f\n", l.epoch, l.train_mse, l.val_mse);
  };
  auto result = bpm::train_bpm(train, val, bpm::BpmNetConfig::desk_default(), a.options);
  ensure_parent(out);
  pipeline::save_checkpoint(out, result.checkpoint);
  if (!a.log.empty()) {
    std::ostringstream csv;
    bpm::write_bpm_log_csv(csv, result.log);
    write_text(a.log, csv.str());
  }
  const auto test = load_bpm_split(songs, "test");
  json report{{"checkpoint", out.string()}, {"hash", result.checkpoint.hash}};
  if (!test.empty()) {
    auto net = bpm::load_bpm_net(result.checkpoint);
    report["test_mse"] = bpm::evaluate_bpm(net, test, a.options.crop_samples);
  }
  std::cout << report.dump(2) << '\n';
  return 0;
}

struct TrainGenreArgs {
  std::string data;
  std::string bpm;
  std::string cache;
  genre::TrainGenreOptions options;
};

std::vector<genre::GenreSong> encode_genre_split(const std::vector<pipeline::IndexedSong>& songs, const std::string& split,
                                                 const bpm::FeatureExtractor& ex, const std::optional<fs::path>& cache) {
  std::vector<genre::GenreSong> out;
  for (const auto& s : songs) {
    if (s.spec.split != split) continue;
    out.push_back({encode(ex, audio::read_wav(s.wav), cache, 25.0), s.spec.genre, s.spec.id});
  }
  return out;
}

int cmd_train_genre(TrainGenreArgs& a, const Globals& g) {
  const fs::path out = require_out(g, "checkpoint path");
  const auto songs = pipeline::read_corpus_index(index_path(a.data));
  const auto ex = bpm::extract_lower_blocks(pipeline::load_checkpoint(bpm_checkpoint_path(a.bpm, g)));
  const auto cache = cache_dir(a.cache, g);
  const auto train = encode_genre_split(songs, "train", ex, cache);
  const auto test = encode_genre_split(songs, "test", ex, cache);
  a.options.seed = g.seed;
  a.options.on_epoch = [](const genre::GenreEpochLog& l) {
    std::fprintf(stderr, "epoch %zu  loss %.5f  batch_acc %.3f\n", l.epoch, l.loss, l.accuracy);
  };
  auto result = genre::train_genre(train, genre::GenreNetConfig{}, a.options);
  ensure_parent(out);
  pipeline::save_checkpoint(out, result.checkpoint);
  auto model = genre::load_genre_classifier(result.checkpoint);
  json report{{"checkpoint", out.string()}, {"hash", result.checkpoint.hash},
              {"train", genre::evaluate_genre(model, train).to_json()}};
  if (!test.empty()) report["test"] = genre::evaluate_genre(model, test).to_json();
  std::cout << report.dump(2) << '\n';
  return 0;
}

struct TrainGeneratorArgs {
  std::string data;
  std::string bpm;
  std::string cache;
  int genre = 0;
  bool small = false;
  generator::TrainGeneratorOptions options;
};

int cmd_train_generator(TrainGeneratorArgs& a, const Globals& g) {
  const fs::path out = require_out(g, "checkpoint path");
  const GenreId genre(a.genre);
  const auto songs = pipeline::read_corpus_index(index_path(a.data));
  const auto ex = bpm::extract_lower_blocks(pipeline::load_checkpoint(bpm_checkpoint_path(a.bpm, g)));
  const auto cache = cache_dir(a.cache, g);

  std::vector<nn::Tensor> raws, feats;
  std::vector<std::string> ids;
  for (const auto& s : songs) {
    if (s.spec.genre != genre || s.poses.empty()) continue;
    const auto file = pose::read_pose_jsonl(s.poses);
    if (file.header.normalized) throw ValidationError("cli", s.poses.string() + ": training poses must be raw");
    auto f = encode(ex, audio::read_wav(s.wav), cache, file.header.fps).values;
    // Audio and motion are aligned frame by frame; trim to the shorter.
    const std::size_t T = std::min(f.dim(0), file.poses.dim(0));
    raws.push_back(file.poses.slice_rows(0, T));
    feats.push_back(f.slice_rows(0, T));
    ids.push_back(s.spec.id);
  }
  if (raws.empty()) {
    throw ValidationError("cli", "no dance songs of genre " + std::to_string(genre.value()) + " in " + a.data);
  }
  const auto stats = pose::compute_pose_stats(raws);
  std::vector<generator::GeneratorSample> dataset;
  for (std::size_t i = 0; i < raws.size(); ++i) dataset.push_back({feats[i], pose::normalize(raws[i], stats), ids[i]});

  a.options.seed = g.seed;
  a.options.on_log = [](const generator::GeneratorStepLog& l) {
    std::fprintf(stderr, "step %llu  l1 %.5f  p_tf %.6f  teacher %.3f\n", static_cast<unsigned long long>(l.step), l.l1,
                 l.teacher_probability, l.teacher_fraction);
  };
  const auto config = a.small ? generator::GeneratorConfig::small() : generator::GeneratorConfig::desk_default();
  auto result = generator::train_generator(dataset, config, genre, stats, a.options);
  ensure_parent(out);
  pipeline::save_checkpoint(out, result.checkpoint);
  auto loaded = generator::load_generator(result.checkpoint);
  std::cout << json{{"checkpoint", out.string()},
                    {"hash", result.checkpoint.hash},
                    {"genre", genre.value()},
                    {"teacher_forced_l1", generator::teacher_forced_l1(loaded.model, dataset)}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_classify(const std::vector<std::string>& wavs, const Globals& g) {
  auto cfg = maybe_config(g);
  if (!cfg) throw ValidationError("cli", "classify needs --config");
  configure_runtime(cfg->threads);
  const auto ex = bpm::extract_lower_blocks(pipeline::load_checkpoint(cfg->bpm_checkpoint));
  auto model = genre::load_genre_classifier(pipeline::load_checkpoint(cfg->genre_checkpoint));
  json out = json::array();
  for (const auto& w : wavs) {
    const auto features = encode(ex, audio::read_wav(w), cfg->feature_cache_dir, cfg->fps);
    const auto frames = genre::classify_frames(model, features);
    std::array<std::size_t, kGenreCount> votes{};
    std::vector<GenreId> ids;
    for (const auto& p : frames) {
      ++votes[p.genre.index()];
      ids.push_back(p.genre);
    }
    const GenreId song = genre::majority_vote(ids);
    out.push_back({{"file", w}, {"genre", song.value()}, {"genre_name", std::string(song.name())},
                   {"frames", frames.size()}, {"votes", votes}});
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_generate(const std::string& wav, const Globals& g) {
  auto cfg = maybe_config(g);
  if (!cfg) throw ValidationError("cli", "generate needs --config");
  if (g.seed != 1) cfg->seed = g.seed;
  const auto r = pipeline::run_pipeline(*cfg, wav, require_out(g, "output directory"));
  std::cout << r.manifest_json.dump(2) << '\n';
  return 0;
}

struct DtwArgs {
  std::string generated;
  std::string training;
  std::string generator;
  std::size_t segment = analysis::kDefaultSegmentFrames;
  std::string svg;
};

int cmd_dtw(const DtwArgs& a, const Globals& g) {
  const auto loaded = generator::load_generator(pipeline::load_checkpoint(a.generator));
  const auto gen_file = pose::read_pose_jsonl(a.generated);
  const nn::Tensor generated = normalized_poses(gen_file, loaded.stats);

  std::vector<analysis::TrainingSequence> corpus;
  std::map<std::string, pose::PoseFile> raw_training;
  for (const auto& s : pipeline::read_corpus_index(index_path(a.training))) {
    if (s.poses.empty() || s.spec.genre != loaded.genre) continue;
    auto f = pose::read_pose_jsonl(s.poses);
    corpus.push_back({s.spec.id, normalized_poses(f, loaded.stats)});
    raw_training.emplace(s.spec.id, std::move(f));
  }
  if (corpus.empty()) throw ValidationError("analysis", "no training dances of the generator's genre in " + a.training);

  const auto matches = analysis::match_segments(generated, corpus, a.segment);
  const json report = analysis::match_report(matches, a.segment);
  if (!g.out.empty()) write_text(g.out, report.dump(2) + "\n");
  std::cout << report.dump(2) << '\n';

  if (!a.svg.empty() && !matches.empty()) {
    // Strip for the closest match overall.
    const auto best = std::min_element(matches.begin(), matches.end(),
                                       [](const auto& x, const auto& y) { return x.distance < y.distance; });
    const auto& skel = pose::Skeleton::standard();
    const auto gen_globals = pose::features_to_globals(raw_poses(gen_file, loaded.stats, a.generated), {}, skel,
                                                       gen_file.header.fps);
    const auto& tf = raw_training.at(best->training_song);
    const auto train_globals = pose::features_to_globals(raw_poses(tf, loaded.stats, best->training_song), {}, skel,
                                                         tf.header.fps);
    write_text(a.svg, analysis::render_match_strip(gen_globals, train_globals, *best, skel));
  }
  return 0;
}

struct RenderArgs {
  std::string poses;
  std::string generator;
  std::size_t frame = 0;
};

int cmd_render(const RenderArgs& a, const Globals& g) {
  const auto file = pose::read_pose_jsonl(a.poses);
  std::optional<pose::PoseStats> stats;
  if (!a.generator.empty()) stats = generator::load_generator(pipeline::load_checkpoint(a.generator)).stats;
  const auto& skel = pose::Skeleton::standard();
  const auto globals = pose::features_to_globals(raw_poses(file, stats, a.poses), {}, skel, file.header.fps);
  if (a.frame >= globals.size()) {
    throw ValidationError("render", "frame " + std::to_string(a.frame) + " out of range (" +
                                        std::to_string(globals.size()) + " frames)");
  }
  if (!g.out.empty()) write_text(g.out, pose::render_svg(globals, skel, a.frame));
  json report{{"frames", globals.size()}};
  if (globals.size() >= 2) {
    const auto ms = analysis::motion_stats(globals, skel, file.header.fps);
    report["root_path_length"] = ms.path_length;
    report["motion"] = ms.to_json();
  } else {
    report["root_path_length"] = 0.0;
  }
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_param_count(const std::vector<std::string>& checkpoints, bool small) {
  json out = json::array();
  auto count = [](pipeline::ModelCheckpoint& ck) -> std::size_t {
    switch (ck.kind) {
      case pipeline::ModelKind::kBpm: return bpm::load_bpm_net(ck).registry().parameter_count();
      case pipeline::ModelKind::kGenre: return genre::load_genre_classifier(ck).registry().parameter_count();
      case pipeline::ModelKind::kGenerator: return generator::load_generator(ck).model.parameter_count();
    }
    return 0;
  };
  if (checkpoints.empty()) {
    generator::PoseGenerator model(small ? generator::GeneratorConfig::small() : generator::GeneratorConfig::desk_default(),
                                   1);
    out.push_back({{"model", small ? "generator (small config)" : "generator (default config)"},
                   {"parameters", model.parameter_count()}});
  }
  for (const auto& p : checkpoints) {
    auto ck = pipeline::load_checkpoint(p);
    out.push_back({{"checkpoint", p}, {"kind", pipeline::to_string(ck.kind)}, {"parameters", count(ck)}});
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_verify(const std::vector<std::string>& paths) {
  int rc = 0;
  for (const auto& p : paths) {
    try {
      const auto ck = pipeline::load_checkpoint(p);
      std::size_t values = 0;
      for (const auto& t : ck.tensors) values += t.tensor.size();
      std::cout << p << ": ok " << pipeline::to_string(ck.kind) << " tensors=" << ck.tensors.size()
                << " values=" << values << " sha256=" << ck.hash << '\n';
    } catch (const ValidationError& e) {
      std::cerr << p << ": " << e.what() << '\n';
      rc = 3;
    }
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"choreo - music-driven dance generation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "pipeline config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed for every random choice");
  app.add_option("--out", g.out, "output file or directory");
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0 = default)");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth-data", "write synthetic bpm/genre/dance corpora under --out");
  s->add_option("--kind", synth.kind)->check(CLI::IsMember({"bpm", "genre", "dance", "all"}));
  s->add_option("--bpm-train", synth.corpus.bpm_train);
  s->add_option("--bpm-val", synth.corpus.bpm_val);
  s->add_option("--bpm-test", synth.corpus.bpm_test);
  s->add_option("--bpm-seconds", synth.corpus.bpm_seconds);
  s->add_option("--genre-train", synth.corpus.genre_train);
  s->add_option("--genre-test", synth.corpus.genre_test);
  s->add_option("--genre-seconds", synth.corpus.genre_seconds);
  s->add_option("--dance-per-genre", synth.corpus.dance_per_genre);
  s->add_option("--dance-seconds", synth.corpus.dance_seconds);

  TrainBpmArgs tb;
  auto* b = app.add_subcommand("train-bpm", "pretrain the tempo network; checkpoint to --out");
  b->add_option("--data", tb.data, "bpm corpus directory or index.json")->required();
  b->add_option("--epochs", tb.options.epochs);
  b->add_option("--batch", tb.options.batch_size);
  b->add_option("--steps-per-epoch", tb.options.steps_per_epoch);
  b->add_option("--lr", tb.options.learning_rate);
  b->add_option("--log", tb.log, "CSV log (epoch,train_mse,val_mse)");

  TrainGenreArgs tg;
  auto* gc = app.add_subcommand("train-genre", "train the genre classifier on encoded audio");
  gc->add_option("--data", tg.data, "genre corpus directory or index.json")->required();
  gc->add_option("--bpm", tg.bpm, "tempo network checkpoint (default: from --config)");
  gc->add_option("--cache", tg.cache, "feature cache directory");
  gc->add_option("--epochs", tg.options.epochs);
  gc->add_option("--lr", tg.options.learning_rate);
  gc->add_option("--batch", tg.options.batch_size);
  gc->add_option("--log-every", tg.options.log_every);

  TrainGeneratorArgs tp;
  auto* p = app.add_subcommand("train-generator", "train one genre's pose generator");
  p->add_option("--data", tp.data, "dance corpus directory or index.json")->required();
  p->add_option("--genre", tp.genre, "genre id 1..4")->required()->check(CLI::Range(1, 4));
  p->add_option("--bpm", tp.bpm, "tempo network checkpoint (default: from --config)");
  p->add_option("--cache", tp.cache, "feature cache directory");
  p->add_option("--steps", tp.options.steps);
  p->add_option("--start-step", tp.options.start_step);
  p->add_option("--lr", tp.options.learning_rate);
  p->add_option("--batch", tp.options.batch_size);
  p->add_option("--crop", tp.options.crop_frames);
  p->add_option("--log-every", tp.options.log_every);
  p->add_flag("--small", tp.small, "use the small architecture");

  std::vector<std::string> classify_wavs;
  auto* c = app.add_subcommand("classify", "genre of each WAV (needs --config)");
  c->add_option("wav", classify_wavs)->required()->check(CLI::ExistingFile);

  std::string gen_wav;
  auto* gen = app.add_subcommand("generate", "full pipeline: WAV -> poses, BVH, manifest in --out");
  gen->add_option("wav", gen_wav)->required()->check(CLI::ExistingFile);

  DtwArgs dtw;
  auto* d = app.add_subcommand("analyze-dtw", "match generated segments to training segments");
  d->add_option("--generated", dtw.generated, "pose JSONL")->required()->check(CLI::ExistingFile);
  d->add_option("--training", dtw.training, "dance corpus directory or index.json")->required();
  d->add_option("--generator", dtw.generator, "generator checkpoint (genre and normalization)")->required();
  d->add_option("--segment", dtw.segment, "segment length in frames")->check(CLI::PositiveNumber);
  d->add_option("--svg", dtw.svg, "stick-figure strip of the closest match");

  RenderArgs rend;
  auto* r = app.add_subcommand("render", "SVG of one frame plus the root path; prints path length");
  r->add_option("poses", rend.poses)->required()->check(CLI::ExistingFile);
  r->add_option("--generator", rend.generator, "checkpoint whose stats denormalize the file");
  r->add_option("--frame", rend.frame);

  std::vector<std::string> count_paths;
  bool count_small = false;
  auto* pc = app.add_subcommand("param-count", "trainable parameters per checkpoint (default generator config if none)");
  pc->add_option("checkpoints", count_paths)->check(CLI::ExistingFile);
  pc->add_flag("--small", count_small);

  std::vector<std::string> verify_paths;
  auto* v = app.add_subcommand("verify-checkpoint", "check magic, structure and content hash");
  v->add_option("checkpoints", verify_paths)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    configure_runtime(threads);
    if (s->parsed()) return cmd_synth(synth, g);
    if (b->parsed()) return cmd_train_bpm(tb, g);
    if (gc->parsed()) return cmd_train_genre(tg, g);
    if (p->parsed()) return cmd_train_generator(tp, g);
    if (c->parsed()) return cmd_classify(classify_wavs, g);
    if (gen->parsed()) return cmd_generate(gen_wav, g);
    if (d->parsed()) return cmd_dtw(dtw, g);
    if (r->parsed()) return cmd_render(rend, g);
    if (pc->parsed()) return cmd_param_count(count_paths, count_small);
    if (v->parsed()) return cmd_verify(verify_paths);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 2;
}
