#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "choreo/audio/synth.hpp"
#include "choreo/audio/wav.hpp"
#include "choreo/bpm/bpm_net.hpp"
#include "choreo/generator/pose_generator.hpp"
#include "choreo/genre/genre_classifier.hpp"
#include "choreo/pipeline/config.hpp"
#include "choreo/pipeline/corpus.hpp"
#include "choreo/pipeline/pipeline.hpp"
#include "choreo/pose/export.hpp"

using namespace choreo;
using namespace choreo::pipeline;
namespace fs = std::filesystem;

namespace {

const char* kConfig = R"(# models
bpm_checkpoint   = models/bpm.ckpt
genre_checkpoint = /abs/genre.ckpt
generator.1 = g1.ckpt   # cha-cha
generator.2 = g2.ckpt
generator.3 = g3.ckpt
generator.4 = g4.ckpt

fps = 25
seed = 42
threads = 1
centered_window = true
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Untrained-but-usable checkpoints for all three networks.
PipelineConfig tiny_models(const fs::path& dir) {
  fs::create_directories(dir);
  PipelineConfig c;
  {
    bpm::BpmNet net(bpm::BpmNetConfig::desk_default(), 1);
    auto ck = bpm::bpm_checkpoint(net, {});
    save_checkpoint(c.bpm_checkpoint = dir / "bpm.ckpt", ck);
  }
  {
    genre::GenreClassifier g(genre::GenreNetConfig{}, 2);
    g.mark_trained();
    auto ck = genre::genre_checkpoint(g, {});
    save_checkpoint(c.genre_checkpoint = dir / "genre.ckpt", ck);
  }
  pose::PoseStats stats{std::vector<double>(pose::kPoseDim, 0.0), std::vector<double>(pose::kPoseDim, 0.1), {}};
  for (std::size_t g = 0; g < kGenreCount; ++g) {
    generator::PoseGenerator m(generator::GeneratorConfig::small(), 10 + g);
    m.mark_trained();
    auto ck = generator::generator_checkpoint(m, GenreId::from_index(g), stats, {});
    save_checkpoint(c.generators[g] = dir / ("gen" + std::to_string(g + 1) + ".ckpt"), ck);
  }
  return c;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("grammar, comments and relative paths") {
    const auto c = parse_pipeline_config(kConfig, "/base");
    CHECK(c.bpm_checkpoint == fs::path("/base/models/bpm.ckpt"));
    CHECK(c.genre_checkpoint == fs::path("/abs/genre.ckpt"));
    CHECK(c.generators[0] == fs::path("/base/g1.ckpt"));
    CHECK(c.generators[3] == fs::path("/base/g4.ckpt"));
    CHECK_FALSE(c.feature_cache_dir.has_value());
    CHECK(c.fps == 25.0);
    CHECK(c.seed == 42);
    CHECK(c.threads == 1);
    CHECK(c.centered_window);
  }

  TEST_CASE("errors name the line") {
    CHECK_THROWS_WITH_AS(parse_pipeline_config(std::string(kConfig) + "colour = red\n"),
                         doctest::Contains("line 13: unknown key 'colour'"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_pipeline_config(std::string(kConfig) + "just words\n"), doctest::Contains("line 13"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_pipeline_config(std::string(kConfig) + "seed = many\n"), doctest::Contains("line 13"),
                         ValidationError);
    CHECK_THROWS_AS(parse_pipeline_config(std::string(kConfig) + "generator.5 = x\n"), ValidationError);
    CHECK_THROWS_AS(parse_pipeline_config(std::string(kConfig) + "generator.2 = again\n"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_pipeline_config("bpm_checkpoint = a\ngenre_checkpoint = b\n"),
                         doctest::Contains("missing generator.1"), ValidationError);
  }

  TEST_CASE("environment overrides cache directory and threads only") {
    auto c = parse_pipeline_config(kConfig);
    ::setenv("CHOREO_CACHE_DIR", "/tmp/somewhere", 1);
    ::setenv("CHOREO_THREADS", "3", 1);
    apply_environment(c);
    ::unsetenv("CHOREO_CACHE_DIR");
    ::unsetenv("CHOREO_THREADS");
    CHECK(c.feature_cache_dir == fs::path("/tmp/somewhere"));
    CHECK(c.threads == 3);
    CHECK(c.seed == 42);
  }

  TEST_CASE("validate requires existing files") {
    const auto c = parse_pipeline_config(kConfig, "/nonexistent");
    CHECK_THROWS_AS(c.validate(), ValidationError);
  }
}

TEST_SUITE("corpus") {
  TEST_CASE("plans are deterministic and shaped as requested") {
    CorpusOptions o;
    o.seed = 5;
    const auto a = plan_genre_corpus(o), b = plan_genre_corpus(o);
    REQUIRE(a.size() == 62);
    std::array<int, kGenreCount> train_per_genre{};
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].bpm == b[i].bpm);
      CHECK(a[i].seed == b[i].seed);
      CHECK(a[i].seconds == 12.0);
      const auto [lo, hi] = genre_bpm_range(a[i].genre);
      CHECK(a[i].bpm >= lo);
      CHECK(a[i].bpm <= hi);
      if (a[i].split == "train") ++train_per_genre[a[i].genre.index()];
    }
    CHECK(train_per_genre == std::array<int, kGenreCount>{14, 14, 14, 14});
    CHECK(std::count_if(a.begin(), a.end(), [](const auto& s) { return s.split == "test"; }) == 6);

    const auto bp = plan_bpm_corpus(o);
    CHECK(bp.size() == 240);
    for (const auto& s : bp) {
      CHECK(s.bpm >= o.bpm_min);
      CHECK(s.bpm <= o.bpm_max);
    }
    o.seed = 6;
    CHECK(plan_bpm_corpus(o)[0].bpm != bp[0].bpm);
    CHECK(plan_dance_corpus(o).size() == 4 * o.dance_per_genre);
  }

  TEST_CASE("written corpus reads back") {
    const auto dir = fs::temp_directory_path() / "choreo_test_corpus";
    fs::remove_all(dir);
    CorpusOptions o;
    o.dance_per_genre = 1;
    o.dance_seconds = 1.0;
    const auto written = write_corpus(dir, plan_dance_corpus(o), true);
    const auto read = read_corpus_index(dir / "index.json");
    REQUIRE(read.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(read[i].spec.id == written[i].spec.id);
      CHECK(read[i].spec.seed == written[i].spec.seed);
      CHECK(read[i].spec.genre == written[i].spec.genre);
      CHECK(fs::exists(read[i].wav));
      const auto poses = pose::read_pose_jsonl(read[i].poses);
      CHECK(poses.poses.dim(0) == 25);
      CHECK_FALSE(poses.header.normalized);
      CHECK(audio::read_wav(read[i].wav).samples.size() == 22050);
    }
    fs::remove_all(dir);
    CHECK_THROWS_AS(read_corpus_index(dir / "index.json"), ValidationError);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("end to end: outputs, determinism, manifest") {
    const auto dir = fs::temp_directory_path() / "choreo_test_pipeline";
    fs::remove_all(dir);
    auto cfg = tiny_models(dir / "models");
    cfg.feature_cache_dir = dir / "cache";
    const auto clip = audio::synth_clip(GenreId(3), 130, 1.0, 9);
    audio::write_wav(dir / "song.wav", clip);

    const auto a = run_pipeline(cfg, dir / "song.wav", dir / "a");
    const auto b = run_pipeline(cfg, dir / "song.wav", dir / "b");  // second run hits the feature cache
    CHECK(a.frames == 25);
    CHECK(slurp(a.poses_jsonl) == slurp(b.poses_jsonl));
    CHECK(slurp(a.bvh) == slurp(b.bvh));
    CHECK(slurp(a.manifest) == slurp(b.manifest));
    CHECK(a.manifest_json["frames"] == 25);
    CHECK(a.manifest_json["genre"].get<int>() >= 1);
    CHECK(a.manifest_json["genre"].get<int>() <= 4);
    CHECK(a.manifest_json["song"] == "song");

    const auto poses = pose::read_pose_jsonl(a.poses_jsonl);
    CHECK(poses.header.normalized);
    CHECK(poses.header.stats_reference == a.manifest_json["checkpoints"]["generator"].get<std::string>());
    CHECK(poses.poses.dim(0) == 25);

    // a generator filed under the wrong genre is refused
    auto swapped = cfg;
    std::swap(swapped.generators[a.genre.index()], swapped.generators[(a.genre.index() + 1) % kGenreCount]);
    CHECK_THROWS_AS(run_pipeline(swapped, dir / "song.wav", dir / "c"), ValidationError);

    // corrupted checkpoint surfaces the hash mismatch
    fs::resize_file(cfg.genre_checkpoint, fs::file_size(cfg.genre_checkpoint) - 5);
    CHECK_THROWS_WITH_AS(run_pipeline(cfg, dir / "song.wav", dir / "d"), doctest::Contains("hash mismatch"),
                         ValidationError);

    auto other_rate = clip;
    other_rate.sample_rate = 44100;
    CHECK_THROWS_AS(run_pipeline(cfg, other_rate, "x", dir / "e"), ValidationError);
    fs::remove_all(dir);
  }
}
