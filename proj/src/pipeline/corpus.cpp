#include "choreo/pipeline/corpus.hpp"

#include <fstream>

#include <json.hpp>

#include "choreo/audio/synth.hpp"
#include "choreo/audio/wav.hpp"
#include "choreo/core/rng.hpp"
#include "choreo/pose/export.hpp"
#include "choreo/pose/synth_dance.hpp"

namespace choreo::pipeline {

using nlohmann::json;

std::pair<double, double> genre_bpm_range(GenreId genre) {
  // Ballroom-like tempo bands, kept disjoint.
  static constexpr std::pair<double, double> kRanges[kGenreCount] = {
      {112.0, 124.0},  // cha-cha
      {96.0, 106.0},   // rumba
      {128.0, 138.0},  // tango
      {84.0, 92.0},    // waltz
  };
  return kRanges[genre.index()];
}

namespace {

std::string song_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

}  // namespace

std::vector<SongSpec> plan_bpm_corpus(const CorpusOptions& o) {
  if (!(o.bpm_min >= audio::kMinBpm && o.bpm_max <= audio::kMaxBpm && o.bpm_min <= o.bpm_max)) {
    throw ValidationError("synth-data", "bpm range must lie within [40, 240]");
  }
  Rng rng(o.seed ^ 0xB9A1ULL);
  std::vector<SongSpec> out;
  const std::size_t total = o.bpm_train + o.bpm_val + o.bpm_test;
  for (std::size_t i = 0; i < total; ++i) {
    SongSpec s;
    s.id = song_id("bpm", i);
    s.split = i < o.bpm_train ? "train" : i < o.bpm_train + o.bpm_val ? "val" : "test";
    s.genre = GenreId::from_index(rng.index(kGenreCount));
    s.bpm = rng.uniform(o.bpm_min, o.bpm_max);
    s.seconds = o.bpm_seconds;
    s.seed = rng.next_u64();
    out.push_back(s);
  }
  return out;
}

std::vector<SongSpec> plan_genre_corpus(const CorpusOptions& o) {
  Rng rng(o.seed ^ 0x6E17ULL);
  std::vector<SongSpec> out;
  for (std::size_t i = 0; i < o.genre_train + o.genre_test; ++i) {
    SongSpec s;
    s.id = song_id("genre", i);
    s.split = i < o.genre_train ? "train" : "test";
    s.genre = GenreId::from_index(i % kGenreCount);
    const auto [lo, hi] = genre_bpm_range(s.genre);
    s.bpm = rng.uniform(lo, hi);
    s.seconds = o.genre_seconds;
    s.seed = rng.next_u64();
    out.push_back(s);
  }
  return out;
}

std::vector<SongSpec> plan_dance_corpus(const CorpusOptions& o) {
  Rng rng(o.seed ^ 0xDA7CULL);
  std::vector<SongSpec> out;
  for (std::size_t g = 0; g < kGenreCount; ++g) {
    for (std::size_t i = 0; i < o.dance_per_genre; ++i) {
      SongSpec s;
      s.genre = GenreId::from_index(g);
      s.id = std::string("dance-") + std::string(s.genre.name()) + "-" + std::to_string(i);
      s.split = "train";
      const auto [lo, hi] = genre_bpm_range(s.genre);
      s.bpm = rng.uniform(lo, hi);
      s.seconds = o.dance_seconds;
      s.seed = rng.next_u64();
      out.push_back(s);
    }
  }
  return out;
}

audio::AudioClip render_clip(const SongSpec& spec) {
  auto clip = audio::synth_clip(spec.genre, spec.bpm, spec.seconds, spec.seed);
  clip.song_id = spec.id;
  return clip;
}

pose::GlobalSequence render_dance(const SongSpec& spec) {
  // Independent stream from the audio's so the two can be varied separately.
  return pose::synth_dance(spec.genre, spec.bpm, spec.seconds, spec.seed ^ 0x5DA11CEULL);
}

std::vector<IndexedSong> write_corpus(const std::filesystem::path& dir, const std::vector<SongSpec>& songs, bool with_dance) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeError("synth-data", "cannot create " + dir.string() + ": " + ec.message());
  json index{{"songs", json::array()}};
  std::vector<IndexedSong> out;
  for (const auto& s : songs) {
    IndexedSong e{s, dir / (s.id + ".wav"), {}};
    audio::write_wav(e.wav, render_clip(s));
    json j{{"id", s.id}, {"split", s.split}, {"genre", s.genre.value()}, {"bpm", s.bpm},
           {"seconds", s.seconds}, {"seed", s.seed}, {"wav", s.id + ".wav"}};
    if (with_dance) {
      e.poses = dir / (s.id + ".poses.jsonl");
      const auto raw = pose::globals_to_features(render_dance(s), pose::Skeleton::standard());
      pose::write_pose_jsonl(e.poses, raw, {25.0, false, std::nullopt});
      j["poses"] = s.id + ".poses.jsonl";
    }
    index["songs"].push_back(j);
    out.push_back(std::move(e));
  }
  std::ofstream f(dir / "index.json", std::ios::trunc);
  if (!f) throw RuntimeError("synth-data", "cannot write index in " + dir.string());
  f << index.dump(2) << '\n';
  return out;
}

std::vector<IndexedSong> read_corpus_index(const std::filesystem::path& index) {
  std::ifstream in(index);
  if (!in) throw ValidationError("corpus", "cannot open " + index.string());
  const auto base = index.parent_path();
  std::vector<IndexedSong> out;
  try {
    const json j = json::parse(in);
    for (const auto& s : j.at("songs")) {
      IndexedSong e;
      e.spec.id = s.at("id").get<std::string>();
      e.spec.split = s.at("split").get<std::string>();
      e.spec.genre = GenreId(s.at("genre").get<int>());
      e.spec.bpm = s.at("bpm").get<double>();
      e.spec.seconds = s.at("seconds").get<double>();
      e.spec.seed = s.at("seed").get<std::uint64_t>();
      e.wav = base / s.at("wav").get<std::string>();
      if (s.contains("poses")) e.poses = base / s.at("poses").get<std::string>();
      out.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ValidationError("corpus", index.string() + ": " + e.what());
  }
  if (out.empty()) throw ValidationError("corpus", index.string() + " lists no songs");
  return out;
}

}  // namespace choreo::pipeline
