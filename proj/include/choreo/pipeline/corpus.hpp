#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "choreo/audio/audio_clip.hpp"
#include "choreo/core/genre.hpp"
#include "choreo/pose/pose_format.hpp"

namespace choreo::pipeline {

/// Everything needed to regenerate one synthetic song (and its dance).
struct SongSpec {
  std::string id;
  std::string split;  // train | val | test
  GenreId genre;
  double bpm = 120.0;
  double seconds = 6.0;
  std::uint64_t seed = 0;
};

/// Tempo band used for a genre's songs in the genre and dance corpora.
std::pair<double, double> genre_bpm_range(GenreId genre);

struct CorpusOptions {
  std::uint64_t seed = 1;
  // BPM pretraining: random genres, tempo uniform in [bpm_min, bpm_max].
  std::size_t bpm_train = 200, bpm_val = 20, bpm_test = 20;
  double bpm_seconds = 6.0;
  double bpm_min = 70.0, bpm_max = 170.0;
  // Genre classification: genres cycle 1..4, tempo from genre_bpm_range.
  std::size_t genre_train = 56, genre_test = 6;
  double genre_seconds = 12.0;
  // Dance: audio plus a beat-locked synthetic dance per song.
  std::size_t dance_per_genre = 4;
  double dance_seconds = 12.0;
};

std::vector<SongSpec> plan_bpm_corpus(const CorpusOptions& options);
std::vector<SongSpec> plan_genre_corpus(const CorpusOptions& options);
std::vector<SongSpec> plan_dance_corpus(const CorpusOptions& options);

audio::AudioClip render_clip(const SongSpec& spec);
pose::GlobalSequence render_dance(const SongSpec& spec);

// Corpus index file (index.json):
//   {"songs": [{"id", "split", "genre", "bpm", "seconds", "seed", "wav", "poses"?}, ...]}
// Paths are relative to the index file.
struct IndexedSong {
  SongSpec spec;
  std::filesystem::path wav;
  std::filesystem::path poses;  // raw pose JSONL; empty when absent
};

/// Writes WAVs (and raw pose JSONL for dance corpora) plus index.json under `dir`.
std::vector<IndexedSong> write_corpus(const std::filesystem::path& dir, const std::vector<SongSpec>& songs, bool with_dance);
std::vector<IndexedSong> read_corpus_index(const std::filesystem::path& index);

}  // namespace choreo::pipeline
