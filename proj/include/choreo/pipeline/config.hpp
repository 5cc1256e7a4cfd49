#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "choreo/core/genre.hpp"

namespace choreo::pipeline {

/// Pipeline configuration file: one `key = value` per line, `#` starts a
/// comment, blank lines ignored. Relative paths resolve against the file's
/// directory.
///
///   bpm_checkpoint    = models/bpm.ckpt
///   genre_checkpoint  = models/genre.ckpt
///   generator.1       = models/gen-cha-cha.ckpt     # one per genre id 1..4
///   generator.2       = ...
///   feature_cache_dir = cache                       # optional
///   fps               = 25                          # optional
///   seed              = 1                           # optional
///   threads           = 0                           # optional, 0 = OpenMP default
///   centered_window   = false                       # optional
///
/// CHOREO_CACHE_DIR and CHOREO_THREADS override the corresponding keys.
struct PipelineConfig {
  std::filesystem::path bpm_checkpoint;
  std::filesystem::path genre_checkpoint;
  std::array<std::filesystem::path, kGenreCount> generators;
  std::optional<std::filesystem::path> feature_cache_dir;
  double fps = 25.0;
  std::uint64_t seed = 1;
  int threads = 0;
  bool centered_window = false;

  /// Throws ValidationError unless every checkpoint path is set and exists.
  void validate() const;
};

/// Throws ValidationError with the line number on malformed input, unknown
/// keys or missing required keys.
PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Applies CHOREO_CACHE_DIR / CHOREO_THREADS when set.
void apply_environment(PipelineConfig& config);

}  // namespace choreo::pipeline
