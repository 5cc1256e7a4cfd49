#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "choreo/audio/audio_clip.hpp"
#include "choreo/core/genre.hpp"
#include "choreo/pipeline/config.hpp"

namespace choreo::pipeline {

struct PipelineResult {
  GenreId genre;
  std::size_t frames = 0;
  std::filesystem::path poses_jsonl;  // normalized pose vectors
  std::filesystem::path bvh;          // denormalized global skeleton
  std::filesystem::path manifest;
  nlohmann::json manifest_json;
};

/// Music in, dance out: encode the song, classify its genre, pick that
/// genre's generator and roll it out for every audio frame. Writes
/// <song>.poses.jsonl, <song>.bvh and <song>.manifest.json into `out_dir`.
/// Errors carry the failing stage ("config", "checkpoint", "music-encoder",
/// "genre-classifier", "pose-generator", ...).
PipelineResult run_pipeline(const PipelineConfig& config, const audio::AudioClip& clip, const std::string& song,
                            const std::filesystem::path& out_dir);

/// Same, reading a 22,050 Hz WAV; the song name is the file stem.
PipelineResult run_pipeline(const PipelineConfig& config, const std::filesystem::path& wav,
                            const std::filesystem::path& out_dir);

}  // namespace choreo::pipeline
