#pragma once

#include <span>

#include "choreo/audio/audio_clip.hpp"

namespace choreo::audio {

inline constexpr double kPoseFps = 25.0;
inline constexpr std::size_t kWindowSamples = 44100;

/// Lazily extracted per-pose-frame windows. Window k is centered on sample
/// round(k / fps * rate) (its index window/2), zero-padded past either end.
class AudioFrames {
 public:
  AudioFrames(const AudioClip& clip, double pose_fps, std::size_t window);

  /// floor(duration * fps)
  std::size_t count() const { return count_; }
  std::size_t window() const { return window_; }
  std::size_t center_sample(std::size_t k) const;
  void extract(std::size_t k, std::span<double> out) const;
  std::vector<double> extract(std::size_t k) const;

 private:
  const AudioClip* clip_;
  double fps_;
  std::size_t window_;
  std::size_t count_;
};

/// Throws ValidationError on an empty clip or an odd window length.
AudioFrames frame_audio(const AudioClip& clip, double pose_fps = kPoseFps, std::size_t window = kWindowSamples);

/// floor(duration * fps), computed without floating-point drift for integer rates.
std::size_t pose_frame_count(std::size_t samples, double sample_rate, double fps);

}  // namespace choreo::audio
