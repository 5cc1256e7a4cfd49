#include "choreo/audio/framing.hpp"

#include <algorithm>
#include <cmath>

namespace choreo::audio {

std::size_t pose_frame_count(std::size_t samples, double sample_rate, double fps) {
  // samples * fps / rate, with a small guard so e.g. 2 s * 25 fps is exactly 50.
  const double frames = static_cast<double>(samples) * fps / sample_rate;
  return static_cast<std::size_t>(std::floor(frames + 1e-9));
}

AudioFrames::AudioFrames(const AudioClip& clip, double pose_fps, std::size_t window)
    : clip_(&clip), fps_(pose_fps), window_(window) {
  if (clip.samples.empty()) throw ValidationError("framing", "zero-length clip");
  if (window == 0 || window % 2 != 0) throw ValidationError("framing", "window length must be even and positive");
  if (!(pose_fps > 0.0)) throw ValidationError("framing", "fps must be positive");
  count_ = pose_frame_count(clip.samples.size(), clip.sample_rate, pose_fps);
}

std::size_t AudioFrames::center_sample(std::size_t k) const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(k) / fps_ * clip_->sample_rate));
}

void AudioFrames::extract(std::size_t k, std::span<double> out) const {
  if (out.size() != window_) throw ShapeError("frame window", {window_}, {out.size()});
  const auto start = static_cast<std::int64_t>(center_sample(k)) - static_cast<std::int64_t>(window_ / 2);
  const auto n = static_cast<std::int64_t>(clip_->samples.size());
  for (std::size_t i = 0; i < window_; ++i) {
    const std::int64_t src = start + static_cast<std::int64_t>(i);
    out[i] = (src >= 0 && src < n) ? clip_->samples[static_cast<std::size_t>(src)] : 0.0;
  }
}

std::vector<double> AudioFrames::extract(std::size_t k) const {
  std::vector<double> w(window_);
  extract(k, w);
  return w;
}

AudioFrames frame_audio(const AudioClip& clip, double pose_fps, std::size_t window) {
  return AudioFrames(clip, pose_fps, window);
}

}  // namespace choreo::audio
