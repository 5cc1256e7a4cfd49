#include "choreo/audio/mulaw.hpp"

#include <cmath>

namespace choreo::audio {

namespace {

void check_resolution(int resolution) {
  if (resolution < 3 || resolution % 2 == 0 || resolution > 65535) {
    throw ValidationError("mulaw", "resolution must be odd and in [3, 65535]");
  }
}

}  // namespace

void AudioClip::validate() const {
  if (!(sample_rate > 0.0)) throw ValidationError("audio", "sample rate must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i] >= -1.0 && samples[i] <= 1.0)) {
      throw ValidationError("audio", "sample " + std::to_string(i) + " outside [-1, 1]");
    }
  }
}

int mulaw_encode_sample(double x, int resolution) {
  const double mu = resolution;
  const double companded = std::copysign(std::log1p(mu * std::abs(x)) / std::log1p(mu), x);
  const double levels = resolution - 1;
  return static_cast<int>(std::lround((companded + 1.0) * 0.5 * levels));
}

double mulaw_decode_sample(int code, int resolution) {
  const double mu = resolution;
  const double levels = resolution - 1;
  const double companded = 2.0 * code / levels - 1.0;
  return std::copysign(std::expm1(std::abs(companded) * std::log1p(mu)) / mu, companded);
}

QuantizedClip mulaw_encode(const AudioClip& clip, int resolution) {
  check_resolution(resolution);
  QuantizedClip q;
  q.sample_rate = clip.sample_rate;
  q.resolution = resolution;
  q.codes.resize(clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const double x = clip.samples[i];
    if (!(x >= -1.0 && x <= 1.0)) {
      throw ValidationError("mulaw", "sample " + std::to_string(i) + " outside [-1, 1]");
    }
    q.codes[i] = static_cast<std::uint16_t>(mulaw_encode_sample(x, resolution));
  }
  return q;
}

AudioClip mulaw_decode(const QuantizedClip& q) {
  check_resolution(q.resolution);
  AudioClip clip;
  clip.sample_rate = q.sample_rate;
  clip.samples.resize(q.codes.size());
  for (std::size_t i = 0; i < q.codes.size(); ++i) {
    if (q.codes[i] >= q.resolution) {
      throw ValidationError("mulaw", "code " + std::to_string(q.codes[i]) + " at index " + std::to_string(i) +
                                         " outside [0, " + std::to_string(q.resolution - 1) + "]");
    }
    clip.samples[i] = mulaw_decode_sample(q.codes[i], q.resolution);
  }
  return clip;
}

}  // namespace choreo::audio
