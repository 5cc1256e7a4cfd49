#include "choreo/audio/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "choreo/core/rng.hpp"

namespace choreo::audio {

namespace {

constexpr std::array<GenreTimbre, kGenreCount> kTimbres{{
    {2200.0, 0.025, 2},  // cha-cha
    {550.0, 0.080, 4},   // rumba
    {5500.0, 0.015, 4},  // tango
    {1100.0, 0.120, 3},  // waltz
}};

constexpr double kClickAmplitude = 0.8;
constexpr double kNoiseLevel = 0.01;

}  // namespace

const GenreTimbre& genre_timbre(GenreId genre) { return kTimbres[genre.index()]; }

std::vector<double> synth_onsets(double bpm, double duration_seconds) {
  std::vector<double> onsets;
  const double period = 60.0 / bpm;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * period;
    if (t >= duration_seconds) break;
    onsets.push_back(t);
  }
  return onsets;
}

AudioClip synth_clip(GenreId genre, double bpm, double duration_seconds, std::uint64_t seed, double sample_rate) {
  if (!(bpm >= kMinBpm && bpm <= kMaxBpm)) {
    throw ValidationError("synth", "bpm " + std::to_string(bpm) + " outside [40, 240]");
  }
  if (!(duration_seconds > 0.0)) throw ValidationError("synth", "duration must be positive");
  if (!(sample_rate > 0.0)) throw ValidationError("synth", "sample rate must be positive");

  const GenreTimbre& timbre = genre_timbre(genre);
  Rng rng(seed);
  const auto onsets = synth_onsets(bpm, duration_seconds);
  std::vector<double> gains(onsets.size());
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const double accent = (i % static_cast<std::size_t>(timbre.accent_period) == 0) ? 1.0 : 0.7;
    gains[i] = kClickAmplitude * accent * rng.uniform(0.9, 1.0);
  }

  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.bpm = bpm;
  clip.genre = genre;
  const auto n = static_cast<std::size_t>(std::floor(duration_seconds * sample_rate + 1e-9));
  clip.samples.resize(n);
  const double period = 60.0 / bpm;
  const double omega = 2.0 * std::numbers::pi * timbre.carrier_hz;
  for (std::size_t s = 0; s < n; ++s) {
    const double t = static_cast<double>(s) / sample_rate;
    const auto beat = static_cast<std::size_t>(std::floor(t / period + 1e-12));
    double v = 0.0;
    if (beat < onsets.size()) {
      const double since = std::max(0.0, t - onsets[beat]);
      v = gains[beat] * std::exp(-since / timbre.decay_seconds) * std::sin(omega * since);
    }
    v += kNoiseLevel * rng.normal();
    clip.samples[s] = std::clamp(v, -1.0, 1.0);
  }
  return clip;
}

}  // namespace choreo::audio
