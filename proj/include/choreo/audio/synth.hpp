#pragma once

#include <cstdint>

#include "choreo/audio/audio_clip.hpp"

namespace choreo::audio {

inline constexpr double kMinBpm = 40.0;
inline constexpr double kMaxBpm = 240.0;

/// Per-genre click timbre: every beat is a decaying sinusoid burst.
struct GenreTimbre {
  double carrier_hz;
  double decay_seconds;
  int accent_period;  // every n-th beat is accented
};

const GenreTimbre& genre_timbre(GenreId genre);

/// Deterministic click track: onsets at exactly i * 60 / bpm seconds,
/// i = 0, 1, ..., with a genre-specific carrier and envelope plus a low
/// seeded noise floor. Throws ValidationError for bpm outside [40, 240] or
/// a non-positive duration.
AudioClip synth_clip(GenreId genre, double bpm, double duration_seconds, std::uint64_t seed,
                     double sample_rate = kSampleRate);

/// Onset times (seconds) of the click track within its duration.
std::vector<double> synth_onsets(double bpm, double duration_seconds);

}  // namespace choreo::audio
