#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "choreo/core/genre.hpp"

namespace choreo::audio {

inline constexpr double kSampleRate = 22050.0;

/// Mono PCM in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  double sample_rate = kSampleRate;
  std::optional<double> bpm;
  std::optional<GenreId> genre;
  std::string song_id;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  /// Throws ValidationError on a non-positive rate or a sample outside [-1, 1].
  void validate() const;
};

/// mu-law codes in [0, resolution - 1].
struct QuantizedClip {
  std::vector<std::uint16_t> codes;
  double sample_rate = kSampleRate;
  int resolution = 255;
};

}  // namespace choreo::audio
