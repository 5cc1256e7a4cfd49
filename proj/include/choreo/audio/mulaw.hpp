#pragma once

#include "choreo/audio/audio_clip.hpp"

namespace choreo::audio {

// Continuous mu-law companding with mu = resolution, followed by uniform
// quantization of the companded value to `resolution` levels. Silence maps
// to the center code (resolution - 1) / 2.

int mulaw_encode_sample(double x, int resolution = 255);
double mulaw_decode_sample(int code, int resolution = 255);

/// Throws ValidationError naming the first sample outside [-1, 1].
QuantizedClip mulaw_encode(const AudioClip& clip, int resolution = 255);
/// Throws ValidationError naming the first code outside the resolution.
AudioClip mulaw_decode(const QuantizedClip& q);

}  // namespace choreo::audio
