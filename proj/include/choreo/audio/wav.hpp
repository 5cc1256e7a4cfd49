#pragma once

#include <filesystem>
#include <span>

#include "choreo/audio/audio_clip.hpp"

namespace choreo::audio {

/// Reads RIFF/WAVE 16-bit PCM, mono or stereo (stereo is averaged to mono).
AudioClip read_wav(const std::filesystem::path& path);
AudioClip parse_wav(std::span<const std::uint8_t> bytes);

/// Writes 16-bit PCM mono little-endian. Samples are clamped to [-1, 1].
void write_wav(const std::filesystem::path& path, const AudioClip& clip);
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);

}  // namespace choreo::audio
