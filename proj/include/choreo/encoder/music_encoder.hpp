#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "choreo/audio/audio_clip.hpp"
#include "choreo/audio/framing.hpp"
#include "choreo/bpm/bpm_net.hpp"
#include "choreo/nn/tensor.hpp"

namespace choreo::encoder {

inline constexpr std::size_t kPoolSlots = bpm::kFeatureSteps;
inline constexpr std::size_t kFeatureDim = bpm::kFeatureDim;

/// Weights w(1..10) applied to the 10 time slots of Psi, earliest first.
struct PoolingWindow {
  std::array<double, kPoolSlots> weights{};
  bool centered = false;
};

/// w(j) = exp(-j^2 / 2) / sum_k exp(-k^2 / 2), j = 1..10. This puts almost
/// all of the mass on the earliest slot. With `centered`, the Gaussian is
/// instead centered between slots 5 and 6, i.e. on the pose frame itself.
PoolingWindow gaussian_window(bool centered = false);

/// a = sum_j w(j) * psi[j, :]; psi is [10, 128].
std::vector<double> pool_features(const PoolingWindow& window, const nn::Tensor& psi);

struct AudioFeature {
  std::size_t frame = 0;
  std::vector<double> values;  // 128
};

/// Per-song feature matrix, one row per pose frame.
struct FeatureSequence {
  nn::Tensor values;  // [frames, 128]
  double fps = audio::kPoseFps;

  std::size_t frames() const { return values.empty() ? 0 : values.dim(0); }
  std::span<const double> row(std::size_t t) const { return values.data().subspan(t * kFeatureDim, kFeatureDim); }
  AudioFeature feature(std::size_t t) const;
};

struct EncoderOptions {
  double fps = audio::kPoseFps;
  bool centered_window = false;
  std::size_t batch = 8;  // windows per extractor call
};

AudioFeature encode_frame(const bpm::FeatureExtractor& extractor, std::span<const double> window,
                          const PoolingWindow& pooling = gaussian_window());

/// floor(duration * fps) features; row t comes from the window centered on t / fps.
FeatureSequence encode_song(const bpm::FeatureExtractor& extractor, const audio::AudioClip& clip,
                            const EncoderOptions& options = {});

// Feature cache file, little-endian:
//   "CHOREOFT"  8-byte magic
//   u32 version, u64 frames, u32 dim (128), f64 fps
//   frames x dim f64, row-major
inline constexpr std::uint32_t kFeatureCacheVersion = 1;

void write_feature_cache(const std::filesystem::path& path, const FeatureSequence& features);
FeatureSequence read_feature_cache(const std::filesystem::path& path);

/// Hex key over the clip's samples and rate, the extractor checkpoint hash,
/// and the encoder options.
std::string feature_cache_key(const audio::AudioClip& clip, const std::string& checkpoint_hash,
                              const EncoderOptions& options);

/// encode_song with a per-(song, checkpoint) cache under `cache_dir`.
FeatureSequence encode_song_cached(const bpm::FeatureExtractor& extractor, const audio::AudioClip& clip,
                                   const std::filesystem::path& cache_dir, const EncoderOptions& options = {});

}  // namespace choreo::encoder
