#include "choreo/encoder/music_encoder.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "choreo/core/hash.hpp"

namespace choreo::encoder {

using nn::Tensor;

PoolingWindow gaussian_window(bool centered) {
  PoolingWindow w;
  w.centered = centered;
  const double mid = 0.5 * (1.0 + static_cast<double>(kPoolSlots));
  double total = 0.0;
  for (std::size_t j = 1; j <= kPoolSlots; ++j) {
    const double d = centered ? static_cast<double>(j) - mid : static_cast<double>(j);
    w.weights[j - 1] = std::exp(-0.5 * d * d);
    total += w.weights[j - 1];
  }
  for (double& v : w.weights) v /= total;
  return w;
}

std::vector<double> pool_features(const PoolingWindow& window, const Tensor& psi) {
  psi.expect_shape({kPoolSlots, kFeatureDim}, "pooled activations");
  std::vector<double> a(kFeatureDim, 0.0);
  for (std::size_t j = 0; j < kPoolSlots; ++j) {
    const double w = window.weights[j];
    const double* r = psi.ptr() + j * kFeatureDim;
    for (std::size_t c = 0; c < kFeatureDim; ++c) a[c] += w * r[c];
  }
  return a;
}

AudioFeature FeatureSequence::feature(std::size_t t) const {
  if (t >= frames()) throw ValidationError("music-encoder", "frame " + std::to_string(t) + " out of range");
  const auto r = row(t);
  return {t, std::vector<double>(r.begin(), r.end())};
}

AudioFeature encode_frame(const bpm::FeatureExtractor& extractor, std::span<const double> window,
                          const PoolingWindow& pooling) {
  if (window.size() != extractor.input_length()) {
    throw ShapeError("audio window", {extractor.input_length()}, {window.size()});
  }
  return {0, pool_features(pooling, extractor.extract(window))};
}

FeatureSequence encode_song(const bpm::FeatureExtractor& extractor, const audio::AudioClip& clip,
                            const EncoderOptions& options) {
  clip.validate();
  const auto frames = audio::frame_audio(clip, options.fps, extractor.input_length());
  const std::size_t total = frames.count();
  if (total == 0) throw ValidationError("music-encoder", "clip shorter than one pose frame");
  const auto pooling = gaussian_window(options.centered_window);
  const std::size_t n = frames.window();
  const std::size_t batch = std::max<std::size_t>(1, options.batch);

  FeatureSequence out{Tensor({total, kFeatureDim}), options.fps};
  std::vector<double> buf(batch * n);
  for (std::size_t start = 0; start < total; start += batch) {
    const std::size_t count = std::min(batch, total - start);
    for (std::size_t i = 0; i < count; ++i) frames.extract(start + i, std::span<double>(buf).subspan(i * n, n));
    const Tensor psi = extractor.extract_batch(std::span<const double>(buf).first(count * n), count);
    for (std::size_t i = 0; i < count; ++i) {
      Tensor one({kPoolSlots, kFeatureDim},
                 std::vector<double>(psi.ptr() + i * kPoolSlots * kFeatureDim,
                                     psi.ptr() + (i + 1) * kPoolSlots * kFeatureDim));
      const auto a = pool_features(pooling, one);
      std::copy(a.begin(), a.end(), out.values.ptr() + (start + i) * kFeatureDim);
    }
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'C', 'H', 'O', 'R', 'E', 'O', 'F', 'T'};

template <class T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ValidationError("feature cache", "truncated header in " + path.string());
  }
  return v;
}

}  // namespace

void write_feature_cache(const std::filesystem::path& path, const FeatureSequence& features) {
  if (features.frames() == 0) throw ValidationError("feature cache", "nothing to write");
  features.values.expect_shape({0, kFeatureDim}, "feature cache rows");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("feature cache", "cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kFeatureCacheVersion);
  put<std::uint64_t>(out, features.frames());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kFeatureDim));
  put<double>(out, features.fps);
  out.write(reinterpret_cast<const char*>(features.values.ptr()),
            static_cast<std::streamsize>(features.values.size() * sizeof(double)));
  if (!out) throw RuntimeError("feature cache", "write failed for " + path.string());
}

FeatureSequence read_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("feature cache", "cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ValidationError("feature cache", path.string() + " is not a feature cache");
  }
  if (const auto v = get<std::uint32_t>(in, path); v != kFeatureCacheVersion) {
    throw ValidationError("feature cache", "unsupported version " + std::to_string(v));
  }
  const auto frames = get<std::uint64_t>(in, path);
  const auto dim = get<std::uint32_t>(in, path);
  const auto fps = get<double>(in, path);
  if (dim != kFeatureDim || frames == 0 || !(fps > 0.0)) {
    throw ValidationError("feature cache", "bad header in " + path.string());
  }
  FeatureSequence seq{Tensor({frames, kFeatureDim}), fps};
  if (!in.read(reinterpret_cast<char*>(seq.values.ptr()), static_cast<std::streamsize>(seq.values.size() * sizeof(double)))) {
    throw ValidationError("feature cache", "truncated payload in " + path.string());
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError("feature cache", "trailing bytes in " + path.string());
  return seq;
}

std::string feature_cache_key(const audio::AudioClip& clip, const std::string& checkpoint_hash,
                              const EncoderOptions& options) {
  std::vector<std::uint8_t> bytes;
  auto append = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  };
  append(clip.samples.data(), clip.samples.size() * sizeof(double));
  append(&clip.sample_rate, sizeof clip.sample_rate);
  append(checkpoint_hash.data(), checkpoint_hash.size());
  append(&options.fps, sizeof options.fps);
  const std::uint8_t centered = options.centered_window ? 1 : 0;
  append(&centered, 1);
  return sha256_hex(bytes);
}

FeatureSequence encode_song_cached(const bpm::FeatureExtractor& extractor, const audio::AudioClip& clip,
                                   const std::filesystem::path& cache_dir, const EncoderOptions& options) {
  const auto path = cache_dir / (feature_cache_key(clip, extractor.checkpoint_hash(), options) + ".feat");
  if (std::filesystem::exists(path)) {
    auto cached = read_feature_cache(path);
    if (cached.frames() == audio::pose_frame_count(clip.samples.size(), clip.sample_rate, options.fps)) return cached;
  }
  auto seq = encode_song(extractor, clip, options);
  std::error_code ec;
  std::filesystem::create_directories(cache_dir, ec);
  if (ec) throw RuntimeError("feature cache", "cannot create " + cache_dir.string() + ": " + ec.message());
  // Write-then-rename so a concurrent reader never sees a partial file.
  const auto tmp = path.string() + ".tmp";
  write_feature_cache(tmp, seq);
  std::filesystem::rename(tmp, path);
  return seq;
}

}  // namespace choreo::encoder
