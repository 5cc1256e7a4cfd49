#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "choreo/nn/layers.hpp"

namespace choreo::pipeline {

enum class ModelKind : std::uint32_t { kBpm = 0, kGenre = 1, kGenerator = 2 };

const char* to_string(ModelKind kind);

struct NamedTensor {
  std::string name;
  nn::Tensor tensor;
};

/// Single-file model snapshot.
///
/// Layout (all integers little-endian):
///
///   "CHOREOCK"                      8-byte magic
///   u32 version                     kCheckpointVersion
///   u32 kind                        ModelKind
///   u32 n, n bytes                  architecture config, JSON
///   u32 n, n bytes                  training metadata, JSON
///   u32 count                       tensor records follow
///     u32 n, n bytes                  name
///     u32 rank, rank x u64            shape
///     numel x f64                     payload, IEEE-754 binary64
///   32 bytes                        SHA-256 of every preceding byte
struct ModelCheckpoint {
  ModelKind kind = ModelKind::kBpm;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  /// Hex SHA-256 of the serialized payload; filled by serialize/deserialize.
  std::string hash;

  const nn::Tensor& tensor(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize(ModelCheckpoint& checkpoint);
/// Throws ValidationError("checkpoint", "hash mismatch ...") when the trailer
/// does not match, including truncated input.
ModelCheckpoint deserialize(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, ModelCheckpoint& checkpoint);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Snapshot of every parameter followed by every buffer of `registry`.
ModelCheckpoint capture(ModelKind kind, nlohmann::json config, nlohmann::json metadata,
                        const nn::ParameterRegistry& registry);

/// Copies tensors into `registry` by name. Every parameter and buffer must
/// be present with a matching shape.
void restore(const ModelCheckpoint& checkpoint, nn::ParameterRegistry& registry);

}  // namespace choreo::pipeline
