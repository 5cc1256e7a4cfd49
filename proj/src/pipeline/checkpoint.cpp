#include "choreo/pipeline/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "choreo/core/hash.hpp"

namespace choreo::pipeline {

namespace {

constexpr char kMagic[8] = {'C', 'H', 'O', 'R', 'E', 'O', 'C', 'K'};

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  void bytes(void* p, std::size_t n) {
    if (n > b_.size() - pos_) throw ValidationError("checkpoint", "truncated record");
    std::memcpy(p, b_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  std::string str() {
    std::string s(u32(), '\0');
    bytes(s.data(), s.size());
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBpm: return "bpm";
    case ModelKind::kGenre: return "genre";
    case ModelKind::kGenerator: return "generator";
  }
  return "unknown";
}

const nn::Tensor& ModelCheckpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.tensor;
  }
  throw ValidationError("checkpoint", "missing tensor '" + name + "'");
}

std::vector<std::uint8_t> serialize(ModelCheckpoint& checkpoint) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(checkpoint.kind));
  w.str(checkpoint.config.dump());
  w.str(checkpoint.metadata.dump());
  w.u32(static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& t : checkpoint.tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.tensor.rank()));
    for (std::size_t d : t.tensor.shape()) w.u64(d);
    w.bytes(t.tensor.ptr(), t.tensor.size() * sizeof(double));
  }
  const auto digest = sha256(w.out);
  checkpoint.hash = to_hex(digest);
  w.bytes(digest.data(), digest.size());
  return std::move(w.out);
}

ModelCheckpoint deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic + 32 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    // A file cut short before its trailer cannot carry a valid hash either.
    if (bytes.size() >= sizeof kMagic && std::memcmp(bytes.data(), kMagic, sizeof kMagic) == 0) {
      throw ValidationError("checkpoint", "hash mismatch (file too short)");
    }
    throw ValidationError("checkpoint", "not a checkpoint file (bad magic)");
  }
  const auto body = bytes.first(bytes.size() - 32);
  const auto digest = sha256(body);
  if (!std::equal(digest.begin(), digest.end(), bytes.end() - 32)) {
    throw ValidationError("checkpoint", "hash mismatch: payload does not match its trailer");
  }

  Reader r(body);
  char magic[8];
  r.bytes(magic, sizeof magic);
  ModelCheckpoint ckpt;
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw ValidationError("checkpoint", "unsupported version " + std::to_string(version));
  }
  const std::uint32_t kind = r.u32();
  if (kind > static_cast<std::uint32_t>(ModelKind::kGenerator)) {
    throw ValidationError("checkpoint", "unknown model kind " + std::to_string(kind));
  }
  ckpt.kind = static_cast<ModelKind>(kind);
  try {
    ckpt.config = nlohmann::json::parse(r.str());
    ckpt.metadata = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint", std::string("bad JSON header: ") + e.what());
  }
  const std::uint32_t count = r.u32();
  ckpt.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str();
    nn::Shape shape(r.u32());
    for (auto& d : shape) d = r.u64();
    t.tensor = nn::Tensor(shape);
    r.bytes(t.tensor.ptr(), t.tensor.size() * sizeof(double));
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw ValidationError("checkpoint", "trailing bytes after tensor records");
  ckpt.hash = to_hex(digest);
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, ModelCheckpoint& checkpoint) {
  const auto bytes = serialize(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("checkpoint", "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RuntimeError("checkpoint", "write failed for " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("checkpoint", "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

ModelCheckpoint capture(ModelKind kind, nlohmann::json config, nlohmann::json metadata,
                        const nn::ParameterRegistry& registry) {
  ModelCheckpoint ckpt;
  ckpt.kind = kind;
  ckpt.config = std::move(config);
  ckpt.metadata = std::move(metadata);
  for (const auto& p : registry.parameters) ckpt.tensors.push_back({p.name, p.var.value()});
  for (const auto& b : registry.buffers) ckpt.tensors.push_back({b.name, *b.tensor});
  serialize(ckpt);
  return ckpt;
}

void restore(const ModelCheckpoint& checkpoint, nn::ParameterRegistry& registry) {
  std::map<std::string, const nn::Tensor*> by_name;
  for (const auto& t : checkpoint.tensors) by_name[t.name] = &t.tensor;
  auto lookup = [&](const std::string& name, const nn::Shape& shape) -> const nn::Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError("checkpoint", "missing tensor '" + name + "'");
    if (it->second->shape() != shape) throw ShapeError("checkpoint tensor '" + name + "'", shape, it->second->shape());
    return *it->second;
  };
  for (auto& p : registry.parameters) p.var.mutable_value() = lookup(p.name, p.var.shape());
  for (auto& b : registry.buffers) *b.tensor = lookup(b.name, b.tensor->shape());
}

}  // namespace choreo::pipeline
