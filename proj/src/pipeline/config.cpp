#include "choreo/pipeline/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "choreo/core/error.hpp"

namespace choreo::pipeline {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& v, const std::string& where) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ValidationError("config", where + ": '" + v + "' is not a number");
  return out;
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("config", where + ": '" + v + "' is not a boolean");
}

}  // namespace

void PipelineConfig::validate() const {
  auto need = [](const std::filesystem::path& p, const std::string& key) {
    if (p.empty()) throw ValidationError("config", "missing " + key);
    if (!std::filesystem::exists(p)) throw ValidationError("config", key + " '" + p.string() + "' does not exist");
  };
  need(bpm_checkpoint, "bpm_checkpoint");
  need(genre_checkpoint, "genre_checkpoint");
  for (std::size_t g = 0; g < kGenreCount; ++g) need(generators[g], "generator." + std::to_string(g + 1));
  if (!(fps > 0.0)) throw ValidationError("config", "fps must be positive");
  if (threads < 0) throw ValidationError("config", "threads must be >= 0");
}

PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  std::array<bool, kGenreCount> have_gen{};
  bool have_bpm = false, have_genre = false;
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = "line " + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ValidationError("config", where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty() || value.empty()) throw ValidationError("config", where + ": empty key or value");

    if (key == "bpm_checkpoint") {
      c.bpm_checkpoint = resolve(value);
      have_bpm = true;
    } else if (key == "genre_checkpoint") {
      c.genre_checkpoint = resolve(value);
      have_genre = true;
    } else if (key.rfind("generator.", 0) == 0) {
      const int id = parse_number<int>(key.substr(10), where);
      const GenreId g(id);  // validates 1..4
      if (have_gen[g.index()]) throw ValidationError("config", where + ": duplicate " + key);
      c.generators[g.index()] = resolve(value);
      have_gen[g.index()] = true;
    } else if (key == "feature_cache_dir") {
      c.feature_cache_dir = resolve(value);
    } else if (key == "fps") {
      c.fps = parse_number<double>(value, where);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(value, where);
    } else if (key == "threads") {
      c.threads = parse_number<int>(value, where);
    } else if (key == "centered_window") {
      c.centered_window = parse_bool(value, where);
    } else {
      throw ValidationError("config", where + ": unknown key '" + key + "'");
    }
  }
  if (!have_bpm) throw ValidationError("config", "missing bpm_checkpoint");
  if (!have_genre) throw ValidationError("config", "missing genre_checkpoint");
  for (std::size_t g = 0; g < kGenreCount; ++g) {
    if (!have_gen[g]) throw ValidationError("config", "missing generator." + std::to_string(g + 1));
  }
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto c = parse_pipeline_config(ss.str(), path.parent_path());
  apply_environment(c);
  return c;
}

void apply_environment(PipelineConfig& config) {
  if (const char* dir = std::getenv("CHOREO_CACHE_DIR"); dir && *dir) config.feature_cache_dir = dir;
  if (const char* t = std::getenv("CHOREO_THREADS"); t && *t) config.threads = parse_number<int>(t, "CHOREO_THREADS");
}

}  // namespace choreo::pipeline
