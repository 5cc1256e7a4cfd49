#include "choreo/pose/export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "choreo/core/error.hpp"

namespace choreo::pose {

using nlohmann::json;

void write_pose_jsonl(std::ostream& out, const nn::Tensor& poses, const PoseFileHeader& header) {
  poses.expect_shape({0, kPoseDim}, "pose sequence");
  json h{{"type", "header"},
         {"fps", header.fps},
         {"dim", kPoseDim},
         {"frames", poses.dim(0)},
         {"normalized", header.normalized},
         {"stats", header.stats_reference ? json(*header.stats_reference) : json(nullptr)}};
  out << h.dump() << '\n';
  for (std::size_t t = 0; t < poses.dim(0); ++t) {
    const auto row = poses.data().subspan(t * kPoseDim, kPoseDim);
    out << json{{"t", t}, {"pose", std::vector<double>(row.begin(), row.end())}}.dump() << '\n';
  }
}

void write_pose_jsonl(const std::filesystem::path& path, const nn::Tensor& poses, const PoseFileHeader& header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("pose-export", "cannot write " + path.string());
  write_pose_jsonl(out, poses, header);
  if (!out) throw RuntimeError("pose-export", "write failed for " + path.string());
}

PoseFile read_pose_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("pose-file", "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& m) {
    throw ValidationError("pose-file", path.string() + ":" + std::to_string(lineno) + ": " + m);
  };
  PoseFile file;
  std::size_t frames = 0;
  std::vector<double> data;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(std::string("bad JSON: ") + e.what());
    }
    if (lineno == 1) {
      if (j.value("type", "") != "header") fail("first line must be the header");
      file.header.fps = j.value("fps", 25.0);
      file.header.normalized = j.value("normalized", false);
      if (j.contains("stats") && j["stats"].is_string()) file.header.stats_reference = j["stats"].get<std::string>();
      if (j.value("dim", std::size_t{0}) != kPoseDim) fail("dim must be 74");
      frames = j.value("frames", std::size_t{0});
      continue;
    }
    if (!j.contains("t") || !j.contains("pose") || !j["pose"].is_array()) fail("frame line needs t and pose");
    if (j["t"].get<std::size_t>() != data.size() / kPoseDim) fail("frame index out of sequence");
    const auto pose = j["pose"].get<std::vector<double>>();
    if (pose.size() != kPoseDim) fail("pose has " + std::to_string(pose.size()) + " values, expected 74");
    data.insert(data.end(), pose.begin(), pose.end());
  }
  if (lineno == 0) throw ValidationError("pose-file", path.string() + " is empty");
  const std::size_t n = data.size() / kPoseDim;
  if (n == 0 || n != frames) {
    throw ValidationError("pose-file", path.string() + ": header promises " + std::to_string(frames) + " frames, found " +
                                           std::to_string(n));
  }
  file.poses = nn::Tensor({n, kPoseDim}, std::move(data));
  return file;
}

void write_bvh(std::ostream& out, const GlobalSequence& frames, const Skeleton& skeleton, double fps) {
  skeleton.validate();
  if (frames.empty()) throw ValidationError("bvh", "no frames to write");
  out << std::setprecision(9);
  std::vector<std::size_t> order;
  std::function<void(std::size_t, int)> emit = [&](std::size_t j, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    out << pad << (skeleton.parents[j] < 0 ? "ROOT " : "JOINT ") << skeleton.names[j] << "\n" << pad << "{\n";
    const auto& o = skeleton.offsets[j];
    out << pad << "  OFFSET " << o.x() << ' ' << o.y() << ' ' << o.z() << "\n";
    out << pad << "  CHANNELS 3 Xposition Yposition Zposition\n";
    order.push_back(j);
    const auto kids = skeleton.children(j);
    if (kids.empty()) {
      out << pad << "  End Site\n" << pad << "  {\n" << pad << "    OFFSET 0 0 0\n" << pad << "  }\n";
    }
    for (std::size_t c : kids) emit(c, depth + 1);
    out << pad << "}\n";
  };
  out << "HIERARCHY\n";
  emit(skeleton.root, 0);
  out << "MOTION\nFrames: " << frames.size() << "\nFrame Time: " << 1.0 / fps << "\n";
  for (const auto& f : frames) {
    bool first = true;
    for (std::size_t j : order) {
      const int p = skeleton.parents[j];
      const Eigen::Vector3d v = p < 0 ? f.joints[j] : Eigen::Vector3d(f.joints[j] - f.joints[static_cast<std::size_t>(p)]);
      for (int c = 0; c < 3; ++c) {
        if (!first) out << ' ';
        out << v[c];
        first = false;
      }
    }
    out << '\n';
  }
}

void write_bvh(const std::filesystem::path& path, const GlobalSequence& frames, const Skeleton& skeleton, double fps) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("bvh", "cannot write " + path.string());
  write_bvh(out, frames, skeleton, fps);
  if (!out) throw RuntimeError("bvh", "write failed for " + path.string());
}

std::string render_svg(const GlobalSequence& frames, const Skeleton& skeleton, std::size_t index) {
  if (index >= frames.size()) throw ValidationError("render", "frame " + std::to_string(index) + " out of range");
  constexpr double kPanel = 400.0, kMargin = 20.0;

  // Top view bounds cover the whole root path plus the current pose.
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x, min_z = min_x, max_z = -min_x;
  auto grow = [&](const Eigen::Vector3d& p) {
    min_x = std::min(min_x, p.x()), max_x = std::max(max_x, p.x());
    min_z = std::min(min_z, p.z()), max_z = std::max(max_z, p.z());
  };
  for (const auto& f : frames) grow(f.joints[skeleton.root]);
  for (const auto& p : frames[index].joints) grow(p);
  const double span = std::max({max_x - min_x, max_z - min_z, 1e-3});
  const double s_top = (kPanel - 2 * kMargin) / span;
  auto top = [&](const Eigen::Vector3d& p) {
    return std::make_pair(kMargin + (p.x() - min_x) * s_top, kPanel - kMargin - (p.z() - min_z) * s_top);
  };

  const auto& cur = frames[index].joints;
  const Eigen::Vector3d root = cur[skeleton.root];
  double height = 0.0;
  for (const auto& p : cur) height = std::max(height, std::max(std::abs(p.x() - root.x()), p.y()));
  const double s_front = (kPanel - 2 * kMargin) / std::max(2.0 * height, 1e-3);
  auto front = [&](const Eigen::Vector3d& p) {
    return std::make_pair(kPanel + kPanel / 2 + (p.x() - root.x()) * s_front, kPanel - kMargin - p.y() * s_front);
  };

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * kPanel << "\" height=\"" << kPanel
      << "\" viewBox=\"0 0 " << 2 * kPanel << ' ' << kPanel << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kPanel << "\" y1=\"0\" x2=\"" << kPanel << "\" y2=\"" << kPanel << "\" stroke=\"#ccc\"/>\n";
  svg << "<text x=\"8\" y=\"16\" font-size=\"12\">top (x-z), frame " << index << "</text>\n";
  svg << "<text x=\"" << kPanel + 8 << "\" y=\"16\" font-size=\"12\">front (x-y)</text>\n";
  svg << "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"1.5\" points=\"";
  for (const auto& f : frames) {
    const auto [x, y] = top(f.joints[skeleton.root]);
    svg << x << ',' << y << ' ';
  }
  svg << "\"/>\n";
  auto bones = [&](auto project, const char* colour) {
    for (std::size_t j = 0; j < kJointCount; ++j) {
      const int p = skeleton.parents[j];
      if (p < 0) continue;
      const auto [x1, y1] = project(cur[static_cast<std::size_t>(p)]);
      const auto [x2, y2] = project(cur[j]);
      svg << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2 << "\" stroke=\"" << colour
          << "\" stroke-width=\"2\"/>\n";
    }
  };
  bones(top, "#1f4e9c");
  bones(front, "#1f4e9c");
  const auto [g1x, g1y] = front(Eigen::Vector3d(root.x() - height, 0.0, 0.0));
  const auto [g2x, g2y] = front(Eigen::Vector3d(root.x() + height, 0.0, 0.0));
  svg << "<line x1=\"" << g1x << "\" y1=\"" << g1y << "\" x2=\"" << g2x << "\" y2=\"" << g2y
      << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace choreo::pose
