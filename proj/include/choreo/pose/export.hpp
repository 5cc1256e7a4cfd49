#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "choreo/pose/pose_format.hpp"

namespace choreo::pose {

// Pose sequence file (JSON lines):
//   {"type":"header","fps":25.0,"dim":74,"frames":T,"normalized":false,"stats":<reference or null>}
//   {"t":0,"pose":[74 numbers]}
//   ...                                  one line per frame, t = 0..T-1
struct PoseFileHeader {
  double fps = 25.0;
  bool normalized = false;
  std::optional<std::string> stats_reference;
};

void write_pose_jsonl(std::ostream& out, const nn::Tensor& poses, const PoseFileHeader& header);
void write_pose_jsonl(const std::filesystem::path& path, const nn::Tensor& poses, const PoseFileHeader& header);

struct PoseFile {
  PoseFileHeader header;
  nn::Tensor poses;  // [T, 74]
};

/// Throws ValidationError naming the offending line.
PoseFile read_pose_jsonl(const std::filesystem::path& path);

// BVH with position-only channels:
//   HIERARCHY
//   ROOT Hips { OFFSET x y z  CHANNELS 3 Xposition Yposition Zposition  JOINT ... }
//   leaves carry an "End Site { OFFSET 0 0 0 }"
//   MOTION
//   Frames: T
//   Frame Time: 1/fps
//   per frame: 3 numbers per joint in hierarchy order; the root's are its
//   world position, every other joint's are its displacement from its parent.
void write_bvh(std::ostream& out, const GlobalSequence& frames, const Skeleton& skeleton, double fps = 25.0);
void write_bvh(const std::filesystem::path& path, const GlobalSequence& frames, const Skeleton& skeleton,
               double fps = 25.0);

/// Orthographic top (x-z) and front (x-y) views of frame `index` plus the
/// root path of the whole sequence as a polyline on the top view.
std::string render_svg(const GlobalSequence& frames, const Skeleton& skeleton, std::size_t index);

}  // namespace choreo::pose
