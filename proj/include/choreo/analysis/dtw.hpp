#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "choreo/nn/tensor.hpp"
#include "choreo/pose/pose_format.hpp"

namespace choreo::analysis {

/// Classic DTW between [Ta, D] and [Tb, D] with steps (1,0), (0,1), (1,1)
/// and Euclidean frame cost. Throws ValidationError on empty or mismatched
/// inputs.
double dtw_distance(const nn::Tensor& a, const nn::Tensor& b);

struct TrainingSequence {
  std::string song_id;
  nn::Tensor poses;  // [T, 74], normalized
};

struct DtwMatch {
  std::size_t segment = 0;  // index of the generated segment
  std::size_t generated_begin = 0;
  std::size_t generated_end = 0;  // exclusive
  std::string training_song;
  std::size_t training_begin = 0;
  std::size_t training_end = 0;
  double distance = 0.0;
};

inline constexpr std::size_t kDefaultSegmentFrames = 50;

/// Splits both the generated sequence and every training sequence into
/// consecutive non-overlapping segments of `segment_len` frames (a trailing
/// remainder is dropped) and pairs each generated segment with its nearest
/// training segment. Ties go to the earliest training song, then the
/// earliest segment. One match per generated segment, in order.
std::vector<DtwMatch> match_segments(const nn::Tensor& generated, std::span<const TrainingSequence> corpus,
                                     std::size_t segment_len = kDefaultSegmentFrames);

nlohmann::json match_report(std::span<const DtwMatch> matches, std::size_t segment_len);

/// Two rows of stick figures (front view, every `stride` frames): the
/// generated segment above, its matched training segment below.
std::string render_match_strip(const pose::GlobalSequence& generated, const pose::GlobalSequence& training,
                               const DtwMatch& match, const pose::Skeleton& skeleton, std::size_t stride = 10);

struct MotionStats {
  double mean_speed = 0.0;   // horizontal root speed, m/s
  double path_length = 0.0;  // horizontal root path, m
  std::vector<std::array<double, 3>> joint_range;  // per joint, max - min along x, y, z
  /// Mean over frames and the four heel/toe joints of
  /// contact_label(height) * horizontal joint speed (m/s).
  double foot_slide = 0.0;

  nlohmann::json to_json() const;
};

/// Throws ValidationError for fewer than 2 frames.
MotionStats motion_stats(const pose::GlobalSequence& frames, const pose::Skeleton& skeleton, double fps = 25.0);

}  // namespace choreo::analysis
