#include "choreo/pose/pose_format.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>

#include "choreo/core/error.hpp"

namespace choreo::pose {

using nn::Tensor;

double foot_contact_label(double height, double beta) { return std::exp(-beta * std::max(height, 0.0)); }

Eigen::Matrix3d yaw_matrix(double heading) {
  const double c = std::cos(heading), s = std::sin(heading);
  Eigen::Matrix3d r;
  r << c, 0.0, s,  //
      0.0, 1.0, 0.0,  //
      -s, 0.0, c;
  return r;
}

double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

namespace {

void check_frames(const GlobalSequence& frames, std::size_t min_frames) {
  if (frames.size() < min_frames) {
    throw ValidationError("pose-format", "need at least " + std::to_string(min_frames) + " frames, got " +
                                             std::to_string(frames.size()));
  }
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (const auto& p : frames[t].joints) {
      if (!p.allFinite()) throw ValidationError("pose-format", "non-finite joint at frame " + std::to_string(t));
    }
  }
}

Eigen::Vector3d floor_point(const Eigen::Vector3d& p) { return {p.x(), 0.0, p.z()}; }

}  // namespace

std::vector<double> body_headings(const GlobalSequence& frames, const Skeleton& skeleton,
                                  const FormatOptions& options) {
  check_frames(frames, 1);
  const std::size_t n = frames.size();
  std::vector<Eigen::Vector3d> across(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& j = frames[t].joints;
    Eigen::Vector3d a = (j[joint::kLeftShoulder] - j[joint::kRightShoulder]) + (j[joint::kLeftUpLeg] - j[joint::kRightUpLeg]);
    a.y() = 0.0;
    across[t] = a;
  }
  skeleton.validate();

  std::vector<Eigen::Vector3d> smooth = across;
  if (options.forward_sigma > 0.0) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * options.forward_sigma));
    for (std::size_t t = 0; t < n; ++t) {
      Eigen::Vector3d acc = Eigen::Vector3d::Zero();
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const auto s = static_cast<std::ptrdiff_t>(t) + k;
        if (s < 0 || s >= static_cast<std::ptrdiff_t>(n)) continue;
        const double d = static_cast<double>(k) / options.forward_sigma;
        acc += std::exp(-0.5 * d * d) * across[static_cast<std::size_t>(s)];
      }
      smooth[t] = acc;  // scale is irrelevant, only the direction is used
    }
  }

  std::vector<double> heading(n);
  const Eigen::Vector3d up(0.0, 1.0, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const Eigen::Vector3d f = smooth[t].cross(up);
    if (f.norm() < 1e-9) {
      throw ValidationError("pose-format", "degenerate body orientation at frame " + std::to_string(t));
    }
    heading[t] = std::atan2(f.x(), f.z());
  }
  return heading;
}

RootTransform initial_transform(const GlobalSequence& frames, const Skeleton& skeleton, const FormatOptions& options) {
  const auto h = body_headings(frames, skeleton, options);
  const auto& root = frames.front().joints[skeleton.root];
  return {root.x(), root.z(), h.front()};
}

Tensor globals_to_features(const GlobalSequence& frames, const Skeleton& skeleton, const FormatOptions& options) {
  check_frames(frames, 2);
  const std::size_t n = frames.size();
  const auto heading = body_headings(frames, skeleton, options);
  Tensor out({n, kPoseDim});
  for (std::size_t t = 0; t < n; ++t) {
    double* row = out.ptr() + t * kPoseDim;
    const auto& j = frames[t].joints;
    const Eigen::Matrix3d inv = yaw_matrix(-heading[t]);
    const Eigen::Vector3d origin = floor_point(j[skeleton.root]);
    for (std::size_t k = 0; k < kJointCount; ++k) {
      const Eigen::Vector3d local = inv * (j[k] - origin);
      for (int c = 0; c < 3; ++c) row[kLocalJoints + 3 * k + static_cast<std::size_t>(c)] = local[c];
    }
    row[kForward + 0] = std::sin(heading[t]);
    row[kForward + 1] = 0.0;
    row[kForward + 2] = std::cos(heading[t]);

    const std::size_t a = t + 1 < n ? t : t - 1;  // last frame repeats the previous step
    const Eigen::Matrix3d inv_a = yaw_matrix(-heading[a]);
    const Eigen::Vector3d v = inv_a * (floor_point(frames[a + 1].joints[skeleton.root]) - floor_point(frames[a].joints[skeleton.root]));
    row[kVelocity + 0] = v.x();
    row[kVelocity + 1] = 0.0;
    row[kVelocity + 2] = v.z();
    row[kRotVelocity] = wrap_angle(heading[a + 1] - heading[a]);

    for (std::size_t c = 0; c < 4; ++c) row[kContacts + c] = foot_contact_label(j[skeleton.contact_joints[c]].y());
  }
  return out;
}

GlobalSequence features_to_globals(const Tensor& poses, const RootTransform& initial, const Skeleton& skeleton,
                                   double fps) {
  poses.expect_shape({0, kPoseDim}, "pose sequence");
  if (!(fps > 0.0)) throw ValidationError("pose-format", "fps must be positive");
  const std::size_t n = poses.dim(0);
  GlobalSequence out(n);
  Eigen::Vector3d origin(initial.x, 0.0, initial.z);
  double heading = initial.heading;
  for (std::size_t t = 0; t < n; ++t) {
    const double* row = poses.ptr() + t * kPoseDim;
    for (std::size_t k = 0; k < kPoseDim; ++k) {
      if (!std::isfinite(row[k])) {
        throw RuntimeError("pose-format", "non-finite value in dimension " + std::to_string(k) + " at frame " +
                                              std::to_string(t));
      }
    }
    const Eigen::Matrix3d rot = yaw_matrix(heading);
    out[t].time = static_cast<double>(t) / fps;
    for (std::size_t k = 0; k < kJointCount; ++k) {
      const Eigen::Vector3d local(row[3 * k], row[3 * k + 1], row[3 * k + 2]);
      out[t].joints[k] = origin + rot * local;
    }
    const Eigen::Vector3d v(row[kVelocity], 0.0, row[kVelocity + 2]);
    origin += rot * v;
    heading += row[kRotVelocity];
  }
  skeleton.validate();
  return out;
}

nlohmann::json PoseStats::to_json() const { return {{"mean", mean}, {"std", std}, {"floored", floored}}; }

PoseStats PoseStats::from_json(const nlohmann::json& j) {
  PoseStats s;
  try {
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    if (j.contains("floored")) s.floored = j.at("floored").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("pose stats", std::string("malformed stats: ") + e.what());
  }
  if (s.mean.size() != kPoseDim || s.std.size() != kPoseDim) {
    throw ValidationError("pose stats", "stats must have 74 entries");
  }
  for (double v : s.std) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("pose stats", "std entries must be positive");
  }
  return s;
}

PoseStats compute_pose_stats(std::span<const Tensor> sequences, double std_floor) {
  if (sequences.empty()) throw ValidationError("pose stats", "no training sequences");
  PoseStats s;
  s.mean.assign(kPoseDim, 0.0);
  s.std.assign(kPoseDim, 0.0);
  std::size_t count = 0;
  for (const auto& seq : sequences) {
    seq.expect_shape({0, kPoseDim}, "pose sequence");
    for (std::size_t t = 0; t < seq.dim(0); ++t)
      for (std::size_t d = 0; d < kPoseDim; ++d) s.mean[d] += seq.at(t, d);
    count += seq.dim(0);
  }
  for (double& m : s.mean) m /= static_cast<double>(count);
  for (const auto& seq : sequences) {
    for (std::size_t t = 0; t < seq.dim(0); ++t) {
      for (std::size_t d = 0; d < kPoseDim; ++d) {
        const double r = seq.at(t, d) - s.mean[d];
        s.std[d] += r * r;
      }
    }
  }
  for (std::size_t d = 0; d < kPoseDim; ++d) {
    s.std[d] = std::sqrt(s.std[d] / static_cast<double>(count));
    if (!(s.std[d] >= std_floor)) {
      s.std[d] = std_floor;
      s.floored.push_back(d);
    }
  }
  return s;
}

Tensor normalize(const Tensor& poses, const PoseStats& stats) {
  poses.expect_shape({0, kPoseDim}, "pose sequence");
  Tensor out = poses;
  for (std::size_t t = 0; t < poses.dim(0); ++t)
    for (std::size_t d = 0; d < kPoseDim; ++d) out.at(t, d) = (poses.at(t, d) - stats.mean[d]) / stats.std[d];
  return out;
}

Tensor denormalize(const Tensor& poses, const PoseStats& stats) {
  poses.expect_shape({0, kPoseDim}, "pose sequence");
  Tensor out = poses;
  for (std::size_t t = 0; t < poses.dim(0); ++t)
    for (std::size_t d = 0; d < kPoseDim; ++d) out.at(t, d) = poses.at(t, d) * stats.std[d] + stats.mean[d];
  return out;
}

}  // namespace choreo::pose
