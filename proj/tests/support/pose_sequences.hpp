#pragma once

// Smooth random global pose sequences that do not go through the synthetic
// dancer: rest pose plus per-joint sinusoidal wobble, a wandering root and a
// slowly turning heading. Independent of synth_dance on purpose.

#include <cmath>
#include <numbers>

#include "choreo/core/rng.hpp"
#include "choreo/pose/pose_format.hpp"
#include "choreo/pose/synth_dance.hpp"

namespace choreo::testing {

inline std::array<Eigen::Vector3d, pose::kJointCount> rest_pose(const pose::Skeleton& skel) {
  std::array<Eigen::Matrix3d, pose::kJointCount> local;
  local.fill(Eigen::Matrix3d::Identity());
  return pose::forward_kinematics(skel, local, Eigen::Vector3d(0, 0.95, 0), Eigen::Matrix3d::Identity());
}

inline pose::GlobalSequence random_smooth_sequence(Rng& rng, std::size_t frames, double fps = 25.0) {
  const auto& skel = pose::Skeleton::standard();
  const auto rest = rest_pose(skel);
  const double h0 = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const double h_amp = rng.uniform(0.0, 1.5), h_freq = rng.uniform(0.1, 0.8);
  const double turn = rng.uniform(-0.6, 0.6);  // rad/s of steady turning
  const double vx = rng.uniform(-0.8, 0.8), vz = rng.uniform(-0.8, 0.8);
  const double x0 = rng.uniform(-2, 2), z0 = rng.uniform(-2, 2);
  std::array<Eigen::Vector3d, pose::kJointCount> amp, freq, phase;
  for (std::size_t j = 0; j < pose::kJointCount; ++j) {
    for (int c = 0; c < 3; ++c) {
      amp[j][c] = rng.uniform(0.0, 0.05);
      freq[j][c] = rng.uniform(0.2, 2.0);
      phase[j][c] = rng.uniform(0.0, 2 * std::numbers::pi);
    }
  }
  pose::GlobalSequence seq(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double s = static_cast<double>(t) / fps;
    const double h = h0 + turn * s + h_amp * std::sin(2 * std::numbers::pi * h_freq * s);
    const Eigen::Matrix3d R = pose::yaw_matrix(h);
    const Eigen::Vector3d root(x0 + vx * s + 0.3 * std::sin(s), 0.0, z0 + vz * s + 0.3 * std::cos(0.7 * s));
    seq[t].time = s;
    for (std::size_t j = 0; j < pose::kJointCount; ++j) {
      Eigen::Vector3d local = rest[j];
      for (int c = 0; c < 3; ++c) local[c] += amp[j][c] * std::sin(2 * std::numbers::pi * freq[j][c] * s + phase[j][c]);
      seq[t].joints[j] = root + R * local;
    }
  }
  return seq;
}

inline double rmse(const pose::GlobalSequence& a, const pose::GlobalSequence& b) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t j = 0; j < pose::kJointCount; ++j) {
      s += (a[t].joints[j] - b[t].joints[j]).squaredNorm();
      n += 3;
    }
  }
  return std::sqrt(s / static_cast<double>(n));
}

}  // namespace choreo::testing
