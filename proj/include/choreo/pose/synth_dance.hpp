#pragma once

#include <cstdint>

#include "choreo/core/genre.hpp"
#include "choreo/pose/pose_format.hpp"

namespace choreo::pose {

enum class RootPath { kLine, kCircle, kFigureEight, kSway };

/// Genre-specific movement parameters of the synthetic dancer.
struct DanceStyle {
  RootPath path;
  double knee_lift;      // peak hip flexion, radians; each leg lifts once per beat
  double arm_ratio;      // arm oscillation frequency relative to the beat
  double arm_amplitude;  // radians
  double torso_sway;     // radians, period two beats
  double travel;         // path scale: speed (m/s) for lines, radius (m) otherwise
};

const DanceStyle& dance_style(GenreId genre);

/// Forward kinematics of the standard skeleton from per-joint local
/// rotations. Root rotation and translation are applied last.
std::array<Eigen::Vector3d, kJointCount> forward_kinematics(const Skeleton& skeleton,
                                                            const std::array<Eigen::Matrix3d, kJointCount>& local,
                                                            const Eigen::Vector3d& root_position,
                                                            const Eigen::Matrix3d& root_rotation);

/// Deterministic beat-locked dance at `fps`: leg lifts alternate within every
/// beat period 60/bpm, arms and torso oscillate at genre-specific ratios and
/// the root follows the genre's path. Each frame the pelvis height is chosen
/// so the lowest heel/toe sits exactly on the floor. Frame count is
/// floor(duration * fps).
GlobalSequence synth_dance(GenreId genre, double bpm, double duration_seconds, std::uint64_t seed,
                           const Skeleton& skeleton = Skeleton::standard(), double fps = 25.0);

}  // namespace choreo::pose
