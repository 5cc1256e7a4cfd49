#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace choreo::pose {

inline constexpr std::size_t kJointCount = 21;

namespace joint {
inline constexpr std::size_t kHips = 0, kSpine = 1, kSpine1 = 2, kNeck = 3, kHead = 4;
inline constexpr std::size_t kLeftUpLeg = 5, kLeftLeg = 6, kLeftFoot = 7, kLeftToe = 8;
inline constexpr std::size_t kRightUpLeg = 9, kRightLeg = 10, kRightFoot = 11, kRightToe = 12;
inline constexpr std::size_t kLeftShoulder = 13, kLeftArm = 14, kLeftForeArm = 15, kLeftHand = 16;
inline constexpr std::size_t kRightShoulder = 17, kRightArm = 18, kRightForeArm = 19, kRightHand = 20;
}  // namespace joint

/// Fixed 21-joint hierarchy. Y is up, the rest pose faces +z and the
/// character's left side is +x. Foot joints double as heels.
struct Skeleton {
  std::vector<std::string> names;
  std::vector<int> parents;                 // -1 for the root
  std::vector<Eigen::Vector3d> offsets;     // rest offset from parent, meters
  std::size_t root = joint::kHips;
  std::array<std::size_t, 4> contact_joints{joint::kLeftFoot, joint::kLeftToe, joint::kRightFoot, joint::kRightToe};

  static const Skeleton& standard();

  std::size_t size() const { return names.size(); }
  std::vector<std::size_t> children(std::size_t j) const;
  /// Throws ValidationError unless the parents form a single tree over 21 joints.
  void validate() const;
};

}  // namespace choreo::pose
