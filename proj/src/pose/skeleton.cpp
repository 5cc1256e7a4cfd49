#include "choreo/pose/skeleton.hpp"

#include "choreo/core/error.hpp"

namespace choreo::pose {

const Skeleton& Skeleton::standard() {
  static const Skeleton s = [] {
    Skeleton k;
    auto add = [&k](const char* name, int parent, double x, double y, double z) {
      k.names.emplace_back(name);
      k.parents.push_back(parent);
      k.offsets.emplace_back(x, y, z);
    };
    add("Hips", -1, 0.0, 0.0, 0.0);
    add("Spine", 0, 0.0, 0.10, 0.0);
    add("Spine1", 1, 0.0, 0.15, 0.0);
    add("Neck", 2, 0.0, 0.25, 0.0);
    add("Head", 3, 0.0, 0.12, 0.0);
    add("LeftUpLeg", 0, 0.09, -0.05, 0.0);
    add("LeftLeg", 5, 0.0, -0.42, 0.0);
    add("LeftFoot", 6, 0.0, -0.43, -0.03);
    add("LeftToe", 7, 0.0, 0.0, 0.16);
    add("RightUpLeg", 0, -0.09, -0.05, 0.0);
    add("RightLeg", 9, 0.0, -0.42, 0.0);
    add("RightFoot", 10, 0.0, -0.43, -0.03);
    add("RightToe", 11, 0.0, 0.0, 0.16);
    add("LeftShoulder", 2, 0.04, 0.21, 0.0);
    add("LeftArm", 13, 0.14, 0.0, 0.0);
    add("LeftForeArm", 14, 0.28, 0.0, 0.0);
    add("LeftHand", 15, 0.25, 0.0, 0.0);
    add("RightShoulder", 2, -0.04, 0.21, 0.0);
    add("RightArm", 17, -0.14, 0.0, 0.0);
    add("RightForeArm", 18, -0.28, 0.0, 0.0);
    add("RightHand", 19, -0.25, 0.0, 0.0);
    k.validate();
    return k;
  }();
  return s;
}

std::vector<std::size_t> Skeleton::children(std::size_t j) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    if (parents[i] == static_cast<int>(j)) out.push_back(i);
  }
  return out;
}

void Skeleton::validate() const {
  if (names.size() != kJointCount || parents.size() != kJointCount || offsets.size() != kJointCount) {
    throw ValidationError("skeleton", "expected " + std::to_string(kJointCount) + " joints");
  }
  std::size_t roots = 0;
  for (std::size_t j = 0; j < kJointCount; ++j) {
    if (parents[j] < 0) {
      ++roots;
      continue;
    }
    // Parents precede children, which rules out cycles.
    if (parents[j] >= static_cast<int>(j)) throw ValidationError("skeleton", "joint " + names[j] + " precedes its parent");
  }
  if (roots != 1 || parents[root] >= 0) throw ValidationError("skeleton", "skeleton must have exactly one root");
}

}  // namespace choreo::pose
