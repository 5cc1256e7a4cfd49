#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "choreo/nn/tensor.hpp"
#include "choreo/pose/skeleton.hpp"

namespace choreo::pose {

// 74-dim pose vector layout.
inline constexpr std::size_t kPoseDim = 74;
inline constexpr std::size_t kLocalJoints = 0;      // 63: joints in the body-local frame
inline constexpr std::size_t kForward = 63;         // 3: world forward direction (y = 0)
inline constexpr std::size_t kVelocity = 66;        // 3: root velocity in the local frame (y = 0)
inline constexpr std::size_t kRotVelocity = 69;     // 1: heading change to the next frame, radians
inline constexpr std::size_t kContacts = 70;        // 4: left heel, left toe, right heel, right toe

inline constexpr double kContactBeta = 10.0;

struct GlobalPoseFrame {
  std::array<Eigen::Vector3d, kJointCount> joints;
  double time = 0.0;
};

using GlobalSequence = std::vector<GlobalPoseFrame>;

/// e^{-beta * max(h, 0)}; negative heights are treated as floor contact.
double foot_contact_label(double height, double beta = kContactBeta);

/// Root position on the floor plus heading about +y. Heading 0 faces +z;
/// R(heading) maps (0, 0, 1) to (sin h, 0, cos h).
struct RootTransform {
  double x = 0.0;
  double z = 0.0;
  double heading = 0.0;
};

Eigen::Matrix3d yaw_matrix(double heading);
/// Wraps to (-pi, pi].
double wrap_angle(double a);

struct FormatOptions {
  /// Gaussian smoothing (frames) of the hip/shoulder across-vector before
  /// taking the forward direction. 0 disables smoothing.
  double forward_sigma = 2.0;
};

/// Per-frame heading from the smoothed hip/shoulder cross-product.
/// Throws ValidationError at a frame whose across-vector is degenerate.
std::vector<double> body_headings(const GlobalSequence& frames, const Skeleton& skeleton,
                                  const FormatOptions& options = {});

/// [T, 74] raw pose vectors. Throws ValidationError for fewer than 2 frames
/// or non-finite joints. The last frame repeats the previous velocities.
nn::Tensor globals_to_features(const GlobalSequence& frames, const Skeleton& skeleton,
                               const FormatOptions& options = {});

/// Root transform of frame 0 as globals_to_features sees it.
RootTransform initial_transform(const GlobalSequence& frames, const Skeleton& skeleton,
                                const FormatOptions& options = {});

/// Integrates root velocities from `initial` and maps local joints back to
/// the world. Throws RuntimeError naming the first frame with a non-finite
/// velocity.
GlobalSequence features_to_globals(const nn::Tensor& poses, const RootTransform& initial, const Skeleton& skeleton,
                                   double fps = 25.0);

/// Per-dimension mean and standard deviation (population) of raw poses.
struct PoseStats {
  std::vector<double> mean;
  std::vector<double> std;
  /// Dimensions whose std was raised to the floor.
  std::vector<std::size_t> floored;

  nlohmann::json to_json() const;
  static PoseStats from_json(const nlohmann::json& j);
};

inline constexpr double kStdFloor = 1e-6;

PoseStats compute_pose_stats(std::span<const nn::Tensor> sequences, double std_floor = kStdFloor);
nn::Tensor normalize(const nn::Tensor& poses, const PoseStats& stats);
nn::Tensor denormalize(const nn::Tensor& poses, const PoseStats& stats);

}  // namespace choreo::pose
