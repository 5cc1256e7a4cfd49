#include "choreo/pose/synth_dance.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>

#include "choreo/audio/synth.hpp"
#include "choreo/core/rng.hpp"

namespace choreo::pose {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Matrix3d rot_x(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix(); }
Eigen::Matrix3d rot_y(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix(); }
Eigen::Matrix3d rot_z(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

struct PathSample {
  Eigen::Vector2d xz;
  double heading;
};

}  // namespace

const DanceStyle& dance_style(GenreId genre) {
  static const DanceStyle styles[kGenreCount] = {
      {RootPath::kLine, 0.45, 1.0, 0.50, 0.10, 0.25},          // cha-cha
      {RootPath::kCircle, 0.30, 0.5, 0.35, 0.15, 1.2},         // rumba
      {RootPath::kFigureEight, 0.25, 2.0, 0.25, 0.05, 1.5},    // tango
      {RootPath::kSway, 0.35, 1.0 / 3.0, 0.60, 0.12, 0.4},     // waltz
  };
  return styles[genre.index()];
}

std::array<Eigen::Vector3d, kJointCount> forward_kinematics(const Skeleton& skeleton,
                                                            const std::array<Eigen::Matrix3d, kJointCount>& local,
                                                            const Eigen::Vector3d& root_position,
                                                            const Eigen::Matrix3d& root_rotation) {
  std::array<Eigen::Matrix3d, kJointCount> global;
  std::array<Eigen::Vector3d, kJointCount> pos;
  for (std::size_t j = 0; j < kJointCount; ++j) {
    const int p = skeleton.parents[j];
    if (p < 0) {
      global[j] = root_rotation * local[j];
      pos[j] = root_position + root_rotation * skeleton.offsets[j];
    } else {
      const auto pj = static_cast<std::size_t>(p);
      global[j] = global[pj] * local[j];
      pos[j] = pos[pj] + global[pj] * skeleton.offsets[j];
    }
  }
  return pos;
}

GlobalSequence synth_dance(GenreId genre, double bpm, double duration_seconds, std::uint64_t seed,
                           const Skeleton& skeleton, double fps) {
  if (!(bpm >= audio::kMinBpm && bpm <= audio::kMaxBpm)) {
    throw ValidationError("synth-dance", "bpm " + std::to_string(bpm) + " outside [40, 240]");
  }
  if (!(duration_seconds > 0.0) || !(fps > 0.0)) throw ValidationError("synth-dance", "duration and fps must be positive");
  skeleton.validate();

  const DanceStyle& style = dance_style(genre);
  Rng rng(seed);
  const double amp = rng.uniform(0.9, 1.1);
  const double h0 = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const Eigen::Vector2d start(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  const double arm_phase = rng.uniform(0.0, kTwoPi);
  const double travel = style.travel * rng.uniform(0.9, 1.1);
  const double beat_hz = bpm / 60.0;

  auto path_at = [&](double t) -> Eigen::Vector2d {
    const double b = t * beat_hz;
    Eigen::Vector2d local = Eigen::Vector2d::Zero();  // x lateral, y forward (before rotating by h0)
    switch (style.path) {
      case RootPath::kLine: local = {0.0, travel * t}; break;
      case RootPath::kCircle: {
        const double phi = kTwoPi * b / 16.0;
        local = {travel * (1.0 - std::cos(phi)), travel * std::sin(phi)};
        break;
      }
      case RootPath::kFigureEight: {
        const double phi = kTwoPi * b / 32.0;
        local = {travel * std::sin(phi) * std::cos(phi), travel * std::sin(phi)};
        break;
      }
      case RootPath::kSway: local = {travel * std::sin(kTwoPi * b / 4.0), 0.0}; break;
    }
    const double c = std::cos(h0), s = std::sin(h0);
    // Same yaw convention as the pose format: forward (0, 1) -> (sin h0, cos h0).
    return start + Eigen::Vector2d(c * local.x() + s * local.y(), -s * local.x() + c * local.y());
  };
  auto sample = [&](double t) -> PathSample {
    PathSample ps{path_at(t), h0};
    if (style.path == RootPath::kSway) {
      ps.heading = h0 + 0.3 * std::sin(kTwoPi * t * beat_hz / 8.0);
    } else if (style.path != RootPath::kLine) {
      constexpr double kEps = 1e-4;
      const Eigen::Vector2d d = path_at(t + kEps) - path_at(t - kEps);
      ps.heading = std::atan2(d.x(), d.y());
    }
    return ps;
  };

  const auto frames = static_cast<std::size_t>(std::floor(duration_seconds * fps + 1e-9));
  if (frames == 0) throw ValidationError("synth-dance", "duration shorter than one frame");
  GlobalSequence out(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) / fps;
    const double b = t * beat_hz;
    const double beat_wave = std::sin(kTwoPi * b);
    const double lift_l = amp * style.knee_lift * std::max(0.0, beat_wave);
    const double lift_r = amp * style.knee_lift * std::max(0.0, -beat_wave);
    const double arm = amp * style.arm_amplitude * std::sin(kTwoPi * style.arm_ratio * b + arm_phase);
    const double sway = amp * style.torso_sway * std::sin(std::numbers::pi * b);

    std::array<Eigen::Matrix3d, kJointCount> local;
    local.fill(Eigen::Matrix3d::Identity());
    local[joint::kSpine] = rot_z(sway);
    local[joint::kSpine1] = rot_y(0.5 * sway);
    local[joint::kNeck] = rot_z(-0.5 * sway);
    local[joint::kLeftUpLeg] = rot_x(-lift_l);
    local[joint::kLeftLeg] = rot_x(2.0 * lift_l);
    local[joint::kLeftFoot] = rot_x(-lift_l);
    local[joint::kRightUpLeg] = rot_x(-lift_r);
    local[joint::kRightLeg] = rot_x(2.0 * lift_r);
    local[joint::kRightFoot] = rot_x(-lift_r);
    // Arms hang about 1 rad below horizontal and swing fore/aft in antiphase.
    local[joint::kLeftArm] = rot_z(-(1.0 + 0.3 * arm)) * rot_y(-arm);
    local[joint::kRightArm] = rot_z(1.0 + 0.3 * arm) * rot_y(-arm);
    local[joint::kLeftForeArm] = rot_y(-0.4 * (1.0 + arm));
    local[joint::kRightForeArm] = rot_y(0.4 * (1.0 - arm));

    const PathSample ps = sample(t);
    const Eigen::Matrix3d root_rot = yaw_matrix(ps.heading);
    auto joints = forward_kinematics(skeleton, local, {ps.xz.x(), 0.0, ps.xz.y()}, root_rot);
    double lowest = joints[skeleton.contact_joints[0]].y();
    for (std::size_t c : skeleton.contact_joints) lowest = std::min(lowest, joints[c].y());
    for (auto& p : joints) p.y() -= lowest;
    out[k].joints = joints;
    out[k].time = t;
  }
  return out;
}

}  // namespace choreo::pose
