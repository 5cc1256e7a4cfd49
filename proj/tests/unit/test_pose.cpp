#include <doctest.h>

#include <cmath>
#include <numbers>
#include <fstream>
#include <functional>
#include <sstream>

#include "choreo/pose/export.hpp"
#include "choreo/pose/pose_format.hpp"
#include "choreo/pose/synth_dance.hpp"
#include "support/pose_sequences.hpp"

using namespace choreo;
using namespace choreo::pose;
using nn::Tensor;

namespace {

GlobalSequence rigid(const GlobalSequence& in, double yaw, double tx, double tz) {
  const Eigen::Matrix3d R = yaw_matrix(yaw);
  GlobalSequence out = in;
  for (auto& f : out) {
    for (auto& j : f.joints) j = R * j + Eigen::Vector3d(tx, 0.0, tz);
  }
  return out;
}

}  // namespace

TEST_CASE("foot contact label is exp(-10 h) and 1 on the floor") {
  CHECK(foot_contact_label(0.0) == 1.0);
  CHECK(foot_contact_label(-0.02) == 1.0);
  for (int i = 0; i <= 100; ++i) {
    const double h = 0.005 * i;
    CHECK(std::abs(foot_contact_label(h) - std::exp(-10.0 * h)) < 1e-12);
  }
}

TEST_CASE("yaw matrix and angle wrapping") {
  for (double h : {0.0, 0.3, -2.0, 3.1}) {
    const Eigen::Vector3d f = yaw_matrix(h) * Eigen::Vector3d(0, 0, 1);
    CHECK(f.x() == doctest::Approx(std::sin(h)).epsilon(1e-14));
    CHECK(f.y() == 0.0);
    CHECK(f.z() == doctest::Approx(std::cos(h)).epsilon(1e-14));
  }
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
  CHECK(wrap_angle(0.25 + 4 * std::numbers::pi) == doctest::Approx(0.25));
}

TEST_CASE("rest pose turned by theta has heading theta") {
  const auto& skel = Skeleton::standard();
  const auto rest = testing::rest_pose(skel);
  for (double theta : {0.0, 0.7, -1.9, 3.0}) {
    GlobalSequence seq(3);
    for (auto& f : seq) {
      for (std::size_t j = 0; j < kJointCount; ++j) f.joints[j] = yaw_matrix(theta) * rest[j];
    }
    for (double h : body_headings(seq, skel)) CHECK(std::abs(wrap_angle(h - theta)) < 1e-12);
  }
}

TEST_CASE("globals -> features -> globals round trip") {
  const auto& skel = Skeleton::standard();
  Rng rng(41);
  for (int i = 0; i < 20; ++i) {
    const auto seq = testing::random_smooth_sequence(rng, 60);
    const Tensor f = globals_to_features(seq, skel);
    REQUIRE(f.shape() == nn::Shape{60, kPoseDim});
    const auto back = features_to_globals(f, initial_transform(seq, skel), skel);
    CHECK(testing::rmse(seq, back) < 1e-6);
  }
}

TEST_CASE("feature layout: planar forward and velocity") {
  const auto& skel = Skeleton::standard();
  Rng rng(3);
  const Tensor f = globals_to_features(testing::random_smooth_sequence(rng, 30), skel);
  for (std::size_t t = 0; t < 30; ++t) {
    CHECK(f.at(t, kForward + 1) == 0.0);
    CHECK(f.at(t, kVelocity + 1) == 0.0);
    CHECK(std::hypot(f.at(t, kForward), f.at(t, kForward + 2)) == doctest::Approx(1.0));
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(f.at(t, kContacts + c) > 0.0);
      CHECK(f.at(t, kContacts + c) <= 1.0);
    }
  }
  // last frame repeats the previous step's velocities
  for (std::size_t k = kVelocity; k <= kRotVelocity; ++k) CHECK(f.at(29, k) == f.at(28, k));
}

TEST_CASE("local coordinates are invariant to rigid floor motions") {
  const auto& skel = Skeleton::standard();
  Rng rng(7);
  for (int i = 0; i < 5; ++i) {
    const auto seq = testing::random_smooth_sequence(rng, 40);
    const double yaw = rng.uniform(-3, 3), tx = rng.uniform(-5, 5), tz = rng.uniform(-5, 5);
    const Tensor a = globals_to_features(seq, skel);
    const Tensor b = globals_to_features(rigid(seq, yaw, tx, tz), skel);
    for (std::size_t t = 0; t < 40; ++t) {
      for (std::size_t k = 0; k < kPoseDim; ++k) {
        if (k >= kForward && k < kForward + 3) continue;
        CHECK(std::abs(a.at(t, k) - b.at(t, k)) < 1e-9);
      }
      // the forward direction turns with the body
      const Eigen::Vector3d fa(a.at(t, kForward), 0, a.at(t, kForward + 2));
      const Eigen::Vector3d fb(b.at(t, kForward), 0, b.at(t, kForward + 2));
      CHECK((yaw_matrix(yaw) * fa - fb).norm() < 1e-9);
    }
  }
}

TEST_CASE("format errors") {
  const auto& skel = Skeleton::standard();
  Rng rng(1);
  auto seq = testing::random_smooth_sequence(rng, 1);
  CHECK_THROWS_AS(globals_to_features(seq, skel), ValidationError);
  Tensor bad({3, kPoseDim}, 0.0);
  bad.at(1, kVelocity) = std::nan("");
  CHECK_THROWS_AS(features_to_globals(bad, {}, skel), RuntimeError);
  CHECK_THROWS_AS(features_to_globals(Tensor({3, 70}), {}, skel), ShapeError);
}

TEST_CASE("pose statistics normalize to zero mean and unit std") {
  const auto& skel = Skeleton::standard();
  Rng rng(9);
  std::vector<Tensor> seqs;
  for (int i = 0; i < 4; ++i) seqs.push_back(globals_to_features(testing::random_smooth_sequence(rng, 50), skel));
  const PoseStats stats = compute_pose_stats(seqs);
  // y components of forward and velocity are identically 0
  CHECK(std::find(stats.floored.begin(), stats.floored.end(), kForward + 1) != stats.floored.end());
  CHECK(std::find(stats.floored.begin(), stats.floored.end(), kVelocity + 1) != stats.floored.end());

  std::vector<double> sum(kPoseDim, 0.0), sq(kPoseDim, 0.0);
  std::size_t n = 0;
  for (const auto& s : seqs) {
    const Tensor z = normalize(s, stats);
    const Tensor back = denormalize(z, stats);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(back[i] - s[i]) < 1e-12);
    for (std::size_t t = 0; t < z.dim(0); ++t) {
      for (std::size_t k = 0; k < kPoseDim; ++k) {
        sum[k] += z.at(t, k);
        sq[k] += z.at(t, k) * z.at(t, k);
      }
    }
    n += z.dim(0);
  }
  for (std::size_t k = 0; k < kPoseDim; ++k) {
    const double mean = sum[k] / n;
    CHECK(std::abs(mean) < 1e-9);
    if (std::find(stats.floored.begin(), stats.floored.end(), k) != stats.floored.end()) continue;
    CHECK(std::abs(std::sqrt(sq[k] / n - mean * mean) - 1.0) < 1e-9);
  }
  const PoseStats back = PoseStats::from_json(stats.to_json());
  CHECK(back.mean == stats.mean);
  CHECK(back.std == stats.std);
  CHECK(back.floored == stats.floored);
}

TEST_CASE("synthetic dancer") {
  const auto& skel = Skeleton::standard();
  for (std::size_t g = 0; g < kGenreCount; ++g) {
    const auto a = synth_dance(GenreId::from_index(g), 110.0, 3.0, 5);
    const auto b = synth_dance(GenreId::from_index(g), 110.0, 3.0, 5);
    REQUIRE(a.size() == 75);
    CHECK(testing::rmse(a, b) == 0.0);
    for (const auto& f : a) {
      double lowest = 1e9;
      for (auto c : skel.contact_joints) lowest = std::min(lowest, f.joints[c].y());
      CHECK(std::abs(lowest) < 1e-12);
    }
    // bones keep their rest lengths
    for (std::size_t j = 1; j < kJointCount; ++j) {
      const double len = (a[10].joints[j] - a[10].joints[static_cast<std::size_t>(skel.parents[j])]).norm();
      CHECK(len == doctest::Approx(skel.offsets[j].norm()).epsilon(1e-9));
    }
  }
  CHECK(testing::rmse(synth_dance(GenreId(2), 100, 2, 1), synth_dance(GenreId(2), 100, 2, 2)) > 0.0);
}

TEST_CASE("pose JSONL round trip is exact") {
  Rng rng(2);
  Tensor poses({5, kPoseDim});
  for (auto& v : poses.data()) v = rng.normal() * 1e3 / 7.0;
  std::stringstream buf;
  write_pose_jsonl(buf, poses, {25.0, true, std::string("abc")});
  const auto path = std::filesystem::temp_directory_path() / "choreo_test_pose.jsonl";
  { std::ofstream(path) << buf.str(); }
  const PoseFile back = read_pose_jsonl(path);
  CHECK(back.header.fps == 25.0);
  CHECK(back.header.normalized);
  CHECK(back.header.stats_reference == std::optional<std::string>("abc"));
  REQUIRE(back.poses.shape() == poses.shape());
  for (std::size_t i = 0; i < poses.size(); ++i) CHECK(back.poses[i] == poses[i]);

  { std::ofstream(path) << buf.str().substr(0, buf.str().size() / 2); }
  CHECK_THROWS_AS(read_pose_jsonl(path), ValidationError);
  std::filesystem::remove(path);
}

TEST_CASE("BVH positions rebuild the global joints") {
  const auto& skel = Skeleton::standard();
  const auto seq = synth_dance(GenreId(3), 130, 1.0, 4);
  std::stringstream out;
  write_bvh(out, seq, skel);
  const std::string text = out.str();
  CHECK(text.rfind("HIERARCHY", 0) == 0);
  CHECK(text.find("Frames: 25") != std::string::npos);

  // Joint order in the hierarchy is depth-first from the root.
  std::vector<std::size_t> order;
  std::function<void(std::size_t)> visit = [&](std::size_t j) {
    order.push_back(j);
    for (auto c : skel.children(j)) visit(c);
  };
  visit(skel.root);
  REQUIRE(order.size() == kJointCount);

  std::istringstream in(text.substr(text.find("Frame Time:")));
  std::string line;
  std::getline(in, line);
  for (const auto& frame : seq) {
    std::array<Eigen::Vector3d, kJointCount> pos;
    for (auto j : order) {
      Eigen::Vector3d v;
      in >> v.x() >> v.y() >> v.z();
      pos[j] = skel.parents[j] < 0 ? v : pos[static_cast<std::size_t>(skel.parents[j])] + v;
    }
    for (std::size_t j = 0; j < kJointCount; ++j) CHECK((pos[j] - frame.joints[j]).norm() < 1e-6);
  }
}

TEST_CASE("SVG render draws the root path") {
  const auto& skel = Skeleton::standard();
  const auto seq = synth_dance(GenreId(1), 120, 1.0, 1);
  const std::string svg = render_svg(seq, skel, 3);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK_THROWS(render_svg(seq, skel, 99));
}
