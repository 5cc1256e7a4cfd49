#include "choreo/analysis/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "choreo/nn/kernels.hpp"

namespace choreo::analysis {

using nn::Tensor;

namespace {

void check_pair(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw ValidationError("dtw", "sequences must be [frames, dims]");
  if (a.dim(1) != b.dim(1)) throw ShapeError("dtw second sequence", {0, a.dim(1)}, b.shape());
}

// Serial DTW over row ranges, used inside the parallel segment scan.
double dtw_rows(const double* a, std::size_t n, const double* b, std::size_t m, std::size_t dim, std::vector<double>& cost) {
  cost.resize(n * m);
  kernels::serial::euclidean_cost(a, n, b, m, dim, cost.data());
  return kernels::serial::dtw_accumulate(cost.data(), n, m);
}

}  // namespace

double dtw_distance(const Tensor& a, const Tensor& b) {
  if (a.empty() || b.empty()) throw ValidationError("dtw", "sequences must be nonempty");
  check_pair(a, b);
  const std::size_t n = a.dim(0), m = b.dim(0), dim = a.dim(1);
  std::vector<double> cost(n * m);
  kernels::omp::euclidean_cost(a.ptr(), n, b.ptr(), m, dim, cost.data());
  return kernels::omp::dtw_accumulate(cost.data(), n, m);
}

std::vector<DtwMatch> match_segments(const Tensor& generated, std::span<const TrainingSequence> corpus,
                                     std::size_t segment_len) {
  if (corpus.empty()) throw ValidationError("match-segments", "training corpus is empty");
  if (segment_len < 1) throw ValidationError("match-segments", "segment length must be >= 1");
  if (generated.rank() != 2 || generated.dim(0) < segment_len) {
    throw ValidationError("match-segments", "generated sequence shorter than one segment");
  }
  struct Candidate {
    std::size_t song;
    std::size_t begin;
  };
  std::vector<Candidate> candidates;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    check_pair(generated, corpus[s].poses);
    if (corpus[s].poses.dim(0) < segment_len) {
      throw ValidationError("match-segments", "training song '" + corpus[s].song_id + "' shorter than one segment");
    }
    for (std::size_t k = 0; k + segment_len <= corpus[s].poses.dim(0); k += segment_len) candidates.push_back({s, k});
  }

  const std::size_t dim = generated.dim(1);
  const std::size_t segments = generated.dim(0) / segment_len;
  std::vector<DtwMatch> matches(segments);
#pragma omp parallel
  {
    std::vector<double> cost;
#pragma omp for schedule(static)
    for (std::size_t g = 0; g < segments; ++g) {
      const double* a = generated.ptr() + g * segment_len * dim;
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_c = 0;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const double* b = corpus[candidates[c].song].poses.ptr() + candidates[c].begin * dim;
        const double d = dtw_rows(a, segment_len, b, segment_len, dim, cost);
        if (d < best) {  // strict: ties keep the earliest candidate
          best = d;
          best_c = c;
        }
      }
      const auto& win = candidates[best_c];
      matches[g] = {g, g * segment_len, (g + 1) * segment_len, corpus[win.song].song_id, win.begin,
                    win.begin + segment_len, best};
    }
  }
  return matches;
}

nlohmann::json match_report(std::span<const DtwMatch> matches, std::size_t segment_len) {
  nlohmann::json j;
  j["segment_frames"] = segment_len;
  j["matches"] = nlohmann::json::array();
  for (const auto& m : matches) {
    j["matches"].push_back({{"segment", m.segment},
                            {"generated", {m.generated_begin, m.generated_end}},
                            {"training_song", m.training_song},
                            {"training", {m.training_begin, m.training_end}},
                            {"distance", m.distance}});
  }
  return j;
}

std::string render_match_strip(const pose::GlobalSequence& generated, const pose::GlobalSequence& training,
                               const DtwMatch& match, const pose::Skeleton& skeleton, std::size_t stride) {
  if (match.generated_end > generated.size() || match.training_end > training.size()) {
    throw ValidationError("render-match", "match range exceeds the sequences");
  }
  stride = std::max<std::size_t>(1, stride);
  constexpr double kCell = 90.0, kScale = 45.0;
  const std::size_t cols = (match.generated_end - match.generated_begin + stride - 1) / stride;
  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCell * static_cast<double>(cols) << "\" height=\""
      << 2 * kCell + 20 << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"4\" y=\"14\" font-size=\"11\">generated " << match.generated_begin << "-" << match.generated_end
      << " vs " << match.training_song << " " << match.training_begin << "-" << match.training_end
      << ", dtw " << match.distance << "</text>\n";
  auto row = [&](const pose::GlobalSequence& seq, std::size_t begin, std::size_t end, double y0, const char* colour) {
    std::size_t col = 0;
    for (std::size_t t = begin; t < end; t += stride, ++col) {
      const auto& j = seq[t].joints;
      const double cx = kCell * (static_cast<double>(col) + 0.5);
      const double base = y0 + kCell - 5.0;
      const double rx = j[skeleton.root].x();
      for (std::size_t k = 0; k < pose::kJointCount; ++k) {
        const int p = skeleton.parents[k];
        if (p < 0) continue;
        const auto& a = j[static_cast<std::size_t>(p)];
        const auto& b = j[k];
        svg << "<line x1=\"" << cx + (a.x() - rx) * kScale << "\" y1=\"" << base - a.y() * kScale << "\" x2=\""
            << cx + (b.x() - rx) * kScale << "\" y2=\"" << base - b.y() * kScale << "\" stroke=\"" << colour
            << "\" stroke-width=\"1.5\"/>\n";
      }
    }
  };
  row(generated, match.generated_begin, match.generated_end, 20.0, "#c0392b");
  row(training, match.training_begin, std::min(match.training_end, match.training_begin + (match.generated_end - match.generated_begin)),
      20.0 + kCell, "#1f4e9c");
  svg << "</svg>\n";
  return svg.str();
}

nlohmann::json MotionStats::to_json() const {
  return {{"mean_speed", mean_speed}, {"path_length", path_length}, {"joint_range", joint_range}, {"foot_slide", foot_slide}};
}

MotionStats motion_stats(const pose::GlobalSequence& frames, const pose::Skeleton& skeleton, double fps) {
  if (frames.size() < 2) throw ValidationError("motion-stats", "need at least 2 frames");
  if (!(fps > 0.0)) throw ValidationError("motion-stats", "fps must be positive");
  MotionStats s;
  auto horizontal = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return std::hypot(b.x() - a.x(), b.z() - a.z()); };
  double slide = 0.0;
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    s.path_length += horizontal(frames[t].joints[skeleton.root], frames[t + 1].joints[skeleton.root]);
    for (std::size_t c : skeleton.contact_joints) {
      const auto& p = frames[t].joints[c];
      slide += pose::foot_contact_label(p.y()) * horizontal(p, frames[t + 1].joints[c]) * fps;
    }
  }
  const double steps = static_cast<double>(frames.size() - 1);
  s.mean_speed = s.path_length * fps / steps;
  s.foot_slide = slide / (steps * static_cast<double>(skeleton.contact_joints.size()));
  s.joint_range.assign(pose::kJointCount, {0.0, 0.0, 0.0});
  for (std::size_t k = 0; k < pose::kJointCount; ++k) {
    for (int c = 0; c < 3; ++c) {
      double lo = frames[0].joints[k][c], hi = lo;
      for (const auto& f : frames) {
        lo = std::min(lo, f.joints[k][c]);
        hi = std::max(hi, f.joints[k][c]);
      }
      s.joint_range[k][static_cast<std::size_t>(c)] = hi - lo;
    }
  }
  const auto all_finite = [&] {
    if (!std::isfinite(s.mean_speed) || !std::isfinite(s.path_length) || !std::isfinite(s.foot_slide)) return false;
    for (const auto& r : s.joint_range)
      for (double v : r)
        if (!std::isfinite(v)) return false;
    return true;
  };
  if (!all_finite()) throw RuntimeError("motion-stats", "non-finite statistics");
  return s;
}

}  // namespace choreo::analysis
