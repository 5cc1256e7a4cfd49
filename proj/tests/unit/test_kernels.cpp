#include <doctest.h>

#include <cmath>
#include <vector>

#include "choreo/core/rng.hpp"
#include "choreo/nn/kernels.hpp"

using namespace choreo;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("omp conv1d kernels agree with serial reference") {
  Rng rng(11);
  for (std::size_t dil : {1u, 2u, 5u}) {
    kernels::Conv1dDims d{3, 4, 5, 23, 3, dil};
    auto x = random_vec(d.batch * d.in_channels * d.time, rng);
    auto w = random_vec(d.out_channels * d.in_channels * d.kernel, rng);
    auto b = random_vec(d.out_channels, rng);
    auto gy = random_vec(d.batch * d.out_channels * d.time, rng);

    std::vector<double> y1(gy.size()), y2(gy.size());
    kernels::serial::conv1d_forward(d, x.data(), w.data(), b.data(), y1.data());
    kernels::omp::conv1d_forward(d, x.data(), w.data(), b.data(), y2.data());
    CHECK(max_abs_diff(y1, y2) < 1e-12);

    std::vector<double> gx1(x.size(), 0.5), gx2(x.size(), 0.5);
    kernels::serial::conv1d_backward_input(d, w.data(), gy.data(), gx1.data());
    kernels::omp::conv1d_backward_input(d, w.data(), gy.data(), gx2.data());
    CHECK(max_abs_diff(gx1, gx2) < 1e-12);

    std::vector<double> gw1(w.size(), 0.0), gw2(w.size(), 0.0), gb1(b.size(), 0.0), gb2(b.size(), 0.0);
    kernels::serial::conv1d_backward_weight(d, x.data(), gy.data(), gw1.data(), gb1.data());
    kernels::omp::conv1d_backward_weight(d, x.data(), gy.data(), gw2.data(), gb2.data());
    CHECK(max_abs_diff(gw1, gw2) < 1e-11);
    CHECK(max_abs_diff(gb1, gb2) < 1e-11);
  }
}

TEST_CASE("conv1d kernel with dilation beyond the window sees only the current sample") {
  kernels::Conv1dDims d{1, 1, 1, 4, 3, 8};
  std::vector<double> x{1, 2, 3, 4}, w{5, 6, 2}, b{0}, y(4);
  kernels::omp::conv1d_forward(d, x.data(), w.data(), b.data(), y.data());
  CHECK(y == std::vector<double>{2, 4, 6, 8});
}

TEST_CASE("omp linear kernels agree with serial reference") {
  Rng rng(3);
  kernels::LinearDims d{5, 13, 7};
  auto x = random_vec(d.batch * d.in_features, rng);
  auto w = random_vec(d.out_features * d.in_features, rng);
  auto b = random_vec(d.out_features, rng);
  auto gy = random_vec(d.batch * d.out_features, rng);

  std::vector<double> y1(gy.size()), y2(gy.size());
  kernels::serial::linear_forward(d, x.data(), w.data(), b.data(), y1.data());
  kernels::omp::linear_forward(d, x.data(), w.data(), b.data(), y2.data());
  CHECK(max_abs_diff(y1, y2) < 1e-12);

  std::vector<double> gx1(x.size(), 0.0), gx2(x.size(), 0.0);
  kernels::serial::linear_backward_input(d, w.data(), gy.data(), gx1.data());
  kernels::omp::linear_backward_input(d, w.data(), gy.data(), gx2.data());
  CHECK(max_abs_diff(gx1, gx2) < 1e-12);

  std::vector<double> gw1(w.size(), 0.0), gw2(w.size(), 0.0), gb1(b.size(), 0.0), gb2(b.size(), 0.0);
  kernels::serial::linear_backward_weight(d, x.data(), gy.data(), gw1.data(), gb1.data());
  kernels::omp::linear_backward_weight(d, x.data(), gy.data(), gw2.data(), gb2.data());
  CHECK(max_abs_diff(gw1, gw2) < 1e-12);
  CHECK(max_abs_diff(gb1, gb2) < 1e-12);
}

TEST_CASE("omp dtw wavefront is bit-identical to serial accumulation") {
  Rng rng(5);
  for (auto [n, m] : {std::pair<std::size_t, std::size_t>{1, 1}, {1, 7}, {6, 1}, {9, 14}, {31, 17}}) {
    const std::size_t dim = 4;
    auto a = random_vec(n * dim, rng);
    auto b = random_vec(m * dim, rng);
    std::vector<double> c1(n * m), c2(n * m);
    kernels::serial::euclidean_cost(a.data(), n, b.data(), m, dim, c1.data());
    kernels::omp::euclidean_cost(a.data(), n, b.data(), m, dim, c2.data());
    CHECK(c1 == c2);
    const double t1 = kernels::serial::dtw_accumulate(c1.data(), n, m);
    const double t2 = kernels::omp::dtw_accumulate(c2.data(), n, m);
    CHECK(t1 == t2);
    CHECK(c1 == c2);
  }
}
