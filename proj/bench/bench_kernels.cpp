// Serial reference vs OpenMP kernels on shapes taken from the three networks.

#include <benchmark/benchmark.h>

#include <vector>

#include "choreo/core/rng.hpp"
#include "choreo/nn/kernels.hpp"

namespace {

using namespace choreo;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

// First tempo-network block at full 2 s resolution.
const kernels::Conv1dDims kAudioConv{4, 1, 8, 44100, 3, 1};
// Second pose-generator block at default width.
const kernels::Conv1dDims kPoseConv{4, 256, 256, 16, 3, 2};
const kernels::LinearDims kDecoder{32, 1024, 1024};

template <auto Fn>
void BM_ConvForward(benchmark::State& state, const kernels::Conv1dDims& d) {
  auto x = random_vec(d.batch * d.in_channels * d.time, 1);
  auto w = random_vec(d.out_channels * d.in_channels * d.kernel, 2);
  auto b = random_vec(d.out_channels, 3);
  std::vector<double> y(d.batch * d.out_channels * d.time);
  for (auto _ : state) {
    Fn(d, x.data(), w.data(), b.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * d.batch * d.out_channels * d.in_channels * d.kernel * d.time);
}

template <auto Fn>
void BM_ConvBackwardWeight(benchmark::State& state, const kernels::Conv1dDims& d) {
  auto x = random_vec(d.batch * d.in_channels * d.time, 1);
  auto gy = random_vec(d.batch * d.out_channels * d.time, 2);
  std::vector<double> gw(d.out_channels * d.in_channels * d.kernel), gb(d.out_channels);
  for (auto _ : state) {
    Fn(d, x.data(), gy.data(), gw.data(), gb.data());
    benchmark::DoNotOptimize(gw.data());
  }
}

template <auto Fn>
void BM_LinearForward(benchmark::State& state, const kernels::LinearDims& d) {
  auto x = random_vec(d.batch * d.in_features, 1);
  auto w = random_vec(d.out_features * d.in_features, 2);
  auto b = random_vec(d.out_features, 3);
  std::vector<double> y(d.batch * d.out_features);
  for (auto _ : state) {
    Fn(d, x.data(), w.data(), b.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * d.batch * d.in_features * d.out_features);
}

template <auto Cost, auto Acc>
void BM_Dtw(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  auto a = random_vec(n * 74, 1);
  auto b = random_vec(n * 74, 2);
  std::vector<double> cost(n * n);
  for (auto _ : state) {
    Cost(a.data(), n, b.data(), n, 74, cost.data());
    benchmark::DoNotOptimize(Acc(cost.data(), n, n));
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace kernels;
  benchmark::RegisterBenchmark("conv_forward/audio/serial", BM_ConvForward<serial::conv1d_forward>, kAudioConv);
  benchmark::RegisterBenchmark("conv_forward/audio/omp", BM_ConvForward<omp::conv1d_forward>, kAudioConv);
  benchmark::RegisterBenchmark("conv_forward/pose/serial", BM_ConvForward<serial::conv1d_forward>, kPoseConv);
  benchmark::RegisterBenchmark("conv_forward/pose/omp", BM_ConvForward<omp::conv1d_forward>, kPoseConv);
  benchmark::RegisterBenchmark("conv_backward_weight/pose/serial", BM_ConvBackwardWeight<serial::conv1d_backward_weight>,
                               kPoseConv);
  benchmark::RegisterBenchmark("conv_backward_weight/pose/omp", BM_ConvBackwardWeight<omp::conv1d_backward_weight>,
                               kPoseConv);
  benchmark::RegisterBenchmark("linear_forward/decoder/serial", BM_LinearForward<serial::linear_forward>, kDecoder);
  benchmark::RegisterBenchmark("linear_forward/decoder/omp", BM_LinearForward<omp::linear_forward>, kDecoder);
  benchmark::RegisterBenchmark("dtw/serial", BM_Dtw<serial::euclidean_cost, serial::dtw_accumulate>)->Arg(50)->Arg(250);
  benchmark::RegisterBenchmark("dtw/omp", BM_Dtw<omp::euclidean_cost, omp::dtw_accumulate>)->Arg(50)->Arg(250);
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
