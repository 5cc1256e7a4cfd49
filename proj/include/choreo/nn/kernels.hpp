#pragma once

#include <cstddef>

// Hot loops of the library. Each kernel exists twice: a plain serial
// reference written in textbook loop order, and an OpenMP variant with
// reordered, vectorizable inner loops. The library calls the OpenMP variant;
// tests and the benchmark compare the two.
//
// Backward kernels accumulate into their output buffers.

namespace choreo::kernels {

/// Causal dilated 1-D convolution over [batch, channels, time] buffers.
/// y[n,o,t] = b[o] + sum_{c,k} w[o,c,k] * x[n,c,t - dilation*(kernel-1-k)],
/// with x taken as zero at negative time.
struct Conv1dDims {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t time = 1;
  std::size_t kernel = 1;
  std::size_t dilation = 1;
};

/// y[n,o] = b[o] + sum_f w[o,f] * x[n,f]
struct LinearDims {
  std::size_t batch = 1;
  std::size_t in_features = 1;
  std::size_t out_features = 1;
};

namespace serial {

void conv1d_forward(const Conv1dDims& d, const double* x, const double* w, const double* b, double* y);
void conv1d_backward_input(const Conv1dDims& d, const double* w, const double* gy, double* gx);
void conv1d_backward_weight(const Conv1dDims& d, const double* x, const double* gy, double* gw, double* gb);

void linear_forward(const LinearDims& d, const double* x, const double* w, const double* b, double* y);
void linear_backward_input(const LinearDims& d, const double* w, const double* gy, double* gx);
void linear_backward_weight(const LinearDims& d, const double* x, const double* gy, double* gw, double* gb);

/// cost[i*m + j] = ||a_i - b_j||_2 for row-major a (n x dim) and b (m x dim).
void euclidean_cost(const double* a, std::size_t n, const double* b, std::size_t m, std::size_t dim,
                    double* cost);

/// Classic DTW accumulation in place over an n x m cost matrix; returns the
/// total at (n-1, m-1). Steps (1,0), (0,1), (1,1).
double dtw_accumulate(double* cost, std::size_t n, std::size_t m);

}  // namespace serial

namespace omp {

void conv1d_forward(const Conv1dDims& d, const double* x, const double* w, const double* b, double* y);
void conv1d_backward_input(const Conv1dDims& d, const double* w, const double* gy, double* gx);
void conv1d_backward_weight(const Conv1dDims& d, const double* x, const double* gy, double* gw, double* gb);

void linear_forward(const LinearDims& d, const double* x, const double* w, const double* b, double* y);
void linear_backward_input(const LinearDims& d, const double* w, const double* gy, double* gx);
void linear_backward_weight(const LinearDims& d, const double* x, const double* gy, double* gw, double* gb);

void euclidean_cost(const double* a, std::size_t n, const double* b, std::size_t m, std::size_t dim,
                    double* cost);

/// Anti-diagonal wavefront; bit-identical to the serial accumulation.
double dtw_accumulate(double* cost, std::size_t n, std::size_t m);

}  // namespace omp

/// Number of threads the OpenMP kernels use (1 when built without OpenMP).
int thread_count();
void set_thread_count(int n);

}  // namespace choreo::kernels
