#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "choreo/nn/kernels.hpp"

namespace choreo::kernels {

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

namespace omp {

using Index = std::int64_t;

void conv1d_forward(const Conv1dDims& d, const double* x, const double* w, const double* b, double* y) {
  const Index rows = static_cast<Index>(d.batch * d.out_channels);
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    const std::size_t n = static_cast<std::size_t>(r) / d.out_channels;
    const std::size_t o = static_cast<std::size_t>(r) % d.out_channels;
    double* out = y + static_cast<std::size_t>(r) * d.time;
    std::fill(out, out + d.time, b ? b[o] : 0.0);
    for (std::size_t c = 0; c < d.in_channels; ++c) {
      const double* in = x + (n * d.in_channels + c) * d.time;
      const double* wk = w + (o * d.in_channels + c) * d.kernel;
      for (std::size_t k = 0; k < d.kernel; ++k) {
        const std::size_t shift = d.dilation * (d.kernel - 1 - k);
        if (shift >= d.time) continue;
        const double wv = wk[k];
        const std::size_t len = d.time - shift;
        double* dst = out + shift;
        for (std::size_t t = 0; t < len; ++t) dst[t] += wv * in[t];
      }
    }
  }
}

void conv1d_backward_input(const Conv1dDims& d, const double* w, const double* gy, double* gx) {
  const Index rows = static_cast<Index>(d.batch * d.in_channels);
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    const std::size_t n = static_cast<std::size_t>(r) / d.in_channels;
    const std::size_t c = static_cast<std::size_t>(r) % d.in_channels;
    double* dst = gx + static_cast<std::size_t>(r) * d.time;
    for (std::size_t o = 0; o < d.out_channels; ++o) {
      const double* g = gy + (n * d.out_channels + o) * d.time;
      const double* wk = w + (o * d.in_channels + c) * d.kernel;
      for (std::size_t k = 0; k < d.kernel; ++k) {
        const std::size_t shift = d.dilation * (d.kernel - 1 - k);
        if (shift >= d.time) continue;
        const double wv = wk[k];
        const std::size_t len = d.time - shift;
        const double* src = g + shift;
        for (std::size_t s = 0; s < len; ++s) dst[s] += wv * src[s];
      }
    }
  }
}

void conv1d_backward_weight(const Conv1dDims& d, const double* x, const double* gy, double* gw, double* gb) {
  const Index outs = static_cast<Index>(d.out_channels);
#pragma omp parallel for schedule(static)
  for (Index oi = 0; oi < outs; ++oi) {
    const std::size_t o = static_cast<std::size_t>(oi);
    for (std::size_t n = 0; n < d.batch; ++n) {
      const double* g = gy + (n * d.out_channels + o) * d.time;
      if (gb) {
        double acc = 0.0;
        for (std::size_t t = 0; t < d.time; ++t) acc += g[t];
        gb[o] += acc;
      }
      for (std::size_t c = 0; c < d.in_channels; ++c) {
        const double* in = x + (n * d.in_channels + c) * d.time;
        double* wk = gw + (o * d.in_channels + c) * d.kernel;
        for (std::size_t k = 0; k < d.kernel; ++k) {
          const std::size_t shift = d.dilation * (d.kernel - 1 - k);
          if (shift >= d.time) continue;
          const std::size_t len = d.time - shift;
          const double* gs = g + shift;
          double acc = 0.0;
          for (std::size_t t = 0; t < len; ++t) acc += gs[t] * in[t];
          wk[k] += acc;
        }
      }
    }
  }
}

void linear_forward(const LinearDims& d, const double* x, const double* w, const double* b, double* y) {
  // Weight rows outermost so each row is streamed once for the whole batch.
  const Index outs = static_cast<Index>(d.out_features);
#pragma omp parallel for schedule(static)
  for (Index oi = 0; oi < outs; ++oi) {
    const std::size_t o = static_cast<std::size_t>(oi);
    const double* wr = w + o * d.in_features;
    for (std::size_t n = 0; n < d.batch; ++n) {
      const double* xr = x + n * d.in_features;
      double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
      std::size_t f = 0;
      for (; f + 4 <= d.in_features; f += 4) {
        acc0 += wr[f] * xr[f];
        acc1 += wr[f + 1] * xr[f + 1];
        acc2 += wr[f + 2] * xr[f + 2];
        acc3 += wr[f + 3] * xr[f + 3];
      }
      for (; f < d.in_features; ++f) acc0 += wr[f] * xr[f];
      y[n * d.out_features + o] = (b ? b[o] : 0.0) + ((acc0 + acc1) + (acc2 + acc3));
    }
  }
}

void linear_backward_input(const LinearDims& d, const double* w, const double* gy, double* gx) {
  const Index rows = static_cast<Index>(d.batch);
#pragma omp parallel for schedule(static)
  for (Index ni = 0; ni < rows; ++ni) {
    const std::size_t n = static_cast<std::size_t>(ni);
    double* dst = gx + n * d.in_features;
    for (std::size_t o = 0; o < d.out_features; ++o) {
      const double g = gy[n * d.out_features + o];
      if (g == 0.0) continue;
      const double* wr = w + o * d.in_features;
      for (std::size_t f = 0; f < d.in_features; ++f) dst[f] += g * wr[f];
    }
  }
}

void linear_backward_weight(const LinearDims& d, const double* x, const double* gy, double* gw, double* gb) {
  const Index outs = static_cast<Index>(d.out_features);
#pragma omp parallel for schedule(static)
  for (Index oi = 0; oi < outs; ++oi) {
    const std::size_t o = static_cast<std::size_t>(oi);
    double* wr = gw + o * d.in_features;
    double bacc = 0.0;
    for (std::size_t n = 0; n < d.batch; ++n) {
      const double g = gy[n * d.out_features + o];
      bacc += g;
      if (g == 0.0) continue;
      const double* xr = x + n * d.in_features;
      for (std::size_t f = 0; f < d.in_features; ++f) wr[f] += g * xr[f];
    }
    if (gb) gb[o] += bacc;
  }
}

void euclidean_cost(const double* a, std::size_t n, const double* b, std::size_t m, std::size_t dim,
                    double* cost) {
  const Index rows = static_cast<Index>(n);
#pragma omp parallel for schedule(static)
  for (Index ii = 0; ii < rows; ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const double* ar = a + i * dim;
    for (std::size_t j = 0; j < m; ++j) {
      const double* br = b + j * dim;
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = ar[k] - br[k];
        acc += diff * diff;
      }
      cost[i * m + j] = std::sqrt(acc);
    }
  }
}

double dtw_accumulate(double* cost, std::size_t n, std::size_t m) {
  for (std::size_t j = 1; j < m; ++j) cost[j] += cost[j - 1];
  for (std::size_t i = 1; i < n; ++i) cost[i * m] += cost[(i - 1) * m];
  // Interior cells on anti-diagonal i + j = diag depend only on earlier diagonals.
  for (std::size_t diag = 2; diag + 2 <= n + m; ++diag) {
    const std::size_t i_lo = diag >= m ? diag - m + 1 : 1;
    const std::size_t i_hi = std::min(n - 1, diag - 1);
    if (i_lo > i_hi) continue;
    const Index count = static_cast<Index>(i_hi - i_lo + 1);
#pragma omp parallel for schedule(static) if (count > 256)
    for (Index q = 0; q < count; ++q) {
      const std::size_t i = i_lo + static_cast<std::size_t>(q);
      const std::size_t j = diag - i;
      const double best = std::min({cost[(i - 1) * m + j], cost[i * m + j - 1], cost[(i - 1) * m + j - 1]});
      cost[i * m + j] += best;
    }
  }
  return cost[n * m - 1];
}

}  // namespace omp
}  // namespace choreo::kernels
