#include <algorithm>
#include <cmath>

#include "choreo/nn/kernels.hpp"

namespace choreo::kernels::serial {

void conv1d_forward(const Conv1dDims& d, const double* x, const double* w, const double* b, double* y) {
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t o = 0; o < d.out_channels; ++o) {
      for (std::size_t t = 0; t < d.time; ++t) {
        double acc = b ? b[o] : 0.0;
        for (std::size_t c = 0; c < d.in_channels; ++c) {
          for (std::size_t k = 0; k < d.kernel; ++k) {
            const std::size_t shift = d.dilation * (d.kernel - 1 - k);
            if (t < shift) continue;
            acc += w[(o * d.in_channels + c) * d.kernel + k] * x[(n * d.in_channels + c) * d.time + t - shift];
          }
        }
        y[(n * d.out_channels + o) * d.time + t] = acc;
      }
    }
  }
}

void conv1d_backward_input(const Conv1dDims& d, const double* w, const double* gy, double* gx) {
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t c = 0; c < d.in_channels; ++c) {
      for (std::size_t s = 0; s < d.time; ++s) {
        double acc = 0.0;
        for (std::size_t o = 0; o < d.out_channels; ++o) {
          for (std::size_t k = 0; k < d.kernel; ++k) {
            const std::size_t t = s + d.dilation * (d.kernel - 1 - k);
            if (t >= d.time) continue;
            acc += w[(o * d.in_channels + c) * d.kernel + k] * gy[(n * d.out_channels + o) * d.time + t];
          }
        }
        gx[(n * d.in_channels + c) * d.time + s] += acc;
      }
    }
  }
}

void conv1d_backward_weight(const Conv1dDims& d, const double* x, const double* gy, double* gw, double* gb) {
  for (std::size_t o = 0; o < d.out_channels; ++o) {
    if (gb) {
      double acc = 0.0;
      for (std::size_t n = 0; n < d.batch; ++n) {
        for (std::size_t t = 0; t < d.time; ++t) acc += gy[(n * d.out_channels + o) * d.time + t];
      }
      gb[o] += acc;
    }
    for (std::size_t c = 0; c < d.in_channels; ++c) {
      for (std::size_t k = 0; k < d.kernel; ++k) {
        const std::size_t shift = d.dilation * (d.kernel - 1 - k);
        double acc = 0.0;
        for (std::size_t n = 0; n < d.batch; ++n) {
          for (std::size_t t = shift; t < d.time; ++t) {
            acc += gy[(n * d.out_channels + o) * d.time + t] * x[(n * d.in_channels + c) * d.time + t - shift];
          }
        }
        gw[(o * d.in_channels + c) * d.kernel + k] += acc;
      }
    }
  }
}

void linear_forward(const LinearDims& d, const double* x, const double* w, const double* b, double* y) {
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t o = 0; o < d.out_features; ++o) {
      double acc = b ? b[o] : 0.0;
      for (std::size_t f = 0; f < d.in_features; ++f) acc += w[o * d.in_features + f] * x[n * d.in_features + f];
      y[n * d.out_features + o] = acc;
    }
  }
}

void linear_backward_input(const LinearDims& d, const double* w, const double* gy, double* gx) {
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t f = 0; f < d.in_features; ++f) {
      double acc = 0.0;
      for (std::size_t o = 0; o < d.out_features; ++o) acc += gy[n * d.out_features + o] * w[o * d.in_features + f];
      gx[n * d.in_features + f] += acc;
    }
  }
}

void linear_backward_weight(const LinearDims& d, const double* x, const double* gy, double* gw, double* gb) {
  for (std::size_t o = 0; o < d.out_features; ++o) {
    for (std::size_t f = 0; f < d.in_features; ++f) {
      double acc = 0.0;
      for (std::size_t n = 0; n < d.batch; ++n) acc += gy[n * d.out_features + o] * x[n * d.in_features + f];
      gw[o * d.in_features + f] += acc;
    }
    if (gb) {
      double acc = 0.0;
      for (std::size_t n = 0; n < d.batch; ++n) acc += gy[n * d.out_features + o];
      gb[o] += acc;
    }
  }
}

void euclidean_cost(const double* a, std::size_t n, const double* b, std::size_t m, std::size_t dim,
                    double* cost) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = a[i * dim + k] - b[j * dim + k];
        acc += diff * diff;
      }
      cost[i * m + j] = std::sqrt(acc);
    }
  }
}

double dtw_accumulate(double* cost, std::size_t n, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == 0 && j == 0) continue;
      double best = INFINITY;
      if (i > 0) best = std::min(best, cost[(i - 1) * m + j]);
      if (j > 0) best = std::min(best, cost[i * m + j - 1]);
      if (i > 0 && j > 0) best = std::min(best, cost[(i - 1) * m + j - 1]);
      cost[i * m + j] += best;
    }
  }
  return cost[n * m - 1];
}

}  // namespace choreo::kernels::serial
