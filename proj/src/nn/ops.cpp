#include "choreo/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "choreo/nn/kernels.hpp"

namespace choreo::nn {

namespace {

void expect_same_shape(const Var& a, const Var& b, const char* what) {
  if (a.shape() != b.shape()) throw ShapeError(what, a.shape(), b.shape());
}

}  // namespace

Var conv1d(const Var& x, const Var& weight, const Var& bias, std::size_t dilation) {
  if (x.value().rank() != 3) throw ShapeError("conv1d input", {0, 0, 0}, x.shape());
  const std::size_t out_ch = weight.value().dim(0);
  const std::size_t in_ch = weight.value().dim(1);
  x.value().expect_shape({0, in_ch, 0}, "conv1d input channels");
  bias.value().expect_shape({out_ch}, "conv1d bias");
  if (dilation == 0) throw ValidationError("conv1d", "dilation must be >= 1");

  kernels::Conv1dDims d;
  d.batch = x.value().dim(0);
  d.in_channels = in_ch;
  d.out_channels = out_ch;
  d.time = x.value().dim(2);
  d.kernel = weight.value().dim(2);
  d.dilation = dilation;

  Tensor y({d.batch, out_ch, d.time});
  kernels::omp::conv1d_forward(d, x.value().ptr(), weight.value().ptr(), bias.value().ptr(), y.ptr());
  return make_result(std::move(y), {x, weight, bias}, [d](Node& self) {
    Node& xn = *self.inputs[0];
    Node& wn = *self.inputs[1];
    Node& bn = *self.inputs[2];
    if (xn.requires_grad) {
      kernels::omp::conv1d_backward_input(d, wn.value.ptr(), self.grad.ptr(), xn.ensure_grad().ptr());
    }
    if (wn.requires_grad || bn.requires_grad) {
      double* gb = nullptr;
      if (bn.requires_grad) gb = bn.ensure_grad().ptr();
      if (wn.requires_grad) {
        kernels::omp::conv1d_backward_weight(d, xn.value.ptr(), self.grad.ptr(), wn.ensure_grad().ptr(), gb);
      } else {
        Tensor scratch_w(wn.value.shape());
        kernels::omp::conv1d_backward_weight(d, xn.value.ptr(), self.grad.ptr(), scratch_w.ptr(), gb);
      }
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  if (x.value().rank() != 2) throw ShapeError("linear input", {0, 0}, x.shape());
  const std::size_t out_f = weight.value().dim(0);
  const std::size_t in_f = weight.value().dim(1);
  x.value().expect_shape({0, in_f}, "linear input features");
  bias.value().expect_shape({out_f}, "linear bias");
  kernels::LinearDims d{x.value().dim(0), in_f, out_f};
  Tensor y({d.batch, out_f});
  kernels::omp::linear_forward(d, x.value().ptr(), weight.value().ptr(), bias.value().ptr(), y.ptr());
  return make_result(std::move(y), {x, weight, bias}, [d](Node& self) {
    Node& xn = *self.inputs[0];
    Node& wn = *self.inputs[1];
    Node& bn = *self.inputs[2];
    if (xn.requires_grad) {
      kernels::omp::linear_backward_input(d, wn.value.ptr(), self.grad.ptr(), xn.ensure_grad().ptr());
    }
    if (wn.requires_grad) {
      kernels::omp::linear_backward_weight(d, xn.value.ptr(), self.grad.ptr(), wn.ensure_grad().ptr(),
                                           bn.requires_grad ? bn.ensure_grad().ptr() : nullptr);
    } else if (bn.requires_grad) {
      Tensor& gb = bn.ensure_grad();
      for (std::size_t n = 0; n < d.batch; ++n) {
        for (std::size_t o = 0; o < d.out_features; ++o) gb[o] += self.grad[n * d.out_features + o];
      }
    }
  });
}

Var maxpool1d(const Var& x, std::size_t kernel, std::size_t stride) {
  if (x.value().rank() != 3) throw ShapeError("maxpool1d input", {0, 0, 0}, x.shape());
  if (kernel == 0 || stride == 0) throw ValidationError("maxpool1d", "kernel and stride must be >= 1");
  const std::size_t n = x.value().dim(0), c = x.value().dim(1), t = x.value().dim(2);
  if (t < kernel) throw ShapeError("maxpool1d time shorter than kernel", {0, 0, kernel}, x.shape());
  const std::size_t out_t = (t - kernel) / stride + 1;
  Tensor y({n, c, out_t});
  std::vector<std::size_t> argmax(y.size());
  const double* in = x.value().ptr();
  for (std::size_t row = 0; row < n * c; ++row) {
    for (std::size_t o = 0; o < out_t; ++o) {
      std::size_t best = row * t + o * stride;
      for (std::size_t k = 1; k < kernel; ++k) {
        const std::size_t idx = row * t + o * stride + k;
        if (in[idx] > in[best]) best = idx;
      }
      y[row * out_t + o] = in[best];
      argmax[row * out_t + o] = best;
    }
  }
  return make_result(std::move(y), {x}, [argmax = std::move(argmax)](Node& self) {
    Tensor& gx = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += self.grad[i];
  });
}

Var gated_tanh(const Var& x) {
  if (x.value().rank() < 2) throw ShapeError("gated_tanh input", {0, 0}, x.shape());
  const Shape& s = x.shape();
  const std::size_t ch = s[1];
  if (ch % 2 != 0) throw ValidationError("gated_tanh", "channel count must be even, got " + std::to_string(ch));
  const std::size_t half = ch / 2;
  const std::size_t inner = s.size() == 3 ? s[2] : 1;
  Shape out_shape = s;
  out_shape[1] = half;
  Tensor y(out_shape);
  Tensor th(out_shape), sg(out_shape);
  const double* in = x.value().ptr();
  for (std::size_t n = 0; n < s[0]; ++n) {
    const double* a = in + n * ch * inner;
    const double* g = a + half * inner;
    const std::size_t base = n * half * inner;
    for (std::size_t i = 0; i < half * inner; ++i) {
      const double tv = std::tanh(a[i]);
      const double sv = 1.0 / (1.0 + std::exp(-g[i]));
      th[base + i] = tv;
      sg[base + i] = sv;
      y[base + i] = tv * sv;
    }
  }
  return make_result(std::move(y), {x}, [th = std::move(th), sg = std::move(sg), half, inner, ch](Node& self) {
    Tensor& gx = self.inputs[0]->ensure_grad();
    const std::size_t batch = self.value.dim(0);
    for (std::size_t n = 0; n < batch; ++n) {
      double* ga = gx.ptr() + n * ch * inner;
      double* gg = ga + half * inner;
      const std::size_t base = n * half * inner;
      for (std::size_t i = 0; i < half * inner; ++i) {
        const double g = self.grad[base + i];
        const double tv = th[base + i], sv = sg[base + i];
        ga[i] += g * sv * (1.0 - tv * tv);
        gg[i] += g * tv * sv * (1.0 - sv);
      }
    }
  });
}

Var leaky_relu(const Var& x, double slope) {
  if (!(slope > 0.0)) throw ValidationError("leaky_relu", "slope must be positive");
  Tensor y(x.shape());
  const auto in = x.value().data();
  for (std::size_t i = 0; i < in.size(); ++i) y[i] = in[i] >= 0.0 ? in[i] : slope * in[i];
  return make_result(std::move(y), {x}, [slope](Node& self) {
    Node& xn = *self.inputs[0];
    Tensor& gx = xn.ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * (xn.value[i] >= 0.0 ? 1.0 : slope);
  });
}

Var relu(const Var& x) {
  Tensor y(x.shape());
  const auto in = x.value().data();
  for (std::size_t i = 0; i < in.size(); ++i) y[i] = in[i] > 0.0 ? in[i] : 0.0;
  return make_result(std::move(y), {x}, [](Node& self) {
    Node& xn = *self.inputs[0];
    Tensor& gx = xn.ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (xn.value[i] > 0.0) gx[i] += self.grad[i];
    }
  });
}

Var sigmoid(const Var& x) {
  Tensor y(x.shape());
  const auto in = x.value().data();
  for (std::size_t i = 0; i < in.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-in[i]));
  return make_result(std::move(y), {x}, [](Node& self) {
    Tensor& gx = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * self.value[i] * (1.0 - self.value[i]);
  });
}

Var dropout(const Var& x, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("dropout", "rate must be in [0, 1)");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor mask(x.shape());
  Tensor y(x.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform() >= rate ? keep_scale : 0.0;
    y[i] = x.value()[i] * mask[i];
  }
  return make_result(std::move(y), {x}, [mask = std::move(mask)](Node& self) {
    Tensor& gx = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * mask[i];
  });
}

Var batchnorm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean, Tensor& running_var,
              bool training, double momentum, double eps) {
  const Shape& s = x.shape();
  if (s.size() != 2 && s.size() != 3) throw ShapeError("batchnorm input", {0, 0, 0}, s);
  const std::size_t n = s[0], c = s[1], t = s.size() == 3 ? s[2] : 1;
  gamma.value().expect_shape({c}, "batchnorm gamma");
  beta.value().expect_shape({c}, "batchnorm beta");
  const std::size_t count = n * t;
  const double* in = x.value().ptr();

  std::vector<double> mu(c), inv_std(c);
  if (training) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double m = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* row = in + (b * c + ch) * t;
        for (std::size_t i = 0; i < t; ++i) m += row[i];
      }
      m /= static_cast<double>(count);
      double v = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* row = in + (b * c + ch) * t;
        for (std::size_t i = 0; i < t; ++i) v += (row[i] - m) * (row[i] - m);
      }
      v /= static_cast<double>(count);
      mu[ch] = m;
      inv_std[ch] = 1.0 / std::sqrt(v + eps);
      const double unbiased = count > 1 ? v * static_cast<double>(count) / static_cast<double>(count - 1) : v;
      running_mean[ch] = momentum * running_mean[ch] + (1.0 - momentum) * m;
      running_var[ch] = momentum * running_var[ch] + (1.0 - momentum) * unbiased;
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mu[ch] = running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(running_var[ch] + eps);
    }
  }

  Tensor xhat(s);
  Tensor y(s);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (b * c + ch) * t;
      for (std::size_t i = 0; i < t; ++i) {
        const double h = (in[off + i] - mu[ch]) * inv_std[ch];
        xhat[off + i] = h;
        y[off + i] = gamma.value()[ch] * h + beta.value()[ch];
      }
    }
  }

  return make_result(std::move(y), {x, gamma, beta},
                     [xhat = std::move(xhat), inv_std = std::move(inv_std), n, c, t, count, training](Node& self) {
                       Node& xn = *self.inputs[0];
                       Node& gn = *self.inputs[1];
                       Node& bn = *self.inputs[2];
                       std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
                       for (std::size_t b = 0; b < n; ++b) {
                         for (std::size_t ch = 0; ch < c; ++ch) {
                           const std::size_t off = (b * c + ch) * t;
                           for (std::size_t i = 0; i < t; ++i) {
                             sum_g[ch] += self.grad[off + i];
                             sum_gx[ch] += self.grad[off + i] * xhat[off + i];
                           }
                         }
                       }
                       if (gn.requires_grad) {
                         Tensor& gg = gn.ensure_grad();
                         for (std::size_t ch = 0; ch < c; ++ch) gg[ch] += sum_gx[ch];
                       }
                       if (bn.requires_grad) {
                         Tensor& gb = bn.ensure_grad();
                         for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += sum_g[ch];
                       }
                       if (!xn.requires_grad) return;
                       Tensor& gx = xn.ensure_grad();
                       const double inv_count = 1.0 / static_cast<double>(count);
                       for (std::size_t b = 0; b < n; ++b) {
                         for (std::size_t ch = 0; ch < c; ++ch) {
                           const std::size_t off = (b * c + ch) * t;
                           const double g = gn.value[ch] * inv_std[ch];
                           for (std::size_t i = 0; i < t; ++i) {
                             const double dy = self.grad[off + i];
                             if (training) {
                               gx[off + i] += g * (dy - inv_count * sum_g[ch] - xhat[off + i] * inv_count * sum_gx[ch]);
                             } else {
                               gx[off + i] += g * dy;
                             }
                           }
                         }
                       }
                     });
}

Var add(const Var& a, const Var& b) {
  expect_same_shape(a, b, "add");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  return make_result(std::move(y), {a, b}, [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      Node& in = *self.inputs[k];
      if (!in.requires_grad) continue;
      Tensor& g = in.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  expect_same_shape(a, b, "sub");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] - b.value()[i];
  return make_result(std::move(y), {a, b}, [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      Node& in = *self.inputs[k];
      if (!in.requires_grad) continue;
      Tensor& g = in.ensure_grad();
      const double sign = k == 0 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  expect_same_shape(a, b, "mul");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  return make_result(std::move(y), {a, b}, [](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    if (an.requires_grad) {
      Tensor& g = an.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn.value[i];
    }
    if (bn.requires_grad) {
      Tensor& g = bn.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an.value[i];
    }
  });
}

Var add_scalar(const Var& a, double s) {
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + s;
  return make_result(std::move(y), {a}, [](Node& self) {
    Tensor& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var scale(const Var& a, double s) {
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * s;
  return make_result(std::move(y), {a}, [s](Node& self) {
    Tensor& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * s;
  });
}

Var sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return make_result(Tensor::scalar(total), {a}, [](Node& self) {
    Tensor& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var mean_over_time(const Var& x) {
  if (x.value().rank() != 3) throw ShapeError("mean_over_time input", {0, 0, 0}, x.shape());
  const std::size_t n = x.value().dim(0), c = x.value().dim(1), t = x.value().dim(2);
  Tensor y({n, c});
  for (std::size_t r = 0; r < n * c; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t; ++i) acc += x.value()[r * t + i];
    y[r] = acc / static_cast<double>(t);
  }
  return make_result(std::move(y), {x}, [t](Node& self) {
    Tensor& g = self.inputs[0]->ensure_grad();
    const double inv = 1.0 / static_cast<double>(t);
    for (std::size_t r = 0; r < self.grad.size(); ++r) {
      for (std::size_t i = 0; i < t; ++i) g[r * t + i] += self.grad[r] * inv;
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  return make_result(std::move(y), {x}, [](Node& self) {
    Tensor& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var concat_features(const Var& a, const Var& b) {
  if (a.value().rank() != 2 || b.value().rank() != 2 || a.value().dim(0) != b.value().dim(0)) {
    throw ShapeError("concat_features", a.shape(), b.shape());
  }
  const std::size_t n = a.value().dim(0), fa = a.value().dim(1), fb = b.value().dim(1);
  Tensor y({n, fa + fb});
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(a.value().ptr() + r * fa, fa, y.ptr() + r * (fa + fb));
    std::copy_n(b.value().ptr() + r * fb, fb, y.ptr() + r * (fa + fb) + fa);
  }
  return make_result(std::move(y), {a, b}, [n, fa, fb](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    for (std::size_t r = 0; r < n; ++r) {
      const double* g = self.grad.ptr() + r * (fa + fb);
      if (an.requires_grad) {
        double* ga = an.ensure_grad().ptr() + r * fa;
        for (std::size_t i = 0; i < fa; ++i) ga[i] += g[i];
      }
      if (bn.requires_grad) {
        double* gb = bn.ensure_grad().ptr() + r * fb;
        for (std::size_t i = 0; i < fb; ++i) gb[i] += g[fa + i];
      }
    }
  });
}

Var softmax(const Var& logits) {
  if (logits.value().rank() != 2) throw ShapeError("softmax input", {0, 0}, logits.shape());
  const std::size_t n = logits.value().dim(0), k = logits.value().dim(1);
  Tensor y({n, k});
  for (std::size_t r = 0; r < n; ++r) {
    const double* in = logits.value().ptr() + r * k;
    const double mx = *std::max_element(in, in + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(in[j] - mx);
    for (std::size_t j = 0; j < k; ++j) y[r * k + j] = std::exp(in[j] - mx) / z;
  }
  return make_result(std::move(y), {logits}, [n, k](Node& self) {
    Tensor& g = self.inputs[0]->ensure_grad();
    for (std::size_t r = 0; r < n; ++r) {
      const double* p = self.value.ptr() + r * k;
      const double* gy = self.grad.ptr() + r * k;
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += gy[j] * p[j];
      for (std::size_t j = 0; j < k; ++j) g[r * k + j] += p[j] * (gy[j] - dot);
    }
  });
}

Var cross_entropy(const Var& logits, std::span<const std::size_t> labels) {
  if (logits.value().rank() != 2) throw ShapeError("cross_entropy logits", {0, 0}, logits.shape());
  const std::size_t n = logits.value().dim(0), k = logits.value().dim(1);
  if (labels.size() != n) throw ShapeError("cross_entropy labels", {n}, {labels.size()});
  Tensor probs({n, k});
  double loss = 0.0;
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  for (std::size_t r = 0; r < n; ++r) {
    if (lab[r] >= k) throw ValidationError("cross_entropy", "label out of range");
    const double* in = logits.value().ptr() + r * k;
    const double mx = *std::max_element(in, in + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(in[j] - mx);
    for (std::size_t j = 0; j < k; ++j) probs[r * k + j] = std::exp(in[j] - mx) / z;
    loss += -(in[lab[r]] - mx - std::log(z));
  }
  loss /= static_cast<double>(n);
  return make_result(Tensor::scalar(loss), {logits}, [probs = std::move(probs), lab = std::move(lab), n, k](Node& self) {
    Tensor& g = self.inputs[0]->ensure_grad();
    const double s = self.grad[0] / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < k; ++j) {
        g[r * k + j] += s * (probs[r * k + j] - (j == lab[r] ? 1.0 : 0.0));
      }
    }
  });
}

Var mse_loss(const Var& prediction, const Tensor& target) {
  if (prediction.value().size() != target.size()) throw ShapeError("mse_loss target", prediction.shape(), target.shape());
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double r = prediction.value()[i] - target[i];
    acc += r * r;
  }
  const double count = static_cast<double>(target.size());
  return make_result(Tensor::scalar(acc / count), {prediction}, [target, count](Node& self) {
    Node& pn = *self.inputs[0];
    Tensor& g = pn.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * 2.0 * (pn.value[i] - target[i]) / count;
  });
}

Var l1_loss(const Var& prediction, const Tensor& target) {
  if (prediction.value().size() != target.size()) throw ShapeError("l1_loss target", prediction.shape(), target.shape());
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) acc += std::abs(prediction.value()[i] - target[i]);
  const double count = static_cast<double>(target.size());
  return make_result(Tensor::scalar(acc / count), {prediction}, [target, count](Node& self) {
    Node& pn = *self.inputs[0];
    Tensor& g = pn.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = pn.value[i] - target[i];
      const double sign = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
      g[i] += self.grad[0] * sign / count;
    }
  });
}

}  // namespace choreo::nn
