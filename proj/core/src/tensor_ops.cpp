// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "umri/ops.hpp"
#include "umri/tensor.hpp"

namespace umri {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ')';
  return os.str();
}

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

void require_rank3(const Shape& s, const char* what) {
  if (s.size() != 3) throw DimensionError(std::string(what) + ": expected C x H x W, got " + shape_string(s));
}

// Per-thread buffers for im2col matrices; large fresh allocations cost more
// in page faults than the copies themselves.
template <class T>
T* scratch(std::size_t slot, std::size_t n) {
  thread_local std::vector<T> buffers[2];
  auto& b = buffers[slot];
  if (b.size() < n) b.resize(n);
  return b.data();
}

// Column matrix of (C*k*k) x (H*W) for a same-size k x k convolution,
// written into dst.
template <class T>
void im2col(const Tensor<T>& in, std::size_t k, T* cols) {
  const std::size_t C = in.dim(0), H = in.dim(1), W = in.dim(2), HW = H * W;
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const T* src = in.data().data();
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = cols + ((c * k + ky) * k + kx) * HW;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::size_t x_lo = dx < 0 ? static_cast<std::size_t>(-dx) : 0;
        const std::size_t x_hi = dx > 0 ? W - static_cast<std::size_t>(dx) : W;
        for (std::size_t y = 0; y < H; ++y) {
          T* drow = row + y * W;
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) {
            std::fill(drow, drow + W, T{0});
            continue;
          }
          const T* srow = src + (c * H + static_cast<std::size_t>(sy)) * W;
          std::fill(drow, drow + x_lo, T{0});
          for (std::size_t x = x_lo; x < x_hi; ++x) drow[x] = srow[static_cast<std::ptrdiff_t>(x) + dx];
          std::fill(drow + x_hi, drow + W, T{0});
        }
      }
    }
  }
}

template <class T>
void col2im(const T* cols, std::size_t C, std::size_t H, std::size_t W, std::size_t k, T* dst) {
  const std::size_t HW = H * W;
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = cols + ((c * k + ky) * k + kx) * HW;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::size_t x_lo = dx < 0 ? static_cast<std::size_t>(-dx) : 0;
        const std::size_t x_hi = dx > 0 ? W - static_cast<std::size_t>(dx) : W;
        for (std::size_t y = 0; y < H; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) continue;
          T* drow = dst + (c * H + static_cast<std::size_t>(sy)) * W;
          const T* srow = row + y * W;
          for (std::size_t x = x_lo; x < x_hi; ++x) drow[static_cast<std::ptrdiff_t>(x) + dx] += srow[x];
        }
      }
    }
  }
}

template <class T>
void check_conv_shapes(const Tensor<T>& input, const Tensor<T>& weight) {
  require_rank3(input.shape(), "conv2d input");
  if (weight.rank() != 4) throw DimensionError("conv2d weight: expected O x C x k x k, got " + shape_string(weight.shape()));
  const std::size_t k = weight.dim(2);
  if (weight.dim(3) != k || (k != 1 && k != 3)) {
    throw DimensionError("conv2d: kernel must be 1x1 or 3x3, got " + shape_string(weight.shape()));
  }
  if (weight.dim(1) != input.dim(0)) {
    throw DimensionError("conv2d: input has " + std::to_string(input.dim(0)) + " channels, weight expects " +
                         std::to_string(weight.dim(1)));
  }
}

struct AxisTaps {
  std::vector<std::size_t> lo, hi;
  std::vector<double> frac;  // weight of hi
};

AxisTaps axis_taps(std::size_t in, std::size_t out, UpsampleMode mode) {
  AxisTaps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.assign(out, 0.0);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    if (mode == UpsampleMode::nearest) {
      t.lo[i] = t.hi[i] = (i * in) / out;
      continue;
    }
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    auto i0 = static_cast<std::size_t>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    t.lo[i] = i0;
    t.hi[i] = std::min(i0 + 1, in - 1);
    t.frac[i] = src - static_cast<double>(i0);
  }
  return t;
}

}  // namespace

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  check_conv_shapes(input, weight);
  const std::size_t O = weight.dim(0), C = input.dim(0), k = weight.dim(2);
  const std::size_t H = input.dim(1), W = input.dim(2), HW = H * W;
  if (bias.size() != O) throw DimensionError("conv2d: bias length must equal output channels");

  Tensor<T> out({O, H, W});
  MapMat<T> out_m(out.data().data(), O, HW);
  ConstMapMat<T> w_m(weight.data().data(), O, C * k * k);
  if (k == 1) {
    out_m.noalias() = w_m * ConstMapMat<T>(input.data().data(), C, HW);
  } else {
    T* cols = scratch<T>(0, C * k * k * HW);
    im2col(input, k, cols);
    out_m.noalias() = w_m * ConstMapMat<T>(cols, C * k * k, HW);
  }
  for (std::size_t o = 0; o < O; ++o) out_m.row(o).array() += bias[o];
  return out;
}

template <class T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out) {
  check_conv_shapes(input, weight);
  const std::size_t O = weight.dim(0), C = input.dim(0), k = weight.dim(2);
  const std::size_t H = input.dim(1), W = input.dim(2), HW = H * W;
  if (grad_out.shape() != Shape{O, H, W}) throw DimensionError("conv2d_backward: grad_out shape mismatch");

  Conv2dGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(weight.shape()), Tensor<T>({O})};
  ConstMapMat<T> go(grad_out.data().data(), O, HW);
  ConstMapMat<T> w_m(weight.data().data(), O, C * k * k);
  MapMat<T> gw(g.weight.data().data(), O, C * k * k);
  // Plain loop: Eigen's vectorized sum peels by pointer alignment, so its
  // rounding would depend on where the allocator put grad_out.
  for (std::size_t o = 0; o < O; ++o) {
    const T* row = grad_out.data().data() + o * HW;
    T s{0};
    for (std::size_t i = 0; i < HW; ++i) s += row[i];
    g.bias[o] = s;
  }

  if (k == 1) {
    ConstMapMat<T> x(input.data().data(), C, HW);
    gw.noalias() = go * x.transpose();
    MapMat<T>(g.input.data().data(), C, HW).noalias() = w_m.transpose() * go;
  } else {
    T* cols = scratch<T>(0, C * k * k * HW);
    im2col(input, k, cols);
    gw.noalias() = go * ConstMapMat<T>(cols, C * k * k, HW).transpose();
    T* gcols = scratch<T>(1, C * k * k * HW);
    MapMat<T>(gcols, C * k * k, HW).noalias() = w_m.transpose() * go;
    col2im(gcols, C, H, W, k, g.input.data().data());
  }
  return g;
}

template <class T>
Tensor<T> upsample(const Tensor<T>& input, std::size_t out_h, std::size_t out_w, UpsampleMode mode) {
  require_rank3(input.shape(), "upsample");
  const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
  if (out_h < H || out_w < W) {
    throw DimensionError("upsample: target " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                         " is smaller than input " + std::to_string(H) + "x" + std::to_string(W));
  }
  const AxisTaps ty = axis_taps(H, out_h, mode), tx = axis_taps(W, out_w, mode);
  Tensor<T> out({C, out_h, out_w});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < out_h; ++i) {
      const T wy = static_cast<T>(ty.frac[i]);
      for (std::size_t j = 0; j < out_w; ++j) {
        const T wx = static_cast<T>(tx.frac[j]);
        const T a = input.at(c, ty.lo[i], tx.lo[j]), b = input.at(c, ty.lo[i], tx.hi[j]);
        const T d = input.at(c, ty.hi[i], tx.lo[j]), e = input.at(c, ty.hi[i], tx.hi[j]);
        out.at(c, i, j) = (T{1} - wy) * ((T{1} - wx) * a + wx * b) + wy * ((T{1} - wx) * d + wx * e);
      }
    }
  }
  return out;
}

template <class T>
Tensor<T> upsample_backward(const Tensor<T>& grad_out, std::size_t in_h, std::size_t in_w, UpsampleMode mode) {
  require_rank3(grad_out.shape(), "upsample_backward");
  const std::size_t C = grad_out.dim(0), out_h = grad_out.dim(1), out_w = grad_out.dim(2);
  if (out_h < in_h || out_w < in_w) throw DimensionError("upsample_backward: input grid larger than output");
  const AxisTaps ty = axis_taps(in_h, out_h, mode), tx = axis_taps(in_w, out_w, mode);
  Tensor<T> g({C, in_h, in_w});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < out_h; ++i) {
      const T wy = static_cast<T>(ty.frac[i]);
      for (std::size_t j = 0; j < out_w; ++j) {
        const T wx = static_cast<T>(tx.frac[j]);
        const T v = grad_out.at(c, i, j);
        g.at(c, ty.lo[i], tx.lo[j]) += (T{1} - wy) * (T{1} - wx) * v;
        g.at(c, ty.lo[i], tx.hi[j]) += (T{1} - wy) * wx * v;
        g.at(c, ty.hi[i], tx.lo[j]) += wy * (T{1} - wx) * v;
        g.at(c, ty.hi[i], tx.hi[j]) += wy * wx * v;
      }
    }
  }
  return g;
}

template <class T>
Tensor<T> relu(const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  auto src = input.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > T{0} ? src[i] : T{0};
  return out;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out) {
  if (input.shape() != grad_out.shape()) throw DimensionError("relu_backward: shape mismatch");
  Tensor<T> g(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) g[i] = input[i] > T{0} ? grad_out[i] : T{0};
  return g;
}

namespace {

template <class T>
void check_bn(const Tensor<T>& input, const Tensor<T>& scale) {
  require_rank3(input.shape(), "batchnorm_channels");
  if (input.dim(1) * input.dim(2) < 2) {
    throw DimensionError("batchnorm_channels: need at least 2 spatial positions for a variance");
  }
  if (scale.size() != input.dim(0)) throw DimensionError("batchnorm_channels: scale length must equal channels");
}

// Per-channel mean and 1/sqrt(var + eps), accumulated in double.
template <class T>
std::pair<std::vector<double>, std::vector<double>> channel_stats(const Tensor<T>& input, T eps) {
  const std::size_t C = input.dim(0), N = input.dim(1) * input.dim(2);
  std::vector<double> mean(C), inv_std(C);
  for (std::size_t c = 0; c < C; ++c) {
    const T* x = input.data().data() + c * N;
    double s = 0;
    for (std::size_t i = 0; i < N; ++i) s += x[i];
    const double m = s / static_cast<double>(N);
    double v = 0;
    for (std::size_t i = 0; i < N; ++i) v += (x[i] - m) * (x[i] - m);
    v /= static_cast<double>(N);
    mean[c] = m;
    inv_std[c] = 1.0 / std::sqrt(v + static_cast<double>(eps));
  }
  return {std::move(mean), std::move(inv_std)};
}

}  // namespace

template <class T>
Tensor<T> batchnorm_channels(const Tensor<T>& input, const Tensor<T>& scale, const Tensor<T>& shift, T eps) {
  check_bn(input, scale);
  if (shift.size() != input.dim(0)) throw DimensionError("batchnorm_channels: shift length must equal channels");
  const std::size_t C = input.dim(0), N = input.dim(1) * input.dim(2);
  const auto [mean, inv_std] = channel_stats(input, eps);
  Tensor<T> out(input.shape());
  for (std::size_t c = 0; c < C; ++c) {
    const T* x = input.data().data() + c * N;
    T* y = out.data().data() + c * N;
    const double a = inv_std[c] * scale[c];
    const double b = shift[c] - mean[c] * a;
    for (std::size_t i = 0; i < N; ++i) y[i] = static_cast<T>(a * x[i] + b);
  }
  return out;
}

template <class T>
BatchNormGrads<T> batchnorm_channels_backward(const Tensor<T>& input, const Tensor<T>& scale, const Tensor<T>& grad_out,
                                              T eps) {
  check_bn(input, scale);
  if (grad_out.shape() != input.shape()) throw DimensionError("batchnorm_channels_backward: shape mismatch");
  const std::size_t C = input.dim(0), N = input.dim(1) * input.dim(2);
  const auto [mean, inv_std] = channel_stats(input, eps);
  BatchNormGrads<T> g{Tensor<T>(input.shape()), Tensor<T>({C}), Tensor<T>({C})};
  const double n = static_cast<double>(N);
  for (std::size_t c = 0; c < C; ++c) {
    const T* x = input.data().data() + c * N;
    const T* go = grad_out.data().data() + c * N;
    T* gx = g.input.data().data() + c * N;
    double sum_g = 0, sum_g_xhat = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double xhat = (x[i] - mean[c]) * inv_std[c];
      sum_g += go[i];
      sum_g_xhat += go[i] * xhat;
    }
    g.shift[c] = static_cast<T>(sum_g);
    g.scale[c] = static_cast<T>(sum_g_xhat);
    const double k = scale[c] * inv_std[c] / n;
    for (std::size_t i = 0; i < N; ++i) {
      const double xhat = (x[i] - mean[c]) * inv_std[c];
      gx[i] = static_cast<T>(k * (n * go[i] - sum_g - xhat * sum_g_xhat));
    }
  }
  return g;
}

template <class T>
T mse(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mse: shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  }
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return static_cast<T>(0.5 * s);
}

template <class T>
Tensor<T> mse_backward(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw DimensionError("mse_backward: shape mismatch");
  Tensor<T> g(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) g[i] = a[i] - b[i];
  return g;
}

#define UMRI_INSTANTIATE_OPS(T)                                                                            \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                         \
  template Conv2dGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> upsample(const Tensor<T>&, std::size_t, std::size_t, UpsampleMode);                   \
  template Tensor<T> upsample_backward(const Tensor<T>&, std::size_t, std::size_t, UpsampleMode);          \
  template Tensor<T> relu(const Tensor<T>&);                                                               \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> batchnorm_channels(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);          \
  template BatchNormGrads<T> batchnorm_channels_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                                         T);                                               \
  template T mse(const Tensor<T>&, const Tensor<T>&);                                                      \
  template Tensor<T> mse_backward(const Tensor<T>&, const Tensor<T>&);

UMRI_INSTANTIATE_OPS(float)
UMRI_INSTANTIATE_OPS(double)

#undef UMRI_INSTANTIATE_OPS

}  // namespace umri
