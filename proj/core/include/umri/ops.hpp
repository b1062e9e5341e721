// SPDX-License-Identifier: Apache-2.0
//
// Forward and backward kernels for the decoder op set. All spatial tensors
// are C x H x W. Backward functions take the upstream gradient of the
// forward output and return gradients of the forward inputs.
#pragma once

#include <cstddef>

#include "umri/tensor.hpp"

namespace umri {

enum class UpsampleMode { nearest, bilinear };

inline constexpr double kBatchNormEps = 1e-5;

template <class T>
struct Conv2dGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <class T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> scale;
  Tensor<T> shift;
};

/// Same-size convolution (zero padding k/2) with k in {1, 3}.
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

template <class T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out);

/// Upsamples to (out_h, out_w); nearest picks floor(i*H/H'), bilinear samples
/// with align-corners-false and edge clamping.
template <class T>
Tensor<T> upsample(const Tensor<T>& input, std::size_t out_h, std::size_t out_w, UpsampleMode mode);

/// Adjoint of upsample: scatters grad_out back onto an (in_h, in_w) grid.
template <class T>
Tensor<T> upsample_backward(const Tensor<T>& grad_out, std::size_t in_h, std::size_t in_w, UpsampleMode mode);

template <class T>
Tensor<T> relu(const Tensor<T>& input);

/// Subgradient at 0 is 0.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out);

/// Per-channel normalization over the H*W positions (batch of one, biased
/// variance, no running statistics).
template <class T>
Tensor<T> batchnorm_channels(const Tensor<T>& input, const Tensor<T>& scale, const Tensor<T>& shift,
                             T eps = static_cast<T>(kBatchNormEps));

template <class T>
BatchNormGrads<T> batchnorm_channels_backward(const Tensor<T>& input, const Tensor<T>& scale,
                                              const Tensor<T>& grad_out, T eps = static_cast<T>(kBatchNormEps));

/// Half the sum of squared differences.
template <class T>
T mse(const Tensor<T>& a, const Tensor<T>& b);

/// Gradient of mse with respect to a (a - b).
template <class T>
Tensor<T> mse_backward(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace umri
