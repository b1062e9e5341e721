// SPDX-License-Identifier: Apache-2.0
//
// Un-trained convolutional generators. A decoder maps a fixed Gaussian input
// volume z through n_layers - 1 hidden layers (upsample, conv, ReLU,
// batch norm) and a final 1x1 convolution to an out_channels x H x W image
// stack. The two architectures differ only in upsampling mode and kernel size.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "umri/grid.hpp"
#include "umri/ops.hpp"
#include "umri/param_store.hpp"
#include "umri/tape.hpp"
#include "umri/tensor.hpp"

namespace umri {

enum class Arch { convdecoder, deepdecoder };
enum class SizeRule { geometric, linear };

std::string to_string(Arch a);
Arch parse_arch(const std::string& s);
std::string to_string(SizeRule r);
SizeRule parse_size_rule(const std::string& s);

struct DecoderConfig {
  Arch arch = Arch::convdecoder;
  std::size_t n_layers = 5;  // including the final 1x1 layer
  std::size_t channels = 64;
  std::size_t in_channels = 256;
  std::size_t in_height = 10;
  std::size_t in_width = 5;
  std::size_t out_height = 640;
  std::size_t out_width = 368;
  std::size_t out_channels = 2;
  std::uint64_t seed = 0;
  SizeRule size_rule = SizeRule::geometric;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;

  /// Canonical text describing everything that determines parameter shapes
  /// (the seed is excluded).
  std::string architecture_key() const;

  std::size_t kernel_size() const noexcept { return arch == Arch::convdecoder ? 3 : 1; }
  UpsampleMode upsample_mode() const noexcept {
    return arch == Arch::convdecoder ? UpsampleMode::nearest : UpsampleMode::bilinear;
  }

  /// Knee preset: 8 layers, 256 channels, input 256 x 10 x 5.
  static DecoderConfig knee(std::size_t out_h, std::size_t out_w, std::size_t out_channels);
  /// Brain preset: 5 layers, 64 channels.
  static DecoderConfig brain(std::size_t out_h, std::size_t out_w, std::size_t out_channels);
  /// 8x knee preset: 6 layers, 64 channels, 4 x 4 input.
  static DecoderConfig knee8x(std::size_t out_h, std::size_t out_w, std::size_t out_channels);
};

struct LayerSize {
  std::size_t height = 0;
  std::size_t width = 0;
  friend bool operator==(const LayerSize&, const LayerSize&) = default;
};

/// Spatial size after each hidden layer 1..n_layers-1. Geometric rule:
/// s_i = round(s_0 * (s_out / s_0)^(i / (n-1))); linear rule interpolates the
/// extents arithmetically. The last entry is always the output size.
std::vector<LayerSize> size_schedule(const DecoderConfig& config);

/// One layer of the built network.
struct LayerSpec {
  std::size_t index = 0;  // 1-based
  bool hidden = true;
  std::optional<UpsampleMode> upsample;
  LayerSize size;
  std::size_t kernel = 1;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  bool relu = false;
  bool batchnorm = false;
};

std::vector<LayerSpec> describe_layers(const DecoderConfig& config);

/// Closed-form parameter count for a config.
std::size_t parameter_count(const DecoderConfig& config);

template <class T>
struct DecoderState {
  DecoderConfig config;
  Tensor<T> z;
  ParamStore<T> params;

  template <class U>
  DecoderState<U> cast() const {
    return {config, z.template cast<U>(), params.template cast<U>()};
  }
};

/// Seeded construction: z ~ N(0, 1), conv weights ~ U(-1/sqrt(fan_in),
/// 1/sqrt(fan_in)), biases 0, batch-norm scale 1 and shift 0.
template <class T>
DecoderState<T> init_decoder(const DecoderConfig& config);

/// A recorded forward pass; layer_outputs[i] is the activation after layer
/// i+1 (hidden layers then the final layer).
template <class T>
struct ForwardPass {
  Tape<T> tape;
  typename Tape<T>::Var output = 0;
  std::vector<typename Tape<T>::Var> layer_outputs;

  const Tensor<T>& output_value() const { return tape.value(output); }
  void backward(const Tensor<T>& grad_output) { tape.backward(output, grad_output); }
};

/// Differentiable forward pass over state.params. Throws NumericError naming
/// the first layer whose activation is not finite.
template <class T>
ForwardPass<T> forward_pass(DecoderState<T>& state);

/// Forward pass without gradient bookkeeping.
template <class T>
Tensor<T> forward(const DecoderState<T>& state);

/// Writes z and all parameters ("UMRIW\0" container, 32-bit reals).
void save_params(const DecoderState<float>& state, const std::filesystem::path& path);

/// Loads a state saved for an identical architecture; the config's seed is
/// kept from the caller.
DecoderState<float> load_params(const DecoderConfig& config, const std::filesystem::path& path);

struct LayerProbe {
  std::size_t layer = 0;
  LayerSize size;
  RealGrid target;        // target area-averaged to the layer size
  RealGrid fitted;        // best linear combination of the layer's channels
  std::vector<double> coefficients;
  double residual_norm = 0.0;
};

/// Averages a grid onto a coarser (or equal) grid with exact area weights.
RealGrid area_downsample(const RealGrid& src, std::size_t out_h, std::size_t out_w);

/// Least-squares fit of the channel span to a target image.
LayerProbe probe_channels(const Tensor<float>& activation, const RealGrid& target);

/// For every hidden layer: downsample target to the layer size and fit it by
/// a linear combination of the layer's channels (pseudo-inverse solve, so
/// rank-deficient channel sets are handled).
std::vector<LayerProbe> layer_probe(const DecoderState<float>& state, const RealGrid& target);

}  // namespace umri
