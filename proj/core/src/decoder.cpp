// SPDX-License-Identifier: Apache-2.0
#include "umri/decoder.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace umri {

std::string to_string(Arch a) { return a == Arch::convdecoder ? "convdecoder" : "deepdecoder"; }

Arch parse_arch(const std::string& s) {
  if (s == "convdecoder") return Arch::convdecoder;
  if (s == "deepdecoder") return Arch::deepdecoder;
  throw std::invalid_argument("unknown architecture '" + s + "' (expected convdecoder or deepdecoder)");
}

std::string to_string(SizeRule r) { return r == SizeRule::geometric ? "geometric" : "linear"; }

SizeRule parse_size_rule(const std::string& s) {
  if (s == "geometric") return SizeRule::geometric;
  if (s == "linear") return SizeRule::linear;
  throw std::invalid_argument("unknown size rule '" + s + "' (expected geometric or linear)");
}

void DecoderConfig::validate() const {
  if (n_layers < 2) throw std::invalid_argument("decoder config: n_layers must be at least 2");
  if (channels == 0 || in_channels == 0) throw std::invalid_argument("decoder config: channel counts must be positive");
  if (in_height == 0 || in_width == 0) throw std::invalid_argument("decoder config: input extents must be positive");
  if (in_height > out_height || in_width > out_width) {
    throw std::invalid_argument("decoder config: input extents exceed output extents");
  }
  if (out_channels == 0 || out_channels % 2 != 0) {
    throw std::invalid_argument("decoder config: out_channels must be a positive even number");
  }
}

std::string DecoderConfig::architecture_key() const {
  std::ostringstream os;
  os << "arch=" << to_string(arch) << ";n_layers=" << n_layers << ";channels=" << channels
     << ";input=" << in_channels << "x" << in_height << "x" << in_width << ";output=" << out_channels << "x"
     << out_height << "x" << out_width << ";size_rule=" << to_string(size_rule);
  return os.str();
}

DecoderConfig DecoderConfig::knee(std::size_t out_h, std::size_t out_w, std::size_t out_channels) {
  DecoderConfig c;
  c.n_layers = 8;
  c.channels = 256;
  c.out_height = out_h;
  c.out_width = out_w;
  c.out_channels = out_channels;
  return c;
}

DecoderConfig DecoderConfig::brain(std::size_t out_h, std::size_t out_w, std::size_t out_channels) {
  DecoderConfig c;
  c.n_layers = 5;
  c.channels = 64;
  c.out_height = out_h;
  c.out_width = out_w;
  c.out_channels = out_channels;
  return c;
}

DecoderConfig DecoderConfig::knee8x(std::size_t out_h, std::size_t out_w, std::size_t out_channels) {
  DecoderConfig c;
  c.n_layers = 6;
  c.channels = 64;
  c.in_height = 4;
  c.in_width = 4;
  c.out_height = out_h;
  c.out_width = out_w;
  c.out_channels = out_channels;
  return c;
}

std::vector<LayerSize> size_schedule(const DecoderConfig& config) {
  if (config.n_layers < 2) throw std::invalid_argument("size_schedule: n_layers must be at least 2");
  const std::size_t steps = config.n_layers - 1;
  auto interp = [&](std::size_t s0, std::size_t s_out, std::size_t i) -> std::size_t {
    if (i == steps) return s_out;
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    double v = config.size_rule == SizeRule::geometric
                   ? static_cast<double>(s0) * std::pow(static_cast<double>(s_out) / static_cast<double>(s0), t)
                   : static_cast<double>(s0) + (static_cast<double>(s_out) - static_cast<double>(s0)) * t;
    return static_cast<std::size_t>(std::llround(v));
  };
  std::vector<LayerSize> sizes;
  LayerSize prev{config.in_height, config.in_width};
  for (std::size_t i = 1; i <= steps; ++i) {
    LayerSize s{interp(config.in_height, config.out_height, i), interp(config.in_width, config.out_width, i)};
    s.height = std::max(s.height, prev.height);
    s.width = std::max(s.width, prev.width);
    sizes.push_back(s);
    prev = s;
  }
  return sizes;
}

std::vector<LayerSpec> describe_layers(const DecoderConfig& config) {
  config.validate();
  const auto sizes = size_schedule(config);
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    LayerSpec l;
    l.index = i + 1;
    l.hidden = true;
    l.upsample = config.upsample_mode();
    l.size = sizes[i];
    l.kernel = config.kernel_size();
    l.in_channels = i == 0 ? config.in_channels : config.channels;
    l.out_channels = config.channels;
    l.relu = true;
    l.batchnorm = true;
    layers.push_back(l);
  }
  LayerSpec last;
  last.index = config.n_layers;
  last.hidden = false;
  last.size = {config.out_height, config.out_width};
  last.kernel = 1;
  last.in_channels = config.channels;
  last.out_channels = config.out_channels;
  layers.push_back(last);
  return layers;
}

std::size_t parameter_count(const DecoderConfig& config) {
  std::size_t n = 0;
  for (const auto& l : describe_layers(config)) {
    n += l.out_channels * l.in_channels * l.kernel * l.kernel + l.out_channels;
    if (l.batchnorm) n += 2 * l.out_channels;
  }
  return n;
}

namespace {

std::string param_name(std::size_t layer, const char* part) { return "layer" + std::to_string(layer) + "." + part; }

}  // namespace

template <class T>
DecoderState<T> init_decoder(const DecoderConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  DecoderState<T> state;
  state.config = config;

  std::normal_distribution<double> gauss(0.0, 1.0);
  state.z = Tensor<T>({config.in_channels, config.in_height, config.in_width});
  for (auto& v : state.z.data()) v = static_cast<T>(gauss(rng));

  for (const auto& l : describe_layers(config)) {
    const std::size_t fan_in = l.in_channels * l.kernel * l.kernel;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> uni(-bound, bound);
    Tensor<T> w({l.out_channels, l.in_channels, l.kernel, l.kernel});
    for (auto& v : w.data()) v = static_cast<T>(uni(rng));
    const int layer = static_cast<int>(l.index);
    state.params.add(param_name(l.index, "conv.weight"), layer, std::move(w));
    state.params.add(param_name(l.index, "conv.bias"), layer, Tensor<T>({l.out_channels}));
    if (l.batchnorm) {
      state.params.add(param_name(l.index, "bn.scale"), layer, Tensor<T>({l.out_channels}, T{1}));
      state.params.add(param_name(l.index, "bn.shift"), layer, Tensor<T>({l.out_channels}));
    }
  }
  return state;
}

namespace {

template <class T>
void check_finite(const Tensor<T>& t, std::size_t layer) {
  if (!t.all_finite()) throw NumericError("decoder: non-finite activation in layer " + std::to_string(layer));
}

// Builds the graph on a tape; param(name) yields the tape variable of a
// parameter.
template <class T, class ParamFn>
ForwardPass<T> build(const DecoderConfig& config, const Tensor<T>& z, ParamFn&& param) {
  ForwardPass<T> pass;
  auto& tape = pass.tape;
  auto x = tape.constant(z);
  for (const auto& l : describe_layers(config)) {
    if (l.upsample) x = tape.upsample(x, l.size.height, l.size.width, *l.upsample);
    x = tape.conv2d(x, param(tape, param_name(l.index, "conv.weight")), param(tape, param_name(l.index, "conv.bias")));
    if (l.relu) x = tape.relu(x);
    if (l.batchnorm) {
      x = tape.batchnorm(x, param(tape, param_name(l.index, "bn.scale")), param(tape, param_name(l.index, "bn.shift")));
    }
    check_finite(tape.value(x), l.index);
    pass.layer_outputs.push_back(x);
  }
  pass.output = x;
  return pass;
}

}  // namespace

template <class T>
ForwardPass<T> forward_pass(DecoderState<T>& state) {
  return build<T>(state.config, state.z,
                  [&](Tape<T>& tape, const std::string& name) { return tape.parameter(state.params.get(name)); });
}

template <class T>
Tensor<T> forward(const DecoderState<T>& state) {
  ForwardPass<T> pass = build<T>(state.config, state.z, [&](Tape<T>& tape, const std::string& name) {
    return tape.constant(state.params.get(name));
  });
  return pass.output_value();
}

template DecoderState<float> init_decoder<float>(const DecoderConfig&);
template DecoderState<double> init_decoder<double>(const DecoderConfig&);
template ForwardPass<float> forward_pass<float>(DecoderState<float>&);
template ForwardPass<double> forward_pass<double>(DecoderState<double>&);
template Tensor<float> forward<float>(const DecoderState<float>&);
template Tensor<double> forward<double>(const DecoderState<double>&);

}  // namespace umri
