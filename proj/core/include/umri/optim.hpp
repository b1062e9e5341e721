// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "umri/param_store.hpp"

namespace umri {

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments are kept per parameter in double.
template <class T>
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : opt_(options) {}

  /// Applies one update using the gradients stored on params. Throws
  /// NumericError on a non-finite gradient.
  void step(ParamStore<T>& params);

  std::size_t steps() const noexcept { return t_; }
  const AdamOptions& options() const noexcept { return opt_; }

  /// Per-layer scalar eta minimizing ||update - eta * grad|| for the most
  /// recent step, i.e. <update, grad> / <grad, grad> (0 when the layer's
  /// gradient vanished).
  const std::map<int, double>& last_layer_stepsizes() const noexcept { return layer_steps_; }

 private:
  AdamOptions opt_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
  std::map<int, double> layer_steps_;
};

/// Per-layer stepsize as a function of iteration; iterations past the end of a
/// layer's list reuse its last value.
class StepsizeSchedule {
 public:
  StepsizeSchedule() = default;
  explicit StepsizeSchedule(std::map<int, std::vector<double>> per_layer) : per_layer_(std::move(per_layer)) {}

  static StepsizeSchedule constant(int n_layers, double eta);

  void append(int layer, double eta) { per_layer_[layer].push_back(eta); }
  bool has_layer(int layer) const { return per_layer_.count(layer) != 0 && !per_layer_.at(layer).empty(); }
  double at(int layer, std::size_t iteration) const;
  const std::map<int, std::vector<double>>& layers() const noexcept { return per_layer_; }
  bool empty() const noexcept { return per_layer_.empty(); }

  /// Centered moving average over `window` iterations per layer.
  StepsizeSchedule smoothed(std::size_t window) const;

 private:
  std::map<int, std::vector<double>> per_layer_;
};

/// w <- w - eta_layer(iteration) * g, no momentum. Throws std::out_of_range if
/// a parameter's layer has no schedule entry.
template <class T>
void gd_layerwise_step(ParamStore<T>& params, const StepsizeSchedule& schedule, std::size_t iteration);

}  // namespace umri
