// SPDX-License-Identifier: Apache-2.0
#include "umri/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace umri {

template <class T>
void Adam<T>::step(ParamStore<T>& params) {
  if (m_.empty()) {
    for (const auto& e : params) {
      m_.emplace_back(e.tensor.size(), 0.0);
      v_.emplace_back(e.tensor.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw DimensionError("Adam: parameter set changed between steps");

  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  std::map<int, double> upd_dot, grad_sq;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& e = params.entries()[k];
    auto w = e.tensor.data();
    auto g = e.tensor.grad();
    if (g.size() != w.size()) throw DimensionError("Adam: parameter " + e.name + " has no gradient buffer");
    auto& m = m_[k];
    auto& v = v_[k];
    if (m.size() != w.size()) throw DimensionError("Adam: parameter " + e.name + " changed shape");
    double ug = 0, gs = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      if (!std::isfinite(gi)) throw NumericError("Adam: non-finite gradient in " + e.name);
      m[i] = opt_.beta1 * m[i] + (1 - opt_.beta1) * gi;
      v[i] = opt_.beta2 * v[i] + (1 - opt_.beta2) * gi * gi;
      const double delta = opt_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opt_.eps);
      w[i] = static_cast<T>(w[i] - delta);
      ug += delta * gi;
      gs += gi * gi;
    }
    upd_dot[e.layer] += ug;
    grad_sq[e.layer] += gs;
  }
  layer_steps_.clear();
  for (const auto& [layer, gs] : grad_sq) {
    layer_steps_[layer] = gs > 0 ? upd_dot[layer] / gs : 0.0;
  }
}

StepsizeSchedule StepsizeSchedule::constant(int n_layers, double eta) {
  StepsizeSchedule s;
  for (int l = 1; l <= n_layers; ++l) s.per_layer_[l] = {eta};
  return s;
}

double StepsizeSchedule::at(int layer, std::size_t iteration) const {
  auto it = per_layer_.find(layer);
  if (it == per_layer_.end() || it->second.empty()) {
    throw std::out_of_range("stepsize schedule has no entry for layer " + std::to_string(layer));
  }
  const auto& s = it->second;
  return s[std::min(iteration, s.size() - 1)];
}

StepsizeSchedule StepsizeSchedule::smoothed(std::size_t window) const {
  if (window <= 1) return *this;
  StepsizeSchedule out;
  const std::size_t half = window / 2;
  for (const auto& [layer, s] : per_layer_) {
    std::vector<double> sm(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t lo = i >= half ? i - half : 0, hi = std::min(s.size(), i + half + 1);
      double acc = 0;
      for (std::size_t j = lo; j < hi; ++j) acc += s[j];
      sm[i] = acc / static_cast<double>(hi - lo);
    }
    out.per_layer_[layer] = std::move(sm);
  }
  return out;
}

template <class T>
void gd_layerwise_step(ParamStore<T>& params, const StepsizeSchedule& schedule, std::size_t iteration) {
  for (const auto& e : params) {
    if (!schedule.has_layer(e.layer)) {
      throw std::out_of_range("stepsize schedule has no entry for layer " + std::to_string(e.layer));
    }
  }
  for (auto& e : params) {
    const double eta = schedule.at(e.layer, iteration);
    auto w = e.tensor.data();
    auto g = e.tensor.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!std::isfinite(g[i])) throw NumericError("gd_layerwise_step: non-finite gradient in " + e.name);
      w[i] = static_cast<T>(w[i] - eta * g[i]);
    }
  }
}

template class Adam<float>;
template class Adam<double>;
template void gd_layerwise_step<float>(ParamStore<float>&, const StepsizeSchedule&, std::size_t);
template void gd_layerwise_step<double>(ParamStore<double>&, const StepsizeSchedule&, std::size_t);

}  // namespace umri
