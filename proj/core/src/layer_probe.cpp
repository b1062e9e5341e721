// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>
#include <cmath>

#include "umri/decoder.hpp"

namespace umri {
namespace {

// Row-stochastic (out x in) matrix of exact overlap weights between the cells
// of an n_in grid and an n_out grid covering the same interval.
Eigen::MatrixXd area_weights(std::size_t n_in, std::size_t n_out) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_out), static_cast<Eigen::Index>(n_in));
  const double ratio = static_cast<double>(n_in) / static_cast<double>(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double lo = static_cast<double>(i) * ratio, hi = static_cast<double>(i + 1) * ratio;
    for (auto j = static_cast<std::size_t>(std::floor(lo)); j < n_in && static_cast<double>(j) < hi; ++j) {
      const double overlap = std::min(hi, static_cast<double>(j + 1)) - std::max(lo, static_cast<double>(j));
      if (overlap > 0) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = overlap / ratio;
    }
  }
  return m;
}

}  // namespace

RealGrid area_downsample(const RealGrid& src, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0 || out_h > src.height() || out_w > src.width()) {
    throw DimensionError("area_downsample: target must be non-empty and no larger than the source");
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> s(src.data().data(), static_cast<Eigen::Index>(src.height()),
                             static_cast<Eigen::Index>(src.width()));
  RowMat out = area_weights(src.height(), out_h) * s * area_weights(src.width(), out_w).transpose();
  return RealGrid(out_h, out_w, std::vector<double>(out.data(), out.data() + out.size()));
}

LayerProbe probe_channels(const Tensor<float>& activation, const RealGrid& target) {
  if (activation.rank() != 3 || activation.dim(1) != target.height() || activation.dim(2) != target.width()) {
    throw DimensionError("probe_channels: activation " + shape_string(activation.shape()) +
                         " does not match target grid");
  }
  const auto C = static_cast<Eigen::Index>(activation.dim(0));
  const auto N = static_cast<Eigen::Index>(target.size());
  Eigen::MatrixXd A(N, C);
  for (Eigen::Index c = 0; c < C; ++c) {
    for (Eigen::Index p = 0; p < N; ++p) A(p, c) = activation[static_cast<std::size_t>(c * N + p)];
  }
  Eigen::Map<const Eigen::VectorXd> b(target.data().data(), N);
  const Eigen::VectorXd coef = A.completeOrthogonalDecomposition().solve(b);
  const Eigen::VectorXd fit = A * coef;

  LayerProbe probe;
  probe.size = {target.height(), target.width()};
  probe.target = target;
  probe.fitted = RealGrid(target.height(), target.width(), std::vector<double>(fit.data(), fit.data() + N));
  probe.coefficients.assign(coef.data(), coef.data() + C);
  probe.residual_norm = (fit - b).norm();
  return probe;
}

std::vector<LayerProbe> layer_probe(const DecoderState<float>& state, const RealGrid& target) {
  if (target.height() != state.config.out_height || target.width() != state.config.out_width) {
    throw DimensionError("layer_probe: target size differs from decoder output size");
  }
  DecoderState<float> copy = state;
  ForwardPass<float> pass = forward_pass(copy);
  std::vector<LayerProbe> probes;
  // The final (linear) layer is excluded: every hidden layer is probed.
  for (std::size_t i = 0; i + 1 < pass.layer_outputs.size(); ++i) {
    const Tensor<float>& act = pass.tape.value(pass.layer_outputs[i]);
    LayerProbe p = probe_channels(act, area_downsample(target, act.dim(1), act.dim(2)));
    p.layer = i + 1;
    probes.push_back(std::move(p));
  }
  return probes;
}

}  // namespace umri
