// SPDX-License-Identifier: Apache-2.0
#include "umri/fit.hpp"

namespace umri {

std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::single_coil:
      return "single_coil";
    case LossMode::coilwise:
      return "coilwise";
    case LossMode::sensmap:
      return "sensmap";
  }
  return "?";
}

LossMode parse_loss_mode(const std::string& s) {
  if (s == "single_coil") return LossMode::single_coil;
  if (s == "coilwise") return LossMode::coilwise;
  if (s == "sensmap") return LossMode::sensmap;
  throw std::invalid_argument("unknown loss mode '" + s + "' (expected single_coil, coilwise or sensmap)");
}

namespace {

// Residual M F c - y and its back-projection F^H M (M F c - y).
double residual_and_adjoint(const ComplexGrid& coil_image, const ComplexGrid& measured, const Mask& mask,
                            ComplexGrid* back) {
  const ComplexGrid r = apply_mask(fft2c(coil_image), mask);
  ComplexGrid diff(r.height(), r.width());
  double loss = 0;
  for (std::size_t p = 0; p < r.size(); ++p) {
    diff[p] = r[p] - measured[p];
    loss += std::norm(diff[p]);
  }
  if (back != nullptr) *back = ifft2c(apply_mask(diff, mask));
  return 0.5 * loss;
}

template <class T>
void write_channels(Tensor<T>& grad, std::size_t index, const ComplexGrid& g) {
  const std::size_t n = g.size();
  T* re = grad.data().data() + 2 * index * n;
  T* im = re + n;
  for (std::size_t p = 0; p < n; ++p) {
    re[p] = static_cast<T>(g[p].real());
    im[p] = static_cast<T>(g[p].imag());
  }
}

}  // namespace

template <class T>
double kspace_loss(LossMode mode, const Tensor<T>& output, const CoilMeasurement& y, const SensitivityMaps* maps,
                   Tensor<T>* grad) {
  if (output.rank() != 3) throw DimensionError("kspace_loss: decoder output must be C x H x W");
  if (y.coils() == 0) throw DimensionError("kspace_loss: measurement has no coils");
  if (output.dim(1) != y.height() || output.dim(2) != y.width()) {
    throw DimensionError("kspace_loss: decoder output size differs from k-space size");
  }
  if (grad != nullptr) *grad = Tensor<T>(output.shape());

  double loss = 0;
  ComplexGrid back;
  if (mode == LossMode::coilwise || mode == LossMode::single_coil) {
    if (mode == LossMode::single_coil && y.coils() != 1) {
      throw DimensionError("kspace_loss: single_coil mode needs exactly one coil, got " + std::to_string(y.coils()));
    }
    if (output.dim(0) != 2 * y.coils()) {
      throw DimensionError("kspace_loss: " + std::to_string(output.dim(0)) + " output channels for " +
                           std::to_string(y.coils()) + " coils (need 2 per coil)");
    }
    for (std::size_t i = 0; i < y.coils(); ++i) {
      loss += residual_and_adjoint(channels_to_complex(output, i), y.kspace[i], y.mask, grad ? &back : nullptr);
      if (grad != nullptr) write_channels(*grad, i, back);
    }
    return loss;
  }

  if (maps == nullptr) throw std::invalid_argument("kspace_loss: sensmap mode needs sensitivity maps");
  if (output.dim(0) != 2) throw DimensionError("kspace_loss: sensmap mode needs 2 output channels");
  if (maps->coils() != y.coils()) {
    throw DimensionError("kspace_loss: " + std::to_string(maps->coils()) + " maps for " + std::to_string(y.coils()) +
                         " coils");
  }
  const ComplexGrid image = channels_to_complex(output, 0);
  ComplexGrid g_img(image.height(), image.width());
  const auto coils = coil_project(image, *maps);
  for (std::size_t i = 0; i < y.coils(); ++i) {
    loss += residual_and_adjoint(coils[i], y.kspace[i], y.mask, grad ? &back : nullptr);
    if (grad != nullptr) {
      const auto& s = maps->maps[i];
      for (std::size_t p = 0; p < g_img.size(); ++p) g_img[p] += std::conj(s[p]) * back[p];
    }
  }
  if (grad != nullptr) write_channels(*grad, 0, g_img);
  return loss;
}

template <class T>
double decoder_loss(DecoderState<T>& state, LossMode mode, const CoilMeasurement& y, const SensitivityMaps* maps,
                    bool with_grad) {
  ForwardPass<T> pass = forward_pass(state);
  Tensor<T> grad;
  const double loss = kspace_loss(mode, pass.output_value(), y, maps, with_grad ? &grad : nullptr);
  if (with_grad) pass.backward(grad);
  return loss;
}

template double kspace_loss<float>(LossMode, const Tensor<float>&, const CoilMeasurement&, const SensitivityMaps*,
                                   Tensor<float>*);
template double kspace_loss<double>(LossMode, const Tensor<double>&, const CoilMeasurement&, const SensitivityMaps*,
                                    Tensor<double>*);
template double decoder_loss<float>(DecoderState<float>&, LossMode, const CoilMeasurement&, const SensitivityMaps*,
                                    bool);
template double decoder_loss<double>(DecoderState<double>&, LossMode, const CoilMeasurement&, const SensitivityMaps*,
                                     bool);

}  // namespace umri
