// SPDX-License-Identifier: Apache-2.0
#include "umri/mri.hpp"

#include <algorithm>
#include <cmath>

namespace umri {

Mask::Mask(std::size_t width, std::vector<std::size_t> sampled_columns, std::size_t center_begin,
           std::size_t center_end)
    : width_(width), sampled_(std::move(sampled_columns)), column_flag_(width, 0), center_begin_(center_begin),
      center_end_(center_end) {
  std::sort(sampled_.begin(), sampled_.end());
  sampled_.erase(std::unique(sampled_.begin(), sampled_.end()), sampled_.end());
  for (std::size_t c : sampled_) {
    if (c >= width_) throw std::invalid_argument("mask: column " + std::to_string(c) + " outside width");
    column_flag_[c] = 1;
  }
  if (center_begin_ > center_end_ || center_end_ > width_) throw std::invalid_argument("mask: invalid center band");
  for (std::size_t c = center_begin_; c < center_end_; ++c) {
    if (!column_flag_[c]) throw std::invalid_argument("mask: center band column " + std::to_string(c) + " not sampled");
  }
}

Mask Mask::full(std::size_t width) {
  std::vector<std::size_t> cols(width);
  for (std::size_t i = 0; i < width; ++i) cols[i] = i;
  return Mask(width, std::move(cols), 0, width);
}

Mask Mask::none(std::size_t width) { return Mask(width, {}, 0, 0); }

double Mask::acceleration() const {
  if (sampled_.empty()) throw std::domain_error("mask samples no columns");
  return static_cast<double>(width_) / static_cast<double>(sampled_.size());
}

Mask Mask::without_columns(const std::vector<std::size_t>& columns) const {
  std::vector<std::size_t> keep;
  for (std::size_t c : sampled_) {
    if (std::find(columns.begin(), columns.end(), c) == columns.end()) keep.push_back(c);
  }
  std::size_t cb = center_begin_, ce = center_end_;
  for (std::size_t c : columns) {
    if (in_center(c)) {
      // Dropping a center column collapses the protected band.
      cb = ce = 0;
      break;
    }
  }
  Mask m(width_, std::move(keep), cb, ce);
  m.excluded_ = excluded_;
  return m;
}

Mask Mask::with_excluded_entries(BoolGrid excluded) const {
  if (excluded.width() != width_) throw DimensionError("mask: exclusion grid width mismatch");
  Mask m = *this;
  m.excluded_ = std::move(excluded);
  return m;
}

SensitivityMaps SensitivityMaps::identity(std::size_t height, std::size_t width) {
  SensitivityMaps s;
  s.maps.emplace_back(height, width, cdouble(1.0, 0.0));
  s.support = BoolGrid(height, width, 1);
  return s;
}

void normalize_maps(SensitivityMaps& s) {
  for (std::size_t p = 0; p < s.support.size(); ++p) {
    double total = 0;
    for (const auto& m : s.maps) total += std::norm(m[p]);
    const bool on = s.support[p] != 0 && total > 0;
    const double scale = on ? 1.0 / std::sqrt(total) : 0.0;
    for (auto& m : s.maps) m[p] *= scale;
  }
}

ComplexGrid apply_mask(const ComplexGrid& k, const Mask& m) {
  if (k.width() != m.width()) throw DimensionError("apply_mask: k-space width differs from mask width");
  if (m.excluded_entries().size() != 0 && m.excluded_entries().height() != k.height()) {
    throw DimensionError("apply_mask: exclusion grid height mismatch");
  }
  ComplexGrid out(k.height(), k.width());
  for (std::size_t r = 0; r < k.height(); ++r) {
    for (std::size_t c : m.sampled_columns()) {
      if (m.keeps(r, c)) out(r, c) = k(r, c);
    }
  }
  return out;
}

namespace {

void check_maps(const ComplexGrid& x, const SensitivityMaps& s, const char* what) {
  if (s.maps.empty()) throw DimensionError(std::string(what) + ": no sensitivity maps");
  for (const auto& m : s.maps) require_same_extents(x, m, what);
}

void check_measurement(const CoilMeasurement& y, const char* what) {
  if (y.kspace.empty()) throw DimensionError(std::string(what) + ": measurement has no coils");
  for (const auto& k : y.kspace) {
    require_same_extents(y.kspace.front(), k, what);
    if (k.width() != y.mask.width()) throw DimensionError(std::string(what) + ": mask width mismatch");
  }
}

}  // namespace

std::vector<ComplexGrid> coil_project(const ComplexGrid& x, const SensitivityMaps& s) {
  check_maps(x, s, "coil_project");
  std::vector<ComplexGrid> coils;
  coils.reserve(s.coils());
  for (const auto& m : s.maps) {
    ComplexGrid c(x.height(), x.width());
    for (std::size_t p = 0; p < x.size(); ++p) c[p] = m[p] * x[p];
    coils.push_back(std::move(c));
  }
  return coils;
}

CoilMeasurement forward_multicoil(const ComplexGrid& x, const SensitivityMaps& s, const Mask& m) {
  CoilMeasurement y{{}, m};
  for (auto& c : coil_project(x, s)) y.kspace.push_back(apply_mask(fft2c(c), m));
  return y;
}

ComplexGrid adjoint_multicoil(const CoilMeasurement& y, const SensitivityMaps& s) {
  check_measurement(y, "adjoint_multicoil");
  if (y.coils() != s.coils()) throw DimensionError("adjoint_multicoil: coil count differs from map count");
  ComplexGrid out(y.height(), y.width());
  for (std::size_t i = 0; i < y.coils(); ++i) {
    require_same_extents(out, s.maps[i], "adjoint_multicoil");
    const ComplexGrid img = ifft2c(apply_mask(y.kspace[i], y.mask));
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += std::conj(s.maps[i][p]) * img[p];
  }
  return out;
}

RealGrid rss(const std::vector<ComplexGrid>& coil_images) {
  if (coil_images.empty()) throw std::invalid_argument("rss: no coil images");
  RealGrid out(coil_images.front().height(), coil_images.front().width());
  for (const auto& c : coil_images) {
    require_same_extents(coil_images.front(), c, "rss");
    for (std::size_t p = 0; p < c.size(); ++p) out[p] += std::norm(c[p]);
  }
  for (auto& v : out.values()) v = std::sqrt(v);
  return out;
}

RealGrid zero_filled(const CoilMeasurement& y) {
  check_measurement(y, "zero_filled");
  std::vector<ComplexGrid> coils;
  coils.reserve(y.coils());
  for (const auto& k : y.kspace) coils.push_back(ifft2c(k));
  return rss(coils);
}

std::vector<ComplexGrid> data_consistency(const std::vector<ComplexGrid>& recon_coils, const CoilMeasurement& y) {
  check_measurement(y, "data_consistency");
  if (recon_coils.size() != y.coils()) {
    throw DimensionError("data_consistency: " + std::to_string(recon_coils.size()) + " reconstructed coils vs " +
                         std::to_string(y.coils()) + " measured");
  }
  std::vector<ComplexGrid> out;
  out.reserve(recon_coils.size());
  for (std::size_t i = 0; i < recon_coils.size(); ++i) {
    require_same_extents(recon_coils[i], y.kspace[i], "data_consistency");
    ComplexGrid k = fft2c(recon_coils[i]);
    for (std::size_t r = 0; r < k.height(); ++r) {
      for (std::size_t c : y.mask.sampled_columns()) {
        if (y.mask.keeps(r, c)) k(r, c) = y.kspace[i](r, c);
      }
    }
    out.push_back(ifft2c(k));
  }
  return out;
}

ComplexGrid combine_coils(const std::vector<ComplexGrid>& coil_images, const SensitivityMaps& s) {
  if (coil_images.size() != s.coils()) throw DimensionError("combine_coils: coil count differs from map count");
  if (coil_images.empty()) throw DimensionError("combine_coils: no coils");
  ComplexGrid out(coil_images.front().height(), coil_images.front().width());
  RealGrid weight(out.height(), out.width());
  for (std::size_t i = 0; i < coil_images.size(); ++i) {
    require_same_extents(out, coil_images[i], "combine_coils");
    require_same_extents(out, s.maps[i], "combine_coils");
    for (std::size_t p = 0; p < out.size(); ++p) {
      out[p] += std::conj(s.maps[i][p]) * coil_images[i][p];
      weight[p] += std::norm(s.maps[i][p]);
    }
  }
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = weight[p] > 0 ? out[p] / weight[p] : cdouble{};
  return out;
}

std::vector<ComplexGrid> data_consistency_sensmap(const ComplexGrid& x, const SensitivityMaps& s,
                                                  const CoilMeasurement& y) {
  return data_consistency(coil_project(x, s), y);
}

template <class T>
Tensor<T> complex_to_channels(const ComplexGrid& x) {
  Tensor<T> t({2, x.height(), x.width()});
  const std::size_t n = x.size();
  for (std::size_t p = 0; p < n; ++p) {
    t[p] = static_cast<T>(x[p].real());
    t[n + p] = static_cast<T>(x[p].imag());
  }
  return t;
}

template <class T>
ComplexGrid channels_to_complex(const Tensor<T>& t, std::size_t index) {
  if (t.rank() != 3 || t.dim(0) % 2 != 0) {
    throw DimensionError("channels_to_complex: need an even channel count, got " + shape_string(t.shape()));
  }
  if (2 * index + 1 >= t.dim(0)) throw DimensionError("channels_to_complex: coil index out of range");
  const std::size_t H = t.dim(1), W = t.dim(2), n = H * W;
  ComplexGrid x(H, W);
  const T* re = t.data().data() + 2 * index * n;
  const T* im = re + n;
  for (std::size_t p = 0; p < n; ++p) x[p] = cdouble(re[p], im[p]);
  return x;
}

template <class T>
Tensor<T> coils_to_channels(const std::vector<ComplexGrid>& coils) {
  if (coils.empty()) throw DimensionError("coils_to_channels: no coils");
  const std::size_t H = coils.front().height(), W = coils.front().width(), n = H * W;
  Tensor<T> t({2 * coils.size(), H, W});
  for (std::size_t i = 0; i < coils.size(); ++i) {
    require_same_extents(coils.front(), coils[i], "coils_to_channels");
    T* re = t.data().data() + 2 * i * n;
    T* im = re + n;
    for (std::size_t p = 0; p < n; ++p) {
      re[p] = static_cast<T>(coils[i][p].real());
      im[p] = static_cast<T>(coils[i][p].imag());
    }
  }
  return t;
}

template <class T>
std::vector<ComplexGrid> channels_to_coils(const Tensor<T>& t) {
  if (t.rank() != 3 || t.dim(0) % 2 != 0) {
    throw DimensionError("channels_to_coils: need an even channel count, got " + shape_string(t.shape()));
  }
  std::vector<ComplexGrid> coils;
  for (std::size_t i = 0; i < t.dim(0) / 2; ++i) coils.push_back(channels_to_complex(t, i));
  return coils;
}

template Tensor<float> complex_to_channels<float>(const ComplexGrid&);
template Tensor<double> complex_to_channels<double>(const ComplexGrid&);
template ComplexGrid channels_to_complex<float>(const Tensor<float>&, std::size_t);
template ComplexGrid channels_to_complex<double>(const Tensor<double>&, std::size_t);
template Tensor<float> coils_to_channels<float>(const std::vector<ComplexGrid>&);
template Tensor<double> coils_to_channels<double>(const std::vector<ComplexGrid>&);
template std::vector<ComplexGrid> channels_to_coils<float>(const Tensor<float>&);
template std::vector<ComplexGrid> channels_to_coils<double>(const Tensor<double>&);

}  // namespace umri
