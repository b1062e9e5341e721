// SPDX-License-Identifier: Apache-2.0
//
// The multi-coil Cartesian measurement model y_i = M F S_i x: centered
// orthonormal 2-D DFT, column under-sampling masks, sensitivity maps, coil
// combination and data consistency.
#pragma once

#include <cstddef>
#include <vector>

#include "umri/grid.hpp"
#include "umri/tensor.hpp"

namespace umri {

/// Centered, orthonormal 2-D DFT (quadrant shift before and after, scale
/// 1/sqrt(HW) in both directions). The impulse center is (H/2, W/2) rounded
/// down.
ComplexGrid fft2c(const ComplexGrid& img, bool inverse = false);
inline ComplexGrid ifft2c(const ComplexGrid& k) { return fft2c(k, true); }

/// Vertical-line sampling pattern. Column j is kept for every row iff it is in
/// sampled_columns. The fully sampled center band [center_begin, center_end)
/// is a contiguous sub-range of the sampled columns. An optional per-entry
/// exclusion grid removes individual samples from kept columns (used by the
/// sample-wise hold-out variant).
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t width, std::vector<std::size_t> sampled_columns, std::size_t center_begin, std::size_t center_end);

  static Mask full(std::size_t width);
  static Mask none(std::size_t width);

  std::size_t width() const noexcept { return width_; }
  const std::vector<std::size_t>& sampled_columns() const noexcept { return sampled_; }
  std::size_t center_begin() const noexcept { return center_begin_; }
  std::size_t center_end() const noexcept { return center_end_; }
  std::size_t center_size() const noexcept { return center_end_ - center_begin_; }

  bool column_sampled(std::size_t col) const noexcept { return col < width_ && column_flag_[col] != 0; }
  bool in_center(std::size_t col) const noexcept { return col >= center_begin_ && col < center_end_; }
  bool keeps(std::size_t row, std::size_t col) const noexcept {
    return column_sampled(col) && (excluded_.size() == 0 || excluded_(row, col) == 0);
  }

  /// width / number of sampled columns.
  double acceleration() const;

  /// Same mask with the given (non-center) columns dropped.
  Mask without_columns(const std::vector<std::size_t>& columns) const;
  /// Same columns with individual entries excluded (excluded(r, c) != 0).
  Mask with_excluded_entries(BoolGrid excluded) const;
  const BoolGrid& excluded_entries() const noexcept { return excluded_; }

  friend bool operator==(const Mask& a, const Mask& b) {
    return a.width_ == b.width_ && a.sampled_ == b.sampled_ && a.center_begin_ == b.center_begin_ &&
           a.center_end_ == b.center_end_ && a.excluded_ == b.excluded_;
  }

 private:
  std::size_t width_ = 0;
  std::vector<std::size_t> sampled_;
  std::vector<unsigned char> column_flag_;
  std::size_t center_begin_ = 0;
  std::size_t center_end_ = 0;
  BoolGrid excluded_;
};

/// Per-coil complex sensitivities, normalized so sum_i |S_i|^2 == 1 on the
/// support and 0 elsewhere.
struct SensitivityMaps {
  std::vector<ComplexGrid> maps;
  BoolGrid support;

  std::size_t coils() const noexcept { return maps.size(); }
  std::size_t height() const noexcept { return support.height(); }
  std::size_t width() const noexcept { return support.width(); }

  /// All-ones single-coil map with full support.
  static SensitivityMaps identity(std::size_t height, std::size_t width);
};

/// Rescales maps so sum_i |S_i|^2 == 1 where support is set; zeroes the rest.
void normalize_maps(SensitivityMaps& s);

/// Under-sampled multi-coil k-space; entries the mask drops are exactly 0.
struct CoilMeasurement {
  std::vector<ComplexGrid> kspace;
  Mask mask;

  std::size_t coils() const noexcept { return kspace.size(); }
  std::size_t height() const noexcept { return kspace.empty() ? 0 : kspace.front().height(); }
  std::size_t width() const noexcept { return kspace.empty() ? 0 : kspace.front().width(); }
};

ComplexGrid apply_mask(const ComplexGrid& k, const Mask& m);

/// y_i = M F (S_i x) for every coil.
CoilMeasurement forward_multicoil(const ComplexGrid& x, const SensitivityMaps& s, const Mask& m);

/// Adjoint of forward_multicoil: sum_i conj(S_i) F^H M y_i.
ComplexGrid adjoint_multicoil(const CoilMeasurement& y, const SensitivityMaps& s);

/// Pixelwise sqrt(sum_i |x_i|^2).
RealGrid rss(const std::vector<ComplexGrid>& coil_images);

/// Inverse transform of each coil, then RSS.
RealGrid zero_filled(const CoilMeasurement& y);

/// Per coil: replace the sampled columns of fft2c(recon_i) with y_i and
/// transform back.
std::vector<ComplexGrid> data_consistency(const std::vector<ComplexGrid>& recon_coils, const CoilMeasurement& y);

/// S_i x for every coil.
std::vector<ComplexGrid> coil_project(const ComplexGrid& x, const SensitivityMaps& s);

/// sum_i conj(S_i) x_i / sum_i |S_i|^2, zero where the maps vanish.
ComplexGrid combine_coils(const std::vector<ComplexGrid>& coil_images, const SensitivityMaps& s);

/// Sensitivity-map reconstruction path: coil-project, data consistency per
/// coil, then map-weighted recombination. Returns the consistent coil images.
std::vector<ComplexGrid> data_consistency_sensmap(const ComplexGrid& x, const SensitivityMaps& s,
                                                  const CoilMeasurement& y);

/// 2 x H x W tensor with the real part in channel 0 and imaginary in 1.
template <class T>
Tensor<T> complex_to_channels(const ComplexGrid& x);

/// Reads channels (2*index, 2*index+1) as a complex image.
template <class T>
ComplexGrid channels_to_complex(const Tensor<T>& t, std::size_t index = 0);

/// Stacks coils into 2*n_c x H x W; coil i occupies channels (2i, 2i+1).
template <class T>
Tensor<T> coils_to_channels(const std::vector<ComplexGrid>& coils);

template <class T>
std::vector<ComplexGrid> channels_to_coils(const Tensor<T>& t);

}  // namespace umri
