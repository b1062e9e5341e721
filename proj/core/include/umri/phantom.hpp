// SPDX-License-Identifier: Apache-2.0
//
// Synthetic ground truth: textured ellipse phantoms, coil sensitivities,
// column masks and noisy multi-coil measurements.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "umri/grid.hpp"
#include "umri/mri.hpp"

namespace umri {

struct PhantomSpec {
  std::size_t height = 128;
  std::size_t width = 96;
  std::uint64_t seed = 1234;
  std::size_t n_ellipses = 10;
  double texture_amplitude = 0.08;
  double texture_scale = 2.0;  // correlation length in pixels

  void validate() const;
};

struct Phantom {
  ComplexGrid image;
  BoolGrid support;
};

/// Body ellipse with smoothly edged inner ellipses, band-limited Gaussian
/// texture inside the body and a smooth random phase. Magnitude lies in
/// [0, 1] and vanishes outside the support. Deterministic per seed.
Phantom make_phantom(const PhantomSpec& spec);

/// n_c Gaussian-profile coils centered on a ring outside the body, each with a
/// smooth phase ramp, normalized to sum_i |S_i|^2 == 1 on the support.
SensitivityMaps make_sens_maps(std::size_t n_coils, const BoolGrid& support);

enum class MaskKind { random, equispaced };

std::string to_string(MaskKind k);
MaskKind parse_mask_kind(const std::string& s);

struct MaskSpec {
  std::size_t width = 96;
  double acceleration = 4.0;
  MaskKind kind = MaskKind::random;
  double center_fraction = 0.08;
  std::uint64_t seed = 0;

  void validate() const;

  /// Center fraction 0.08 at 4x and 0.04 at 8x.
  static double default_center_fraction(double acceleration);
};

/// Fully sampled center band of round(center_fraction * width) columns plus
/// round(width / acceleration) - center further columns, drawn uniformly or
/// spread evenly over the non-center columns.
Mask make_mask(const MaskSpec& spec);

/// forward_multicoil plus complex Gaussian noise on sampled entries; each of
/// the real and imaginary parts has standard deviation
/// noise_sigma * ||y|| / sqrt(#sampled entries).
CoilMeasurement simulate(const ComplexGrid& x, const SensitivityMaps& maps, const Mask& mask, double noise_sigma,
                         std::uint64_t seed);

}  // namespace umri
