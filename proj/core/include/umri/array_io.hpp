// SPDX-License-Identifier: Apache-2.0
//
// Portable array files:
//   "UMRI\0"   5 bytes
//   version    u16 (1)
//   dtype      u8  (0 real32, 1 complex64 stored as (re, im) float pairs)
//   rank       u8  (1..4)
//   extents    rank x u32
//   payload    row-major float32, little-endian
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "umri/grid.hpp"
#include "umri/mri.hpp"
#include "umri/tensor.hpp"

namespace umri {

enum class DType : std::uint8_t { real32 = 0, complex64 = 1 };

struct NdArray {
  DType dtype = DType::real32;
  Shape shape;
  std::vector<double> data;  // complex values interleaved (re, im)

  std::size_t elements() const;
  friend bool operator==(const NdArray&, const NdArray&) = default;
};

constexpr std::size_t kArrayHeaderFixedBytes = 5 + 2 + 1 + 1;

/// Header bytes for an array of the given rank.
inline std::size_t array_header_size(std::size_t rank) { return kArrayHeaderFixedBytes + 4 * rank; }

void write_array(const std::filesystem::path& path, const NdArray& a);
NdArray read_array(const std::filesystem::path& path);

NdArray to_array(const RealGrid& g);
NdArray to_array(const ComplexGrid& g);
NdArray to_array(const std::vector<RealGrid>& stack);
NdArray to_array(const std::vector<ComplexGrid>& stack);

RealGrid real_grid(const NdArray& a);
ComplexGrid complex_grid(const NdArray& a);
/// Rank-3 arrays as a list of planes; rank-2 arrays as a single plane.
std::vector<RealGrid> real_stack(const NdArray& a);
std::vector<ComplexGrid> complex_stack(const NdArray& a);

/// Mask as a real vector of length W: 0 unsampled, 1 sampled, 2 center band.
NdArray mask_to_array(const Mask& m);
Mask mask_from_array(const NdArray& a);

/// Maps as n_c x H x W complex; the support is where any map is nonzero.
SensitivityMaps maps_from_array(const NdArray& a);

}  // namespace umri
