// SPDX-License-Identifier: Apache-2.0
#include "umri/array_io.hpp"

#include <fstream>
#include <limits>

#include "binary_io.hpp"

namespace umri {
namespace {

constexpr char kMagic[5] = {'U', 'M', 'R', 'I', '\0'};
constexpr std::uint16_t kVersion = 1;

std::size_t components(DType t) { return t == DType::complex64 ? 2 : 1; }

void require_dtype(const NdArray& a, DType t, const char* what) {
  if (a.dtype != t) {
    throw FormatError(std::string(what) + ": expected a " + (t == DType::real32 ? "real" : "complex") + " array");
  }
}

template <class G>
std::vector<G> planes(const NdArray& a, DType t, const char* what) {
  require_dtype(a, t, what);
  if (a.shape.size() != 2 && a.shape.size() != 3) throw DimensionError(std::string(what) + ": need rank 2 or 3");
  const std::size_t n = a.shape.size() == 3 ? a.shape[0] : 1;
  const std::size_t H = a.shape[a.shape.size() - 2], W = a.shape.back();
  std::vector<G> out;
  for (std::size_t i = 0; i < n; ++i) {
    G g(H, W);
    for (std::size_t p = 0; p < H * W; ++p) {
      const std::size_t q = i * H * W + p;
      if constexpr (std::is_same_v<G, ComplexGrid>) {
        g[p] = cdouble(a.data[2 * q], a.data[2 * q + 1]);
      } else {
        g[p] = a.data[q];
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

std::size_t NdArray::elements() const { return shape_size(shape); }

void write_array(const std::filesystem::path& path, const NdArray& a) {
  if (a.shape.empty() || a.shape.size() > 4) throw DimensionError("write_array: rank must be 1..4");
  for (std::size_t e : a.shape) {
    if (e == 0 || e > std::numeric_limits<std::uint32_t>::max()) throw DimensionError("write_array: bad extent");
  }
  if (a.data.size() != a.elements() * components(a.dtype)) {
    throw DimensionError("write_array: data length does not match extents");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  detail::put_le<std::uint16_t>(os, kVersion);
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(a.dtype));
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(a.shape.size()));
  for (std::size_t e : a.shape) detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e));
  for (double v : a.data) detail::put_f32(os, static_cast<float>(v));
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

NdArray read_array(const std::filesystem::path& path) {
  const std::string p = path.string();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + p);
  char magic[5];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(p + ": not a UMRI array file (bad magic)");
  }
  const auto version = detail::get_le<std::uint16_t>(is, p);
  if (version != kVersion) throw FormatError(p + ": unsupported array version " + std::to_string(version));
  const auto code = detail::get_le<std::uint8_t>(is, p);
  if (code > 1) throw FormatError(p + ": unknown dtype code " + std::to_string(code));
  const auto rank = detail::get_le<std::uint8_t>(is, p);
  if (rank < 1 || rank > 4) throw FormatError(p + ": rank " + std::to_string(rank) + " outside 1..4");

  NdArray a;
  a.dtype = static_cast<DType>(code);
  std::uint64_t count = components(a.dtype);
  for (std::uint8_t i = 0; i < rank; ++i) {
    const auto e = detail::get_le<std::uint32_t>(is, p);
    if (e == 0) throw FormatError(p + ": zero extent");
    if (count > std::numeric_limits<std::uint64_t>::max() / 4 / e) throw FormatError(p + ": extent overflow");
    count *= e;
    a.shape.push_back(e);
  }
  const auto header = static_cast<std::uint64_t>(array_header_size(rank));
  const auto actual = static_cast<std::uint64_t>(std::filesystem::file_size(path));
  if (actual < header + 4 * count) throw FormatError(p + ": truncated file");
  if (actual > header + 4 * count) throw FormatError(p + ": trailing bytes after payload");
  a.data.resize(count);
  for (auto& v : a.data) v = detail::get_f32(is, p);
  return a;
}

NdArray to_array(const RealGrid& g) { return to_array(std::vector<RealGrid>{g}); }
NdArray to_array(const ComplexGrid& g) { return to_array(std::vector<ComplexGrid>{g}); }

NdArray to_array(const std::vector<RealGrid>& stack) {
  if (stack.empty()) throw DimensionError("to_array: empty stack");
  NdArray a;
  a.dtype = DType::real32;
  a.shape = stack.size() == 1 ? Shape{stack[0].height(), stack[0].width()}
                              : Shape{stack.size(), stack[0].height(), stack[0].width()};
  for (const auto& g : stack) {
    require_same_extents(g, stack[0], "to_array");
    a.data.insert(a.data.end(), g.values().begin(), g.values().end());
  }
  return a;
}

NdArray to_array(const std::vector<ComplexGrid>& stack) {
  if (stack.empty()) throw DimensionError("to_array: empty stack");
  NdArray a;
  a.dtype = DType::complex64;
  a.shape = {stack.size(), stack[0].height(), stack[0].width()};
  for (const auto& g : stack) {
    require_same_extents(g, stack[0], "to_array");
    for (const auto& v : g.values()) {
      a.data.push_back(v.real());
      a.data.push_back(v.imag());
    }
  }
  return a;
}

RealGrid real_grid(const NdArray& a) {
  auto s = planes<RealGrid>(a, DType::real32, "real_grid");
  if (s.size() != 1) throw DimensionError("real_grid: array holds several planes");
  return std::move(s.front());
}

ComplexGrid complex_grid(const NdArray& a) {
  auto s = planes<ComplexGrid>(a, DType::complex64, "complex_grid");
  if (s.size() != 1) throw DimensionError("complex_grid: array holds several planes");
  return std::move(s.front());
}

std::vector<RealGrid> real_stack(const NdArray& a) { return planes<RealGrid>(a, DType::real32, "real_stack"); }
std::vector<ComplexGrid> complex_stack(const NdArray& a) {
  return planes<ComplexGrid>(a, DType::complex64, "complex_stack");
}

NdArray mask_to_array(const Mask& m) {
  NdArray a;
  a.shape = {m.width()};
  a.data.assign(m.width(), 0.0);
  for (std::size_t c : m.sampled_columns()) a.data[c] = m.in_center(c) ? 2.0 : 1.0;
  return a;
}

Mask mask_from_array(const NdArray& a) {
  require_dtype(a, DType::real32, "mask_from_array");
  if (a.shape.size() != 1) throw DimensionError("mask_from_array: mask must be a vector");
  std::vector<std::size_t> cols;
  std::size_t begin = a.shape[0], end = a.shape[0];
  for (std::size_t c = 0; c < a.shape[0]; ++c) {
    const double v = a.data[c];
    if (v != 0.0 && v != 1.0 && v != 2.0) throw FormatError("mask_from_array: entries must be 0, 1 or 2");
    if (v == 0.0) continue;
    cols.push_back(c);
    if (v == 2.0) {
      if (begin == a.shape[0]) begin = c;
      else if (c != end) throw FormatError("mask_from_array: center band is not contiguous");
      end = c + 1;
    }
  }
  if (begin == a.shape[0]) begin = end = 0;
  return Mask(a.shape[0], std::move(cols), begin, end);
}

SensitivityMaps maps_from_array(const NdArray& a) {
  if (a.shape.size() != 3) throw DimensionError("maps_from_array: maps must be n_c x H x W");
  SensitivityMaps s;
  s.maps = complex_stack(a);
  s.support = BoolGrid(a.shape[1], a.shape[2], 0);
  for (const auto& m : s.maps) {
    for (std::size_t p = 0; p < m.size(); ++p) {
      if (m[p] != cdouble(0, 0)) s.support[p] = 1;
    }
  }
  return s;
}

}  // namespace umri
