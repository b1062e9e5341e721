// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "umri/tensor.hpp"

namespace umri {

using cdouble = std::complex<double>;

/// Row-major H x W plane of values.
template <class V>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t height, std::size_t width, V fill = V{}) : height_(height), width_(width), data_(height * width, fill) {}
  Grid(std::size_t height, std::size_t width, std::vector<V> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != height_ * width_) throw DimensionError("grid data length does not match extents");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  V& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * width_ + c]; }
  const V& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * width_ + c]; }
  V& operator[](std::size_t i) noexcept { return data_[i]; }
  const V& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<V> data() noexcept { return data_; }
  std::span<const V> data() const noexcept { return data_; }
  std::vector<V>& values() & noexcept { return data_; }
  const std::vector<V>& values() const& noexcept { return data_; }
  std::vector<V> values() && noexcept { return std::move(data_); }

  bool same_extents(const Grid& o) const noexcept { return height_ == o.height_ && width_ == o.width_; }
  template <class U>
  bool same_extents(const Grid<U>& o) const noexcept {
    return height_ == o.height() && width_ == o.width();
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.data_ == b.data_;
  }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<V> data_;
};

using ComplexGrid = Grid<cdouble>;
using RealGrid = Grid<double>;
using BoolGrid = Grid<unsigned char>;

template <class V>
void require_same_extents(const Grid<V>& a, const Grid<V>& b, const char* what) {
  if (!a.same_extents(b)) {
    throw DimensionError(std::string(what) + ": grid sizes " + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + " and " + std::to_string(b.height()) + "x" +
                         std::to_string(b.width()) + " differ");
  }
}

inline RealGrid magnitude(const ComplexGrid& x) {
  RealGrid out(x.height(), x.width());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::abs(x[i]);
  return out;
}

inline double norm2(const ComplexGrid& x) {
  double s = 0;
  for (const auto& v : x.values()) s += std::norm(v);
  return std::sqrt(s);
}

inline double norm2(const RealGrid& x) {
  double s = 0;
  for (double v : x.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace umri
