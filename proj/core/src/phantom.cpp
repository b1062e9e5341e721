// SPDX-License-Identifier: Apache-2.0
#include "umri/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace umri {

void PhantomSpec::validate() const {
  if (height < 32 || width < 32) throw std::invalid_argument("phantom: extents must be at least 32");
  if (texture_amplitude < 0) throw std::invalid_argument("phantom: texture_amplitude must be non-negative");
  if (!(texture_scale > 0)) throw std::invalid_argument("phantom: texture_scale must be positive");
}

namespace {

constexpr double kPi = std::numbers::pi;

double smoothstep_edge(double r, double softness) {
  // 1 inside (r < 1), 0 outside, logistic transition of width ~softness.
  return 1.0 / (1.0 + std::exp((r - 1.0) / softness));
}

// Zero-mean unit-variance Gaussian field low-passed with a Gaussian of the
// given correlation length.
RealGrid gaussian_field(std::size_t H, std::size_t W, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexGrid noise(H, W);
  for (auto& v : noise.values()) v = n(rng);
  ComplexGrid k = fft2c(noise);
  const double cy = static_cast<double>(H / 2), cx = static_cast<double>(W / 2);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const double fy = (static_cast<double>(r) - cy) / static_cast<double>(H);
      const double fx = (static_cast<double>(c) - cx) / static_cast<double>(W);
      const double s = 2 * kPi * kPi * scale * scale * (fx * fx + fy * fy);
      k(r, c) *= std::exp(-s);
    }
  }
  RealGrid out(H, W);
  const ComplexGrid f = ifft2c(k);
  double mean = 0, var = 0;
  for (std::size_t p = 0; p < f.size(); ++p) mean += f[p].real();
  mean /= static_cast<double>(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) {
    out[p] = f[p].real() - mean;
    var += out[p] * out[p];
  }
  const double sd = std::sqrt(var / static_cast<double>(f.size()));
  for (auto& v : out.values()) v = sd > 0 ? v / sd : 0.0;
  return out;
}

}  // namespace

Phantom make_phantom(const PhantomSpec& spec) {
  spec.validate();
  const std::size_t H = spec.height, W = spec.width;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const double cy = (static_cast<double>(H) - 1) / 2, cx = (static_cast<double>(W) - 1) / 2;
  const double body_a = 0.44 * static_cast<double>(H), body_b = 0.42 * static_cast<double>(W);
  const double edge = 0.6;  // pixels

  struct Ellipse {
    double y, x, a, b, theta, value;
  };
  std::vector<Ellipse> inner;
  for (std::size_t e = 0; e < spec.n_ellipses; ++e) {
    const double rad = 0.6 * std::sqrt(u(rng)), ang = 2 * kPi * u(rng);
    Ellipse el;
    el.y = cy + rad * body_a * std::sin(ang);
    el.x = cx + rad * body_b * std::cos(ang);
    el.a = (0.06 + 0.22 * u(rng)) * static_cast<double>(H);
    el.b = (0.06 + 0.22 * u(rng)) * static_cast<double>(W);
    el.theta = kPi * u(rng);
    el.value = -0.3 + 0.65 * u(rng);
    inner.push_back(el);
  }
  const RealGrid texture = gaussian_field(H, W, spec.texture_scale, rng);
  const double ph_y = (u(rng) - 0.5) * kPi, ph_x = (u(rng) - 0.5) * kPi, ph_q = (u(rng) - 0.5) * kPi;

  Phantom ph{ComplexGrid(H, W), BoolGrid(H, W, 0)};
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const double dy = static_cast<double>(r) - cy, dx = static_cast<double>(c) - cx;
      const double body_r = std::sqrt((dy / body_a) * (dy / body_a) + (dx / body_b) * (dx / body_b));
      if (body_r >= 1.0) continue;
      ph.support(r, c) = 1;
      const double scale_r = std::min(body_a, body_b);
      double m = 0.45 * smoothstep_edge(body_r, edge / scale_r);
      for (const auto& el : inner) {
        const double ey = static_cast<double>(r) - el.y, ex = static_cast<double>(c) - el.x;
        const double ry = ey * std::cos(el.theta) - ex * std::sin(el.theta);
        const double rx = ey * std::sin(el.theta) + ex * std::cos(el.theta);
        const double er = std::sqrt((ry / el.a) * (ry / el.a) + (rx / el.b) * (rx / el.b));
        m += el.value * smoothstep_edge(er, edge / std::min(el.a, el.b));
      }
      m += spec.texture_amplitude * texture(r, c);
      m = std::clamp(m, 0.0, 1.0);
      const double ny = dy / static_cast<double>(H), nx = dx / static_cast<double>(W);
      const double phase = ph_y * ny + ph_x * nx + ph_q * (nx * nx + ny * ny) * 2.0;
      ph.image(r, c) = std::polar(m, phase);
    }
  }
  return ph;
}

SensitivityMaps make_sens_maps(std::size_t n_coils, const BoolGrid& support) {
  if (n_coils == 0) throw std::invalid_argument("make_sens_maps: need at least one coil");
  const std::size_t H = support.height(), W = support.width();
  SensitivityMaps s;
  s.support = support;
  const double cy = (static_cast<double>(H) - 1) / 2, cx = (static_cast<double>(W) - 1) / 2;
  const double ring_y = 0.62 * static_cast<double>(H), ring_x = 0.62 * static_cast<double>(W);
  const double sigma = 0.38 * static_cast<double>(std::max(H, W));
  for (std::size_t i = 0; i < n_coils; ++i) {
    const double ang = 2 * kPi * static_cast<double>(i) / static_cast<double>(n_coils);
    const double py = cy + ring_y * std::sin(ang), px = cx + ring_x * std::cos(ang);
    ComplexGrid m(H, W);
    for (std::size_t r = 0; r < H; ++r) {
      for (std::size_t c = 0; c < W; ++c) {
        const double dy = static_cast<double>(r) - py, dx = static_cast<double>(c) - px;
        const double mag = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
        const double phase = ang + 0.8 * kPi * (dy * std::sin(ang) + dx * std::cos(ang)) / static_cast<double>(std::max(H, W));
        m(r, c) = std::polar(mag, phase);
      }
    }
    s.maps.push_back(std::move(m));
  }
  normalize_maps(s);
  return s;
}

std::string to_string(MaskKind k) { return k == MaskKind::random ? "random" : "equispaced"; }

MaskKind parse_mask_kind(const std::string& s) {
  if (s == "random") return MaskKind::random;
  if (s == "equispaced") return MaskKind::equispaced;
  throw std::invalid_argument("unknown mask kind '" + s + "' (expected random or equispaced)");
}

double MaskSpec::default_center_fraction(double acceleration) { return acceleration >= 8 ? 0.04 : 0.08; }

void MaskSpec::validate() const {
  if (width == 0) throw std::invalid_argument("mask: width must be positive");
  if (!(acceleration >= 1)) throw std::invalid_argument("mask: acceleration must be at least 1");
  if (!(center_fraction > 0) || !(center_fraction < 2.0 / acceleration)) {
    throw std::invalid_argument("mask: center_fraction must lie in (0, 2/acceleration)");
  }
}

Mask make_mask(const MaskSpec& spec) {
  spec.validate();
  const std::size_t W = spec.width;
  const auto center = static_cast<std::size_t>(std::llround(spec.center_fraction * static_cast<double>(W)));
  const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(W) / spec.acceleration));
  if (total < center) {
    throw std::invalid_argument("mask: sampling budget " + std::to_string(total) + " is below the center band size " +
                                std::to_string(center));
  }
  const std::size_t begin = (W - center + 1) / 2, end = begin + center;

  std::vector<std::size_t> outer;
  for (std::size_t c = 0; c < W; ++c) {
    if (c < begin || c >= end) outer.push_back(c);
  }
  const std::size_t extra = std::min(total - center, outer.size());
  std::vector<std::size_t> cols;
  for (std::size_t c = begin; c < end; ++c) cols.push_back(c);
  if (spec.kind == MaskKind::random) {
    std::mt19937_64 rng(spec.seed);
    std::vector<std::size_t> picked;
    std::sample(outer.begin(), outer.end(), std::back_inserter(picked), static_cast<std::ptrdiff_t>(extra), rng);
    cols.insert(cols.end(), picked.begin(), picked.end());
  } else {
    for (std::size_t j = 0; j < extra; ++j) {
      const auto pos = static_cast<std::size_t>((static_cast<double>(j) + 0.5) * static_cast<double>(outer.size()) /
                                                static_cast<double>(extra));
      cols.push_back(outer[pos]);
    }
  }
  return Mask(W, std::move(cols), begin, end);
}

CoilMeasurement simulate(const ComplexGrid& x, const SensitivityMaps& maps, const Mask& mask, double noise_sigma,
                         std::uint64_t seed) {
  if (noise_sigma < 0) throw std::invalid_argument("simulate: noise_sigma must be non-negative");
  CoilMeasurement y = forward_multicoil(x, maps, mask);
  if (noise_sigma == 0) return y;

  double energy = 0;
  std::size_t count = 0;
  for (const auto& k : y.kspace) {
    for (std::size_t r = 0; r < k.height(); ++r) {
      for (std::size_t c : mask.sampled_columns()) {
        if (!mask.keeps(r, c)) continue;
        energy += std::norm(k(r, c));
        ++count;
      }
    }
  }
  if (count == 0) return y;
  const double sd = noise_sigma * std::sqrt(energy) / std::sqrt(static_cast<double>(count));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  for (auto& k : y.kspace) {
    for (std::size_t r = 0; r < k.height(); ++r) {
      for (std::size_t c : mask.sampled_columns()) {
        if (!mask.keeps(r, c)) continue;
        const double re = n(rng), im = n(rng);
        k(r, c) += cdouble(re, im);
      }
    }
  }
  return y;
}

}  // namespace umri
