// SPDX-License-Identifier: Apache-2.0
#include "umri/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "umri/errors.hpp"

namespace umri {

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::none:
      return "none";
    case Normalization::minmax:
      return "minmax";
    case Normalization::meanstd_both:
      return "meanstd_both";
    case Normalization::meanstd_gt:
      return "meanstd_gt";
  }
  return "?";
}

Normalization parse_normalization(const std::string& s) {
  if (s == "none") return Normalization::none;
  if (s == "minmax") return Normalization::minmax;
  if (s == "meanstd_both") return Normalization::meanstd_both;
  if (s == "meanstd_gt") return Normalization::meanstd_gt;
  throw std::invalid_argument("unknown normalization '" + s + "' (expected none, minmax, meanstd_both or meanstd_gt)");
}

std::string to_string(EvalMode m) { return m == EvalMode::image ? "image" : "volume"; }

EvalMode parse_eval_mode(const std::string& s) {
  if (s == "image") return EvalMode::image;
  if (s == "volume") return EvalMode::volume;
  throw std::invalid_argument("unknown evaluation mode '" + s + "' (expected image or volume)");
}

namespace {

std::pair<double, double> mean_std(const RealGrid& g) {
  double m = 0;
  for (double v : g.values()) m += v;
  m /= static_cast<double>(g.size());
  double s = 0;
  for (double v : g.values()) s += (v - m) * (v - m);
  return {m, std::sqrt(s / static_cast<double>(g.size()))};
}

RealGrid affine(const RealGrid& g, double scale, double shift) {
  RealGrid out(g.height(), g.width());
  for (std::size_t p = 0; p < g.size(); ++p) out[p] = g[p] * scale + shift;
  return out;
}

RealGrid standardize(const RealGrid& g, const char* which) {
  const auto [m, s] = mean_std(g);
  if (!(s > 0)) throw NumericError(std::string("normalize: ") + which + " image is constant");
  return affine(g, 1.0 / s, -m / s);
}

RealGrid to_unit_range(const RealGrid& g, const char* which) {
  const auto [lo, hi] = std::minmax_element(g.values().begin(), g.values().end());
  if (!(*hi > *lo)) throw NumericError(std::string("normalize: ") + which + " image is constant");
  return affine(g, 1.0 / (*hi - *lo), -*lo / (*hi - *lo));
}

void require_nonempty_pair(const RealGrid& a, const RealGrid& b, const char* what) {
  require_same_extents(a, b, what);
  if (a.size() == 0) throw DimensionError(std::string(what) + ": empty image");
}

// Separable 'valid' correlation with a symmetric 1-D kernel.
RealGrid filter_valid(const RealGrid& x, const std::vector<double>& k) {
  const std::size_t n = k.size();
  if (x.height() < n || x.width() < n) return RealGrid();
  const std::size_t H = x.height() - n + 1, W = x.width() - n + 1;
  RealGrid rows(x.height(), W);
  for (std::size_t r = 0; r < x.height(); ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += k[j] * x(r, c + j);
      rows(r, c) = s;
    }
  }
  RealGrid out(H, W);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * rows(r + i, c);
      out(r, c) = s;
    }
  }
  return out;
}

RealGrid product(const RealGrid& a, const RealGrid& b) {
  RealGrid out(a.height(), a.width());
  for (std::size_t p = 0; p < a.size(); ++p) out[p] = a[p] * b[p];
  return out;
}

std::vector<double> gaussian_1d(std::size_t n, double sigma) {
  std::vector<double> k(n);
  const double c = (static_cast<double>(n) - 1) / 2;
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - c;
    k[i] = std::exp(-d * d / (2 * sigma * sigma));
    s += k[i];
  }
  for (auto& v : k) v /= s;
  return k;
}

RealGrid downsample2(const RealGrid& x) {
  const std::size_t H = x.height() / 2, W = x.width() / 2;
  RealGrid out(H, W);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      out(r, c) = 0.25 * (x(2 * r, 2 * c) + x(2 * r + 1, 2 * c) + x(2 * r, 2 * c + 1) + x(2 * r + 1, 2 * c + 1));
    }
  }
  return out;
}

RealGrid decimate(const RealGrid& x) {
  RealGrid out((x.height() + 1) / 2, (x.width() + 1) / 2);
  for (std::size_t r = 0; r < out.height(); ++r) {
    for (std::size_t c = 0; c < out.width(); ++c) out(r, c) = x(2 * r, 2 * c);
  }
  return out;
}

}  // namespace

std::pair<RealGrid, RealGrid> normalize(const RealGrid& gt, const RealGrid& recon, Normalization mode) {
  require_nonempty_pair(gt, recon, "normalize");
  switch (mode) {
    case Normalization::none:
      return {gt, recon};
    case Normalization::minmax:
      return {to_unit_range(gt, "ground-truth"), to_unit_range(recon, "reconstructed")};
    case Normalization::meanstd_both:
      return {standardize(gt, "ground-truth"), standardize(recon, "reconstructed")};
    case Normalization::meanstd_gt: {
      const auto [gm, gs] = mean_std(gt);
      if (!(gs > 0)) throw NumericError("normalize: ground-truth image is constant");
      const auto [rm, rs] = mean_std(recon);
      const double k = rs / gs;
      return {affine(gt, k, rm - gm * k), recon};
    }
  }
  throw std::invalid_argument("normalize: bad mode");
}

double data_range(const RealGrid& g) {
  if (g.size() == 0) throw DimensionError("data_range: empty image");
  const auto [lo, hi] = std::minmax_element(g.values().begin(), g.values().end());
  return *hi - *lo;
}

double psnr(const RealGrid& gt, const RealGrid& recon, double range) {
  require_nonempty_pair(gt, recon, "psnr");
  if (!(range > 0)) throw std::invalid_argument("psnr: data range must be positive");
  double mse = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) mse += (gt[p] - recon[p]) * (gt[p] - recon[p]);
  mse /= static_cast<double>(gt.size());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(range * range / mse);
}

std::vector<double> ssim_window() {
  const auto g = gaussian_1d(kSsimWindow, kSsimSigma);
  std::vector<double> w(kSsimWindow * kSsimWindow);
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    for (std::size_t j = 0; j < kSsimWindow; ++j) w[i * kSsimWindow + j] = g[i] * g[j];
  }
  return w;
}

SsimParts ssim_parts(const RealGrid& x, const RealGrid& y, double range) {
  require_nonempty_pair(x, y, "ssim");
  if (x.height() < kSsimWindow || x.width() < kSsimWindow) {
    throw DimensionError("ssim: image smaller than the 11x11 window");
  }
  if (!(range > 0)) throw std::invalid_argument("ssim: data range must be positive");
  const auto g = gaussian_1d(kSsimWindow, kSsimSigma);
  const double c1 = (kSsimK1 * range) * (kSsimK1 * range), c2 = (kSsimK2 * range) * (kSsimK2 * range);
  const RealGrid mx = filter_valid(x, g), my = filter_valid(y, g);
  const RealGrid xx = filter_valid(product(x, x), g), yy = filter_valid(product(y, y), g);
  const RealGrid xy = filter_valid(product(x, y), g);
  SsimParts out;
  for (std::size_t p = 0; p < mx.size(); ++p) {
    const double vx = xx[p] - mx[p] * mx[p], vy = yy[p] - my[p] * my[p], cov = xy[p] - mx[p] * my[p];
    const double cs = (2 * cov + c2) / (vx + vy + c2);
    const double l = (2 * mx[p] * my[p] + c1) / (mx[p] * mx[p] + my[p] * my[p] + c1);
    out.ssim += l * cs;
    out.cs += cs;
  }
  out.ssim /= static_cast<double>(mx.size());
  out.cs /= static_cast<double>(mx.size());
  return out;
}

double ssim(const RealGrid& gt, const RealGrid& recon, double range) { return ssim_parts(gt, recon, range).ssim; }

double ms_ssim(const RealGrid& gt, const RealGrid& recon, double range) {
  static constexpr std::array<double, 5> kWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  require_nonempty_pair(gt, recon, "ms_ssim");
  std::size_t scales = 0;
  for (std::size_t h = gt.height(), w = gt.width(); scales < kWeights.size() && std::min(h, w) >= kSsimWindow;
       h /= 2, w /= 2) {
    ++scales;
  }
  if (scales == 0) throw DimensionError("ms_ssim: image smaller than the 11x11 window");
  double wsum = 0;
  for (std::size_t s = 0; s < scales; ++s) wsum += kWeights[s];

  RealGrid x = gt, y = recon;
  double out = 1.0;
  for (std::size_t s = 0; s < scales; ++s) {
    const SsimParts parts = ssim_parts(x, y, range);
    const double w = kWeights[s] / wsum;
    const double term = s + 1 == scales ? parts.ssim : parts.cs;
    out *= std::pow(std::max(term, 0.0), w);
    if (s + 1 < scales) {
      x = downsample2(x);
      y = downsample2(y);
    }
  }
  return out;
}

double vif(const RealGrid& gt, const RealGrid& recon, double range) {
  require_nonempty_pair(gt, recon, "vif");
  if (gt.height() < 32 || gt.width() < 32) throw DimensionError("vif: images must be at least 32x32");
  if (range <= 0) range = data_range(gt);
  if (!(range > 0)) throw NumericError("vif: reference image has no variance");
  constexpr double kNoiseVar = 2.0, kTiny = 1e-10;
  const double scale = 255.0 / range;
  RealGrid ref(gt.height(), gt.width()), dist(gt.height(), gt.width());
  for (std::size_t p = 0; p < gt.size(); ++p) {
    ref[p] = gt[p] * scale;
    dist[p] = recon[p] * scale;
  }

  double num = 0, den = 0;
  for (int s = 1; s <= 4; ++s) {
    const std::size_t n = (std::size_t{1} << (4 - s + 1)) + 1;
    const auto k = gaussian_1d(n, static_cast<double>(n) / 5.0);
    if (s > 1) {
      ref = filter_valid(ref, k);
      dist = filter_valid(dist, k);
      if (ref.size() == 0) break;
      ref = decimate(ref);
      dist = decimate(dist);
    }
    const RealGrid mu1 = filter_valid(ref, k), mu2 = filter_valid(dist, k);
    if (mu1.size() == 0) break;
    const RealGrid r2 = filter_valid(product(ref, ref), k), d2 = filter_valid(product(dist, dist), k);
    const RealGrid rd = filter_valid(product(ref, dist), k);
    for (std::size_t p = 0; p < mu1.size(); ++p) {
      double s1 = std::max(r2[p] - mu1[p] * mu1[p], 0.0);
      const double s2 = std::max(d2[p] - mu2[p] * mu2[p], 0.0);
      const double s12 = rd[p] - mu1[p] * mu2[p];
      double g = s12 / (s1 + kTiny);
      double sv = s2 - g * s12;
      if (s1 < kTiny) {
        g = 0;
        sv = s2;
        s1 = 0;
      }
      if (s2 < kTiny) {
        g = 0;
        sv = 0;
      }
      if (g < 0) {
        sv = s2;
        g = 0;
      }
      sv = std::max(sv, kTiny);
      num += std::log10(1 + g * g * s1 / (sv + kNoiseVar));
      den += std::log10(1 + s1 / kNoiseVar);
    }
  }
  if (!(den > 0)) throw NumericError("vif: reference image has no variance");
  return num / den;
}

MetricSummary summarize(std::vector<double> values) {
  MetricSummary m;
  m.per_image = std::move(values);
  const auto n = static_cast<double>(m.per_image.size());
  if (m.per_image.empty()) return m;
  for (double v : m.per_image) m.mean += v;
  m.mean /= n;
  if (m.per_image.size() > 1 && std::isfinite(m.mean)) {
    double ss = 0;
    for (double v : m.per_image) ss += (v - m.mean) * (v - m.mean);
    m.ci95 = 1.96 * std::sqrt(ss / (n - 1)) / std::sqrt(n);
  }
  return m;
}

MetricReport evaluate(const std::vector<RealGrid>& recon, const std::vector<RealGrid>& gt, Normalization normalization,
                      EvalMode mode) {
  if (gt.empty()) throw DimensionError("evaluate: empty volume");
  if (recon.size() != gt.size()) {
    throw DimensionError("evaluate: " + std::to_string(recon.size()) + " reconstructed slices for " +
                         std::to_string(gt.size()) + " ground-truth slices");
  }
  std::vector<std::pair<RealGrid, RealGrid>> pairs;
  for (std::size_t i = 0; i < gt.size(); ++i) pairs.push_back(normalize(gt[i], recon[i], normalization));

  double vol_lo = pairs[0].first[0], vol_hi = vol_lo;
  for (const auto& [g, r] : pairs) {
    const auto [lo, hi] = std::minmax_element(g.values().begin(), g.values().end());
    vol_lo = std::min(vol_lo, *lo);
    vol_hi = std::max(vol_hi, *hi);
  }
  std::vector<double> p, s, ms, v;
  for (const auto& [g, r] : pairs) {
    const double range = mode == EvalMode::image ? data_range(g) : vol_hi - vol_lo;
    p.push_back(psnr(g, r, range));
    s.push_back(ssim(g, r, range));
    ms.push_back(ms_ssim(g, r, range));
    v.push_back(vif(g, r, range));
  }
  MetricReport rep;
  rep.psnr = summarize(std::move(p));
  rep.ssim = summarize(std::move(s));
  rep.ms_ssim = summarize(std::move(ms));
  rep.vif = summarize(std::move(v));
  rep.normalization = normalization;
  rep.evaluation_mode = mode;
  return rep;
}

}  // namespace umri
