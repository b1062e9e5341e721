// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace umri::oracle {

ComplexGrid dft2c(const ComplexGrid& x, bool inverse) {
  const std::size_t H = x.height(), W = x.width();
  const auto ch = static_cast<double>(H / 2), cw = static_cast<double>(W / 2);
  const double sign = inverse ? 1.0 : -1.0;
  ComplexGrid out(H, W);
  for (std::size_t kr = 0; kr < H; ++kr) {
    for (std::size_t kc = 0; kc < W; ++kc) {
      cdouble acc = 0;
      for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = 0; c < W; ++c) {
          const double phase = 2 * std::numbers::pi *
                               ((static_cast<double>(kr) - ch) * (static_cast<double>(r) - ch) / static_cast<double>(H) +
                                (static_cast<double>(kc) - cw) * (static_cast<double>(c) - cw) / static_cast<double>(W));
          acc += x(r, c) * std::polar(1.0, sign * phase);
        }
      }
      out(kr, kc) = acc / std::sqrt(static_cast<double>(H * W));
    }
  }
  return out;
}

Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b) {
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2), O = w.dim(0), k = w.dim(2);
  const long pad = static_cast<long>(k / 2);
  Tensor<double> out({O, H, W});
  for (std::size_t o = 0; o < O; ++o) {
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) {
        double s = b[o];
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t u = 0; u < k; ++u) {
            for (std::size_t v = 0; v < k; ++v) {
              const long si = static_cast<long>(i + u) - pad, sj = static_cast<long>(j + v) - pad;
              if (si < 0 || sj < 0 || si >= static_cast<long>(H) || sj >= static_cast<long>(W)) continue;
              s += w[((o * C + c) * k + u) * k + v] * x.at(c, static_cast<std::size_t>(si), static_cast<std::size_t>(sj));
            }
          }
        }
        out.at(o, i, j) = s;
      }
    }
  }
  return out;
}

double ssim(const RealGrid& x, const RealGrid& y, double range) {
  constexpr int n = 11;
  constexpr double sigma = 1.5;
  double w[n][n], total = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * sigma * sigma));
      total += w[i][j];
    }
  }
  for (auto& row : w) {
    for (double& v : row) v /= total;
  }
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + n <= x.height(); ++r) {
    for (std::size_t c = 0; c + n <= x.width(); ++c) {
      double mx = 0, my = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          mx += w[i][j] * x(r + i, c + j);
          my += w[i][j] * y(r + i, c + j);
        }
      }
      double vx = 0, vy = 0, cov = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double dx = x(r + i, c + j) - mx, dy = y(r + i, c + j) - my;
          vx += w[i][j] * dx * dx;
          vy += w[i][j] * dy * dy;
          cov += w[i][j] * dx * dy;
        }
      }
      sum += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

namespace {

using Plane = std::vector<std::vector<double>>;

Plane to_plane(const RealGrid& g, double scale) {
  Plane p(g.height(), std::vector<double>(g.width()));
  for (std::size_t r = 0; r < g.height(); ++r) {
    for (std::size_t c = 0; c < g.width(); ++c) p[r][c] = g(r, c) * scale;
  }
  return p;
}

Plane fspecial_gaussian(int n, double sd) {
  Plane k(n, std::vector<double>(n));
  double total = 0;
  const double c = (n - 1) / 2.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      k[i][j] = std::exp(-((i - c) * (i - c) + (j - c) * (j - c)) / (2 * sd * sd));
      total += k[i][j];
    }
  }
  for (auto& row : k) {
    for (double& v : row) v /= total;
  }
  return k;
}

Plane filter2_valid(const Plane& k, const Plane& x) {
  const std::size_t n = k.size();
  if (x.empty() || x.size() < n || x[0].size() < n) return {};
  Plane out(x.size() - n + 1, std::vector<double>(x[0].size() - n + 1, 0.0));
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t c = 0; c < out[0].size(); ++c) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) s += k[i][j] * x[r + i][c + j];
      }
      out[r][c] = s;
    }
  }
  return out;
}

Plane every_other(const Plane& x) {
  Plane out;
  for (std::size_t r = 0; r < x.size(); r += 2) {
    std::vector<double> row;
    for (std::size_t c = 0; c < x[r].size(); c += 2) row.push_back(x[r][c]);
    out.push_back(row);
  }
  return out;
}

Plane times(const Plane& a, const Plane& b) {
  Plane out = a;
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < a[r].size(); ++c) out[r][c] = a[r][c] * b[r][c];
  }
  return out;
}

}  // namespace

double vif(const RealGrid& ref_in, const RealGrid& dist_in, double range) {
  const double sigma_nsq = 2.0;
  Plane ref = to_plane(ref_in, 255.0 / range), dist = to_plane(dist_in, 255.0 / range);
  double num = 0, den = 0;
  for (int scale = 1; scale <= 4; ++scale) {
    const int n = (1 << (4 - scale + 1)) + 1;
    const Plane win = fspecial_gaussian(n, n / 5.0);
    if (scale > 1) {
      ref = every_other(filter2_valid(win, ref));
      dist = every_other(filter2_valid(win, dist));
    }
    const Plane mu1 = filter2_valid(win, ref), mu2 = filter2_valid(win, dist);
    const Plane e11 = filter2_valid(win, times(ref, ref)), e22 = filter2_valid(win, times(dist, dist));
    const Plane e12 = filter2_valid(win, times(ref, dist));
    for (std::size_t r = 0; r < mu1.size(); ++r) {
      for (std::size_t c = 0; c < mu1[r].size(); ++c) {
        double sigma1_sq = e11[r][c] - mu1[r][c] * mu1[r][c];
        double sigma2_sq = e22[r][c] - mu2[r][c] * mu2[r][c];
        const double sigma12 = e12[r][c] - mu1[r][c] * mu2[r][c];
        if (sigma1_sq < 0) sigma1_sq = 0;
        if (sigma2_sq < 0) sigma2_sq = 0;
        double g = sigma12 / (sigma1_sq + 1e-10);
        double sv_sq = sigma2_sq - g * sigma12;
        if (sigma1_sq < 1e-10) {
          g = 0;
          sv_sq = sigma2_sq;
          sigma1_sq = 0;
        }
        if (sigma2_sq < 1e-10) {
          g = 0;
          sv_sq = 0;
        }
        if (g < 0) {
          sv_sq = sigma2_sq;
          g = 0;
        }
        if (sv_sq <= 1e-10) sv_sq = 1e-10;
        num += std::log10(1 + g * g * sigma1_sq / (sv_sq + sigma_nsq));
        den += std::log10(1 + sigma1_sq / sigma_nsq);
      }
    }
  }
  return num / den;
}

std::vector<double> normal_equations(const std::vector<double>& a, std::size_t rows, std::size_t cols,
                                     const std::vector<double>& b) {
  std::vector<std::vector<double>> m(cols, std::vector<double>(cols + 1, 0.0));
  for (std::size_t i = 0; i < cols; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      for (std::size_t r = 0; r < rows; ++r) m[i][j] += a[r * cols + i] * a[r * cols + j];
    }
    for (std::size_t r = 0; r < rows; ++r) m[i][cols] += a[r * cols + i] * b[r];
  }
  for (std::size_t p = 0; p < cols; ++p) {
    std::size_t best = p;
    for (std::size_t i = p + 1; i < cols; ++i) {
      if (std::abs(m[i][p]) > std::abs(m[best][p])) best = i;
    }
    std::swap(m[p], m[best]);
    if (m[p][p] == 0) throw std::runtime_error("normal_equations: singular system");
    for (std::size_t i = 0; i < cols; ++i) {
      if (i == p) continue;
      const double f = m[i][p] / m[p][p];
      for (std::size_t j = p; j <= cols; ++j) m[i][j] -= f * m[p][j];
    }
  }
  std::vector<double> x(cols);
  for (std::size_t i = 0; i < cols; ++i) x[i] = m[i][cols] / m[i][i];
  return x;
}

ComplexGrid random_complex(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexGrid g(h, w);
  for (auto& v : g.values()) v = {n(rng), n(rng)};
  return g;
}

RealGrid random_real(std::size_t h, std::size_t w, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RealGrid g(h, w);
  for (auto& v : g.values()) v = u(rng);
  return g;
}

}  // namespace umri::oracle
