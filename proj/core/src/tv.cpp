// SPDX-License-Identifier: Apache-2.0
#include "umri/tv.hpp"

#include <cmath>

#include "umri/errors.hpp"
#include "umri/metrics.hpp"
#include "umri/optim.hpp"

namespace umri {

double tv_norm(const ComplexGrid& x, double eps, ComplexGrid* grad) {
  if (!(eps > 0)) throw std::invalid_argument("tv_norm: eps must be positive");
  const std::size_t H = x.height(), W = x.width();
  if (grad != nullptr) *grad = ComplexGrid(H, W);
  double total = 0;
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const cdouble dh = c + 1 < W ? x(r, c + 1) - x(r, c) : cdouble{};
      const cdouble dv = r + 1 < H ? x(r + 1, c) - x(r, c) : cdouble{};
      const double mag = std::sqrt(std::norm(dh) + std::norm(dv) + eps * eps);
      total += mag - eps;
      if (grad == nullptr) continue;
      const cdouble gh = dh / mag, gv = dv / mag;
      (*grad)(r, c) -= gh + gv;
      if (c + 1 < W) (*grad)(r, c + 1) += gh;
      if (r + 1 < H) (*grad)(r + 1, c) += gv;
    }
  }
  return total;
}

std::string to_string(TvSolver s) { return s == TvSolver::adam ? "adam" : "gd_backtracking"; }

TvSolver parse_tv_solver(const std::string& s) {
  if (s == "adam") return TvSolver::adam;
  if (s == "gd_backtracking") return TvSolver::gd_backtracking;
  throw std::invalid_argument("unknown TV solver '" + s + "' (expected gd_backtracking or adam)");
}

void TVConfig::validate() const {
  if (!(lambda >= 0)) throw std::invalid_argument("tv config: lambda must be non-negative");
  if (iterations < 1) throw std::invalid_argument("tv config: iterations must be at least 1");
  if (!(eps > 0)) throw std::invalid_argument("tv config: eps must be positive");
  if (!(stepsize > 0)) throw std::invalid_argument("tv config: stepsize must be positive");
}

double tv_objective(const ComplexGrid& x, const CoilMeasurement& y, const SensitivityMaps& maps, double lambda,
                    double eps, ComplexGrid* grad) {
  if (maps.coils() != y.coils()) throw DimensionError("tv_objective: map count differs from coil count");
  double data = 0;
  if (grad != nullptr) *grad = ComplexGrid(x.height(), x.width());
  for (std::size_t i = 0; i < y.coils(); ++i) {
    const auto& s = maps.maps[i];
    require_same_extents(s, x, "tv_objective");
    ComplexGrid coil(x.height(), x.width());
    for (std::size_t p = 0; p < x.size(); ++p) coil[p] = s[p] * x[p];
    ComplexGrid r = apply_mask(fft2c(coil), y.mask);
    for (std::size_t p = 0; p < r.size(); ++p) {
      r[p] -= y.kspace[i][p];
      data += std::norm(r[p]);
    }
    if (grad != nullptr) {
      const ComplexGrid back = ifft2c(apply_mask(r, y.mask));
      for (std::size_t p = 0; p < x.size(); ++p) (*grad)[p] += std::conj(s[p]) * back[p];
    }
  }
  double value = 0.5 * data;
  if (lambda > 0) {
    ComplexGrid g_tv;
    value += lambda * tv_norm(x, eps, grad ? &g_tv : nullptr);
    if (grad != nullptr) {
      for (std::size_t p = 0; p < x.size(); ++p) (*grad)[p] += lambda * g_tv[p];
    }
  }
  return value;
}

namespace {

double sq_norm(const ComplexGrid& g) {
  double s = 0;
  for (const auto& v : g.values()) s += std::norm(v);
  return s;
}

ComplexGrid axpy(const ComplexGrid& x, double a, const ComplexGrid& d) {
  ComplexGrid out(x.height(), x.width());
  for (std::size_t p = 0; p < x.size(); ++p) out[p] = x[p] + a * d[p];
  return out;
}

// Bias-corrected Adam increment for one coordinate.
double adam_update(double& m, double& v, double g, std::size_t t, double lr) {
  const AdamOptions o;
  m = o.beta1 * m + (1 - o.beta1) * g;
  v = o.beta2 * v + (1 - o.beta2) * g * g;
  const double mh = m / (1 - std::pow(o.beta1, static_cast<double>(t)));
  const double vh = v / (1 - std::pow(o.beta2, static_cast<double>(t)));
  return lr * mh / (std::sqrt(vh) + o.eps);
}

void check_finite(double f, std::size_t t) {
  if (!std::isfinite(f)) throw NumericError("tv_reconstruct diverged at iteration " + std::to_string(t));
}

// Gradient descent with Armijo backtracking: every accepted step decreases
// the objective, so the trace is monotone.
ComplexGrid minimize_gd(ComplexGrid x, const CoilMeasurement& y, const SensitivityMaps& maps, const TVConfig& cfg,
                        std::vector<double>& trace) {
  ComplexGrid g;
  double f = tv_objective(x, y, maps, cfg.lambda, cfg.eps, &g);
  double step = cfg.stepsize;
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    check_finite(f, t);
    trace.push_back(f);
    const double gg = sq_norm(g);
    if (gg == 0) continue;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      ComplexGrid xn = axpy(x, -step, g);
      const double fn = tv_objective(xn, y, maps, cfg.lambda, cfg.eps, nullptr);
      if (fn <= f - 0.5 * step * gg) {
        x = std::move(xn);
        f = tv_objective(x, y, maps, cfg.lambda, cfg.eps, &g);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) continue;
    step = std::min(step * 1.5, cfg.stepsize * 1e6);
  }
  check_finite(f, cfg.iterations);
  trace.push_back(f);
  return x;
}

ComplexGrid minimize_adam(ComplexGrid x, const CoilMeasurement& y, const SensitivityMaps& maps, const TVConfig& cfg,
                          std::vector<double>& trace) {
  const std::size_t n = 2 * x.size();
  std::vector<double> m(n, 0.0), v(n, 0.0);
  ComplexGrid g;
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const double f = tv_objective(x, y, maps, cfg.lambda, cfg.eps, &g);
    check_finite(f, t);
    trace.push_back(f);
    for (std::size_t p = 0; p < x.size(); ++p) {
      const double re = adam_update(m[2 * p], v[2 * p], g[p].real(), t + 1, cfg.stepsize);
      const double im = adam_update(m[2 * p + 1], v[2 * p + 1], g[p].imag(), t + 1, cfg.stepsize);
      x[p] -= cdouble(re, im);
    }
  }
  const double f = tv_objective(x, y, maps, cfg.lambda, cfg.eps, nullptr);
  check_finite(f, cfg.iterations);
  trace.push_back(f);
  return x;
}

TVResult solve(const CoilMeasurement& y, const SensitivityMaps& maps, const TVConfig& cfg) {
  TVResult out;
  const ComplexGrid x0 = adjoint_multicoil(y, maps);
  out.x = cfg.solver == TvSolver::adam ? minimize_adam(x0, y, maps, cfg, out.objective)
                                       : minimize_gd(x0, y, maps, cfg, out.objective);
  return out;
}

}  // namespace

TVResult tv_reconstruct(const CoilMeasurement& y, const SensitivityMaps* maps, const TVConfig& config) {
  config.validate();
  if (y.coils() == 0) throw DimensionError("tv_reconstruct: measurement has no coils");
  if (maps != nullptr) {
    if (maps->coils() != y.coils()) throw DimensionError("tv_reconstruct: map count differs from coil count");
    TVResult r = solve(y, *maps, config);
    r.coil_images = data_consistency_sensmap(r.x, *maps, y);
    r.image = magnitude(combine_coils(r.coil_images, *maps));
    return r;
  }

  const SensitivityMaps one = SensitivityMaps::identity(y.height(), y.width());
  TVResult combined;
  std::vector<ComplexGrid> coils;
  for (std::size_t i = 0; i < y.coils(); ++i) {
    CoilMeasurement yi{{y.kspace[i]}, y.mask};
    TVResult r = solve(yi, one, config);
    coils.push_back(r.x);
    if (combined.objective.empty()) combined.objective.assign(r.objective.size(), 0.0);
    for (std::size_t t = 0; t < r.objective.size(); ++t) combined.objective[t] += r.objective[t];
  }
  combined.x = y.coils() == 1 ? coils.front() : ComplexGrid();
  combined.coil_images = data_consistency(coils, y);
  combined.image = rss(combined.coil_images);
  return combined;
}

std::vector<TvLambdaScore> tune_tv_lambda(const CoilMeasurement& y, const SensitivityMaps* maps,
                                          const RealGrid& reference, TVConfig base,
                                          const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw std::invalid_argument("tune_tv_lambda: empty lambda grid");
  std::vector<TvLambdaScore> out;
  const double range = data_range(reference);
  for (double l : lambdas) {
    base.lambda = l;
    const TVResult r = tv_reconstruct(y, maps, base);
    out.push_back({l, psnr(reference, r.image, range)});
  }
  return out;
}

}  // namespace umri
