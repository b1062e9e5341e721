// SPDX-License-Identifier: Apache-2.0
//
// Total-variation regularized least squares, the classical un-trained
// baseline.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "umri/mri.hpp"

namespace umri {

/// sum_p sqrt(|dh_p|^2 + |dv_p|^2 + eps^2) - eps with forward differences
/// that are zero past the last row / column. Writes the (real, imaginary)
/// gradient packed as a complex number when grad != nullptr.
double tv_norm(const ComplexGrid& x, double eps, ComplexGrid* grad = nullptr);

enum class TvSolver { gd_backtracking, adam };

std::string to_string(TvSolver s);
TvSolver parse_tv_solver(const std::string& s);

struct TVConfig {
  double lambda = 1e-2;
  std::size_t iterations = 300;
  double eps = 1e-3;
  double stepsize = 1.0;  // initial trial step (gd) or learning rate (adam)
  TvSolver solver = TvSolver::gd_backtracking;

  void validate() const;
};

struct TVResult {
  ComplexGrid x;                          // minimizer estimate before data consistency
  std::vector<ComplexGrid> coil_images;   // after data consistency
  RealGrid image;                         // combined magnitude
  std::vector<double> objective;          // before each iteration, then after the last
};

/// 1/2 sum_i ||y_i - M F S_i x||^2 + lambda * tv_norm(x, eps).
double tv_objective(const ComplexGrid& x, const CoilMeasurement& y, const SensitivityMaps& maps, double lambda,
                    double eps, ComplexGrid* grad = nullptr);

/// First-order minimization of tv_objective from the map-weighted zero-filled
/// image, followed by data consistency and map recombination. Without maps,
/// each coil is reconstructed on its own (S = 1) and the result is RSS
/// combined.
TVResult tv_reconstruct(const CoilMeasurement& y, const SensitivityMaps* maps, const TVConfig& config);

struct TvLambdaScore {
  double lambda = 0;
  double psnr = 0;
};

/// Tries each lambda against a reference image and returns the scores in
/// grid order; the best lambda is the one with the highest PSNR.
std::vector<TvLambdaScore> tune_tv_lambda(const CoilMeasurement& y, const SensitivityMaps* maps,
                                          const RealGrid& reference, TVConfig base,
                                          const std::vector<double>& lambdas = {1e-3, 1e-2, 1e-1});

}  // namespace umri
