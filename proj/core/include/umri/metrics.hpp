// SPDX-License-Identifier: Apache-2.0
//
// Full-reference image quality metrics and the normalization / evaluation
// mode machinery used to score reconstructions against ground truth.
#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "umri/grid.hpp"

namespace umri {

enum class Normalization { none, minmax, meanstd_both, meanstd_gt };
enum class EvalMode { image, volume };

std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& s);
std::string to_string(EvalMode m);
EvalMode parse_eval_mode(const std::string& s);

/// Returns (gt', recon'). meanstd_gt shifts and scales gt to recon's mean and
/// (population) standard deviation and never touches recon.
std::pair<RealGrid, RealGrid> normalize(const RealGrid& gt, const RealGrid& recon, Normalization mode);

/// max - min.
double data_range(const RealGrid& g);

/// 10 log10(range^2 / mean squared error); +infinity for identical inputs.
double psnr(const RealGrid& gt, const RealGrid& recon, double range);

constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;
constexpr std::size_t kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

/// Normalized 11x11 Gaussian (sigma 1.5), row-major.
std::vector<double> ssim_window();

struct SsimParts {
  double ssim = 0;  // mean of luminance * contrast-structure
  double cs = 0;    // mean of contrast-structure alone
};

/// SSIM over every position where the window fits entirely inside the image.
SsimParts ssim_parts(const RealGrid& x, const RealGrid& y, double range);
double ssim(const RealGrid& gt, const RealGrid& recon, double range);

/// Five-scale MS-SSIM (weights 0.0448, 0.2856, 0.3001, 0.2363, 0.1333) with
/// 2x2 average downsampling. Scales whose smaller side would fall below the
/// window are dropped and the remaining weights renormalized; negative
/// contrast-structure terms are clamped to 0.
double ms_ssim(const RealGrid& gt, const RealGrid& recon, double range);

/// Pixel-domain VIF over four scales (Gaussian windows of 17, 9, 5, 3 taps,
/// sigma = taps / 5, noise variance 2). Inputs are scaled by 255 / range so
/// the noise variance refers to an 8-bit scale; range <= 0 uses data_range(gt).
double vif(const RealGrid& gt, const RealGrid& recon, double range = 0.0);

struct MetricSummary {
  std::vector<double> per_image;
  double mean = 0;
  double ci95 = 0;  // 1.96 * sample std / sqrt(n); 0 for one image
};

struct MetricReport {
  MetricSummary psnr, ssim, ms_ssim, vif;
  Normalization normalization = Normalization::meanstd_gt;
  EvalMode evaluation_mode = EvalMode::image;
};

MetricSummary summarize(std::vector<double> values);

/// Normalizes each slice pair, then scores it with the slice's own gt range
/// (image mode) or the range over all normalized gt slices (volume mode).
MetricReport evaluate(const std::vector<RealGrid>& recon, const std::vector<RealGrid>& gt,
                      Normalization normalization = Normalization::meanstd_gt, EvalMode mode = EvalMode::image);

}  // namespace umri
