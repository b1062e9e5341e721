// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "umri/metrics.hpp"
#include "umri/phantom.hpp"

namespace umri {
namespace {

std::pair<double, double> moments(const RealGrid& g) {
  double m = 0, v = 0;
  for (double x : g.values()) m += x / static_cast<double>(g.size());
  for (double x : g.values()) v += (x - m) * (x - m) / static_cast<double>(g.size());
  return {m, std::sqrt(v)};
}

RealGrid noisy(const RealGrid& g, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  RealGrid out = g;
  for (auto& v : out.values()) v += n(rng);
  return out;
}

RealGrid smooth_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  return magnitude(make_phantom({h, w, seed, 6, 0.1, 2.0}).image);
}

TEST(Normalize, IdenticalInputsStayEqual) {
  const RealGrid g = oracle::random_real(8, 9, 1, 2, 5);
  for (auto mode : {Normalization::none, Normalization::minmax, Normalization::meanstd_both, Normalization::meanstd_gt}) {
    const auto [a, b] = normalize(g, g, mode);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12) << to_string(mode);
  }
}

TEST(Normalize, MeanStdGtMatchesReconMoments) {
  const RealGrid gt = oracle::random_real(16, 12, 2, 0, 3), recon = oracle::random_real(16, 12, 3, -1, 7);
  const auto [g2, r2] = normalize(gt, recon, Normalization::meanstd_gt);
  EXPECT_EQ(r2, recon);
  const auto [mg, sg] = moments(g2);
  const auto [mr, sr] = moments(recon);
  EXPECT_NEAR(mg, mr, 1e-10);
  EXPECT_NEAR(sg, sr, 1e-10);
}

TEST(Normalize, MinMaxAndMeanStdBoth) {
  RealGrid g(1, 2, std::vector<double>{2, 4});
  const auto [a, b] = normalize(g, g, Normalization::minmax);
  EXPECT_EQ(a[0], 0.0);
  EXPECT_EQ(a[1], 1.0);
  const auto [c, d] = normalize(oracle::random_real(5, 5, 4), oracle::random_real(5, 5, 5), Normalization::meanstd_both);
  for (const RealGrid* x : {&c, &d}) {
    const auto [m, s] = moments(*x);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Normalize, ConstantImageIsRejected) {
  const RealGrid flat(4, 4, 1.0), tex = oracle::random_real(4, 4, 6);
  EXPECT_THROW(normalize(flat, tex, Normalization::minmax), NumericError);
  EXPECT_THROW(normalize(flat, tex, Normalization::meanstd_gt), NumericError);
  EXPECT_THROW(normalize(flat, tex, Normalization::meanstd_both), NumericError);
}

TEST(Psnr, Examples) {
  RealGrid a(2, 2, 0.0), b(2, 2, 1.0);
  EXPECT_NEAR(psnr(a, b, 1.0), 0.0, 1e-12);
  EXPECT_NEAR(psnr(a, RealGrid(2, 2, 0.1), 1.0), 20.0, 1e-10);
  EXPECT_EQ(psnr(a, a, 1.0), std::numeric_limits<double>::infinity());
  const RealGrid x = oracle::random_real(6, 6, 7), y = oracle::random_real(6, 6, 8);
  EXPECT_EQ(psnr(x, y, 1.0), psnr(y, x, 1.0));
  EXPECT_THROW(psnr(x, y, 0.0), std::invalid_argument);
}

TEST(Ssim, SelfSimilarityIsOne) {
  const RealGrid x = oracle::random_real(32, 40, 9);
  EXPECT_NEAR(ssim(x, x, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(ms_ssim(smooth_image(176, 176, 1), smooth_image(176, 176, 1), 1.0), 1.0, 1e-12);
}

TEST(Ssim, ConstantImagesClosedForm) {
  const double a = 0.3, b = 0.7, range = 1.0;
  const double c1 = std::pow(kSsimK1 * range, 2);
  EXPECT_NEAR(ssim(RealGrid(20, 20, a), RealGrid(20, 20, b), range), (2 * a * b + c1) / (a * a + b * b + c1), 1e-12);
}

TEST(Ssim, MatchesBruteForceWindows) {
  for (std::uint64_t seed : {10u, 11u, 12u}) {
    const RealGrid x = oracle::random_real(64, 64, seed), y = noisy(x, 0.2, seed + 100);
    EXPECT_NEAR(ssim(x, y, 1.0), oracle::ssim(x, y, 1.0), 1e-6);
  }
  const RealGrid p = smooth_image(64, 48, 3), q = noisy(p, 0.05, 4);
  EXPECT_NEAR(ssim(p, q, data_range(p)), oracle::ssim(p, q, data_range(p)), 1e-6);
}

TEST(Ssim, SymmetricAndTooSmall) {
  const RealGrid x = oracle::random_real(20, 20, 13), y = oracle::random_real(20, 20, 14);
  EXPECT_NEAR(ssim(x, y, 1.0), ssim(y, x, 1.0), 1e-14);
  EXPECT_THROW(ssim(RealGrid(10, 20), RealGrid(10, 20), 1.0), std::invalid_argument);
}

TEST(MsSsim, DegradesWithNoiseAndHandlesSmallImages) {
  const RealGrid x = smooth_image(128, 96, 5);
  const double mild = ms_ssim(x, noisy(x, 0.02, 1), 1.0), strong = ms_ssim(x, noisy(x, 0.2, 1), 1.0);
  EXPECT_LT(strong, mild);
  EXPECT_LT(mild, 1.0);
  EXPECT_GE(strong, 0.0);
  // 32x32 supports two scales (32, 16); the coarser ones are dropped.
  const RealGrid s = smooth_image(32, 32, 6);
  const double v = ms_ssim(s, noisy(s, 0.05, 2), 1.0);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
  EXPECT_THROW(ms_ssim(RealGrid(8, 8), RealGrid(8, 8), 1.0), std::invalid_argument);
}

TEST(MsSsim, SingleScaleEqualsSsim) {
  // 11..21 pixels allow exactly one scale, so MS-SSIM is the plain SSIM.
  const RealGrid x = oracle::random_real(20, 21, 15), y = noisy(x, 0.1, 16);
  EXPECT_NEAR(ms_ssim(x, y, 1.0), ssim(x, y, 1.0), 1e-12);
}

TEST(Vif, SelfIsOne) {
  const RealGrid x = smooth_image(64, 64, 7);
  EXPECT_NEAR(vif(x, x), 1.0, 1e-6);
  const RealGrid r = oracle::random_real(48, 40, 17);
  EXPECT_NEAR(vif(r, r, 1.0), 1.0, 1e-6);
}

TEST(Vif, NoiseLowersScore) {
  const RealGrid x = smooth_image(64, 64, 8);
  EXPECT_LT(vif(x, noisy(x, 0.3, 3)), vif(x, x));
  EXPECT_LT(vif(x, noisy(x, 0.3, 3)), vif(x, noisy(x, 0.03, 3)));
}

TEST(Vif, MatchesFormulaTranscription) {
  const RealGrid x = smooth_image(64, 64, 9), y = noisy(x, 0.05, 5);
  const double range = data_range(x);
  EXPECT_NEAR(vif(x, y, range), oracle::vif(x, y, range), 1e-6);
  const RealGrid a = oracle::random_real(64, 64, 18), b = noisy(a, 0.1, 19);
  EXPECT_NEAR(vif(a, b, 1.0), oracle::vif(a, b, 1.0), 1e-6);
}

TEST(Vif, IsAsymmetric) {
  const RealGrid x = smooth_image(64, 64, 10);
  RealGrid y = noisy(x, 0.1, 6);
  for (auto& v : y.values()) v *= 0.5;
  EXPECT_GT(std::abs(vif(x, y, 1.0) - vif(y, x, 1.0)), 1e-3);
}

TEST(Vif, ZeroVarianceReferenceIsRejected) {
  EXPECT_THROW(vif(RealGrid(40, 40, 0.5), oracle::random_real(40, 40, 20), 1.0), NumericError);
}

TEST(Evaluate, SingleSliceModesAgree) {
  const RealGrid gt = smooth_image(64, 48, 11), rc = noisy(gt, 0.05, 7);
  const MetricReport a = evaluate({rc}, {gt}, Normalization::meanstd_gt, EvalMode::image);
  const MetricReport b = evaluate({rc}, {gt}, Normalization::meanstd_gt, EvalMode::volume);
  EXPECT_EQ(a.psnr.per_image, b.psnr.per_image);
  EXPECT_EQ(a.ssim.per_image, b.ssim.per_image);
  EXPECT_EQ(a.vif.per_image, b.vif.per_image);
  EXPECT_EQ(a.psnr.ci95, 0.0);
}

TEST(Evaluate, DuplicateSliceKeepsMean) {
  const RealGrid g1 = smooth_image(64, 48, 12), g2 = smooth_image(64, 48, 13);
  const RealGrid r1 = noisy(g1, 0.05, 8), r2 = noisy(g2, 0.08, 9);
  const MetricReport two = evaluate({r1, r2}, {g1, g2});
  const MetricReport four = evaluate({r1, r2, r1, r2}, {g1, g2, g1, g2});
  EXPECT_NEAR(two.psnr.mean, four.psnr.mean, 1e-12);
  EXPECT_NEAR(two.ssim.mean, four.ssim.mean, 1e-12);
  EXPECT_GT(two.psnr.ci95, 0.0);
  const double sd = std::abs(two.psnr.per_image[0] - two.psnr.per_image[1]) / std::sqrt(2.0);
  EXPECT_NEAR(two.psnr.ci95, 1.96 * sd / std::sqrt(2.0), 1e-12);
}

TEST(Evaluate, VolumeRangeRaisesOtherSlices) {
  const RealGrid g1 = smooth_image(64, 48, 14), g2 = smooth_image(64, 48, 15);
  RealGrid bright = smooth_image(64, 48, 16);
  for (auto& v : bright.values()) v *= 10;
  const std::vector<RealGrid> gt{g1, g2, bright};
  const std::vector<RealGrid> rc{noisy(g1, 0.05, 1), noisy(g2, 0.05, 2), noisy(bright, 0.5, 3)};
  const MetricReport img = evaluate(rc, gt, Normalization::none, EvalMode::image);
  const MetricReport vol = evaluate(rc, gt, Normalization::none, EvalMode::volume);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_GT(vol.psnr.per_image[i], img.psnr.per_image[i]);
    EXPECT_NEAR(vol.psnr.per_image[i] - img.psnr.per_image[i],
                20 * std::log10(data_range(bright) / data_range(gt[i])), 1e-9);
  }
}

TEST(Evaluate, RepeatIsBitIdenticalAndErrors) {
  const RealGrid gt = smooth_image(64, 48, 17), rc = noisy(gt, 0.05, 10);
  const MetricReport a = evaluate({rc}, {gt}), b = evaluate({rc}, {gt});
  EXPECT_EQ(a.psnr.per_image, b.psnr.per_image);
  EXPECT_EQ(a.ms_ssim.per_image, b.ms_ssim.per_image);
  EXPECT_EQ(a.vif.per_image, b.vif.per_image);
  EXPECT_THROW(evaluate({}, {}), std::invalid_argument);
  EXPECT_THROW(evaluate({rc}, {gt, gt}), std::invalid_argument);
}

TEST(Summarize, MeanAndInterval) {
  const MetricSummary s = summarize({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_NEAR(s.ci95, 1.96 * 1.0 / std::sqrt(3.0), 1e-12);
}

TEST(Modes, ParseRoundTrip) {
  for (auto m : {Normalization::none, Normalization::minmax, Normalization::meanstd_both, Normalization::meanstd_gt}) {
    EXPECT_EQ(parse_normalization(to_string(m)), m);
  }
  EXPECT_EQ(parse_eval_mode("volume"), EvalMode::volume);
  EXPECT_THROW(parse_eval_mode("slab"), std::invalid_argument);
}

}  // namespace
}  // namespace umri
