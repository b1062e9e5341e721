// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "umri/fit.hpp"
#include "umri/grad_check.hpp"
#include "umri/metrics.hpp"
#include "umri/phantom.hpp"

namespace umri {
namespace {

struct Problem {
  Phantom phantom;
  SensitivityMaps maps;
  CoilMeasurement y;
  RealGrid gt;
};

Problem small_problem(std::size_t coils = 4, double accel = 4.0, double noise = 0.0, std::uint64_t seed = 5) {
  Problem p;
  p.phantom = make_phantom({32, 32, seed, 4, 0.05, 1.5});
  p.maps = make_sens_maps(coils, p.phantom.support);
  const Mask m = accel == 1.0 ? Mask::full(32) : make_mask({32, accel, MaskKind::random, 0.1, seed + 1});
  p.y = simulate(p.phantom.image, p.maps, m, noise, seed + 2);
  p.gt = magnitude(p.phantom.image);
  return p;
}

DecoderConfig tiny(std::size_t out_channels, std::uint64_t seed = 1) {
  DecoderConfig c;
  c.n_layers = 3;
  c.channels = 8;
  c.in_channels = 4;
  c.in_height = 4;
  c.in_width = 4;
  c.out_height = 32;
  c.out_width = 32;
  c.out_channels = out_channels;
  c.seed = seed;
  return c;
}

double mse_of(const RealGrid& a, const RealGrid& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double half_energy(const CoilMeasurement& y) {
  double s = 0;
  for (const auto& k : y.kspace) s += norm2(k) * norm2(k);
  return s / 2;
}

TEST(Losses, ZeroOutputGivesHalfEnergy) {
  const Problem p = small_problem();
  Tensor<double> zero8({8, 32, 32}), zero2({2, 32, 32});
  EXPECT_NEAR(kspace_loss<double>(LossMode::coilwise, zero8, p.y, nullptr, nullptr), half_energy(p.y), 1e-9);
  EXPECT_NEAR(kspace_loss<double>(LossMode::sensmap, zero2, p.y, &p.maps, nullptr), half_energy(p.y), 1e-9);
}

TEST(Losses, InverseCrimeGivesZeroLoss) {
  const Problem p = small_problem();
  const auto s = init_decoder<double>(tiny(8));
  const Tensor<double> out = forward(s);
  CoilMeasurement y;
  y.mask = p.y.mask;
  for (const auto& img : channels_to_coils(out)) y.kspace.push_back(apply_mask(fft2c(img), y.mask));
  EXPECT_LT(kspace_loss<double>(LossMode::coilwise, out, y, nullptr, nullptr), 1e-20);
}

TEST(Losses, ModeMismatchIsRejected) {
  const Problem p = small_problem();
  EXPECT_THROW(kspace_loss<double>(LossMode::coilwise, Tensor<double>({6, 32, 32}), p.y, nullptr, nullptr),
               std::invalid_argument);
  EXPECT_THROW(kspace_loss<double>(LossMode::sensmap, Tensor<double>({2, 32, 32}), p.y, nullptr, nullptr),
               std::invalid_argument);
}

TEST(Losses, FullNetworkGradients) {
  const Problem p = small_problem(3, 4.0, 0.05);
  for (LossMode mode : {LossMode::coilwise, LossMode::sensmap}) {
    DecoderConfig c = tiny(mode == LossMode::sensmap ? 2 : 6);
    c.out_height = c.out_width = 16;
    // 16x16 crop of the problem keeps the check quick.
    SensitivityMaps maps;
    maps.support = BoolGrid(16, 16, 1);
    CoilMeasurement y;
    y.mask = Mask(16, {2, 6, 7, 8, 9, 13}, 6, 10);
    for (std::size_t i = 0; i < 3; ++i) {
      ComplexGrid m(16, 16), k(16, 16);
      for (std::size_t r = 0; r < 16; ++r) {
        for (std::size_t col = 0; col < 16; ++col) {
          m(r, col) = p.maps.maps[i](r + 8, col + 8);
          k(r, col) = p.y.kspace[i](r + 8, col + 8);
        }
      }
      maps.maps.push_back(m);
      y.kspace.push_back(apply_mask(k, y.mask));
    }
    normalize_maps(maps);
    auto s = init_decoder<double>(c);
    const ScalarObjective f = [&](ParamStore<double>&, bool with_grad) {
      return decoder_loss(s, mode, y, mode == LossMode::sensmap ? &maps : nullptr, with_grad);
    };
    EXPECT_LT(grad_check(f, s.params, 1e-6, 40).max_rel_error, 1e-4) << to_string(mode);
  }
}

TEST(Losses, SensmapWithUnitMapReducesToSingleCoil) {
  const Problem p = small_problem(1, 4.0, 0.02);
  const SensitivityMaps unit = SensitivityMaps::identity(32, 32);
  const CoilMeasurement y = simulate(p.phantom.image, unit, p.y.mask, 0.02, 9);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto s = init_decoder<double>(tiny(2, seed));
    const double single = decoder_loss(s, LossMode::single_coil, y, nullptr, false);
    const double sens = decoder_loss(s, LossMode::sensmap, y, &unit, false);
    EXPECT_LE(std::abs(single - sens), 1e-10 * std::max(1.0, std::abs(single)));
  }
}

TEST(Adam, HandComputedTraceOnQuadratic) {
  ParamStore<double> p;
  p.add("w", 0, Tensor<double>({1}, 1.0));
  Adam<double> adam;
  const double want[] = {0.990000000099999999, 0.98000274609636989539, 0.97001009952904993813};
  for (double w : want) {
    p.get("w").grad()[0] = p.get("w")[0];  // f = w^2 / 2
    adam.step(p);
    EXPECT_NEAR(p.get("w")[0], w, 1e-15);
  }
}

TEST(Adam, FirstStepBoundedByLearningRate) {
  ParamStore<double> p;
  p.add("w", 0, oracle::random_tensor<double>({50}, 1));
  const Tensor<double> before = p.get("w");
  const Tensor<double> g = oracle::random_tensor<double>({50}, 2, 10.0);
  std::copy(g.values().begin(), g.values().end(), p.get("w").grad().begin());
  Adam<double> adam(AdamOptions{0.01});
  adam.step(p);
  for (std::size_t i = 0; i < 50; ++i) {
    const double d = p.get("w")[i] - before[i];
    EXPECT_LE(std::abs(d), 0.01 * (1 + 1e-9));
    EXPECT_LT(d * g[i], 0.0);
  }
}

TEST(Adam, FirstStepLayerStepsize) {
  // First step is lr * g / (|g| + eps), so eta = lr * sum|g| / sum g^2 up to eps.
  ParamStore<double> p;
  p.add("a", 1, Tensor<double>({3}));
  p.add("b", 1, Tensor<double>({2}));
  p.add("c", 2, Tensor<double>({2}));
  const std::vector<double> ga{1.0, -2.0, 0.5}, gb{4.0, -1.0}, gc{0.0, 0.0};
  std::copy(ga.begin(), ga.end(), p.get("a").grad().begin());
  std::copy(gb.begin(), gb.end(), p.get("b").grad().begin());
  Adam<double> adam(AdamOptions{0.01});
  adam.step(p);
  const auto& eta = adam.last_layer_stepsizes();
  EXPECT_NEAR(eta.at(1), 0.01 * 8.5 / 22.25, 1e-9);
  EXPECT_EQ(eta.at(2), 0.0);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParamStore<double> p;
  p.add("w", 0, oracle::random_tensor<double>({10}, 3));
  const Tensor<double> before = p.get("w");
  Adam<double> adam;
  for (int t = 0; t < 5; ++t) adam.step(p);
  EXPECT_EQ(p.get("w"), before);
}

TEST(Adam, NonFiniteGradientThrows) {
  ParamStore<double> p;
  p.add("w", 0, Tensor<double>({2}, 1.0));
  p.get("w").grad()[1] = std::nan("");
  Adam<double> adam;
  EXPECT_THROW(adam.step(p), NumericError);
}

TEST(Adam, QuadraticLossDecreases) {
  ParamStore<double> p;
  p.add("w", 0, oracle::random_tensor<double>({8}, 4));
  Adam<double> adam(AdamOptions{0.05});
  double prev = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 30; ++t) {
    double loss = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      loss += 0.5 * p.get("w")[i] * p.get("w")[i];
      p.get("w").grad()[i] = p.get("w")[i];
    }
    if (t >= 3) EXPECT_LT(loss, prev);
    prev = loss;
    adam.step(p);
  }
}

TEST(GdLayerwise, ConstantScheduleIsVanillaGd) {
  ParamStore<double> p;
  p.add("a", 1, oracle::random_tensor<double>({4}, 5));
  p.add("b", 2, oracle::random_tensor<double>({3}, 6));
  const ParamStore<double> before = p;
  for (auto& e : p) {
    for (std::size_t i = 0; i < e.tensor.size(); ++i) e.tensor.grad()[i] = static_cast<double>(i) - 1.5;
  }
  gd_layerwise_step(p, StepsizeSchedule::constant(2, 0.1), 0);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& e = p.entries()[k];
    for (std::size_t i = 0; i < e.tensor.size(); ++i) {
      EXPECT_DOUBLE_EQ(e.tensor[i], before.entries()[k].tensor[i] - 0.1 * (static_cast<double>(i) - 1.5));
    }
  }
}

TEST(GdLayerwise, ZeroStepsizeFreezesLayer) {
  ParamStore<double> p;
  p.add("a", 1, Tensor<double>({3}, 1.0));
  p.add("b", 2, Tensor<double>({3}, 1.0));
  for (auto& e : p) std::fill(e.tensor.grad().begin(), e.tensor.grad().end(), 1.0);
  gd_layerwise_step(p, StepsizeSchedule({{1, {0.0}}, {2, {0.5}}}), 3);
  EXPECT_EQ(p.get("a")[0], 1.0);
  EXPECT_EQ(p.get("b")[0], 0.5);
}

TEST(GdLayerwise, MissingLayerThrows) {
  ParamStore<double> p;
  p.add("a", 3, Tensor<double>({1}));
  EXPECT_THROW(gd_layerwise_step(p, StepsizeSchedule(std::map<int, std::vector<double>>{{1, {0.1}}}), 0), std::out_of_range);
}

TEST(StepsizeSchedule, ExtendsLastValueAndSmooths) {
  StepsizeSchedule s({{1, {1.0, 2.0, 3.0, 4.0}}});
  EXPECT_EQ(s.at(1, 2), 3.0);
  EXPECT_EQ(s.at(1, 100), 4.0);
  const auto sm = s.smoothed(3);
  EXPECT_NEAR(sm.at(1, 1), 2.0, 1e-15);
  EXPECT_NEAR(sm.at(1, 2), 3.0, 1e-15);
}

TEST(GdLayerwise, AdamScheduleReachesComparableLoss) {
  const Problem p = small_problem(4, 4.0, 0.02);
  FitConfig adam_cfg;
  adam_cfg.loss_mode = LossMode::sensmap;
  adam_cfg.iterations = 1000;
  adam_cfg.record_stepsizes = true;
  auto a = init_decoder<float>(tiny(2));
  const FitResult ar = fit(a, p.y, &p.maps, adam_cfg);

  FitConfig gd_cfg = adam_cfg;
  gd_cfg.optimizer = OptimizerKind::gd_layerwise;
  gd_cfg.schedule = ar.adam_stepsizes.smoothed(25);
  gd_cfg.record_stepsizes = false;
  auto g = init_decoder<float>(tiny(2));
  const FitResult gr = fit(g, p.y, &p.maps, gd_cfg);
  std::printf("adam final %.6g  gd_layerwise final %.6g\n", ar.final_loss(), gr.final_loss());
  EXPECT_LE(gr.final_loss(), 2.0 * ar.final_loss());
}

TEST(Fit, SingleIterationTrace) {
  const Problem p = small_problem();
  FitConfig cfg;
  cfg.iterations = 1;
  auto s = init_decoder<float>(tiny(8));
  const FitResult r = fit(s, p.y, nullptr, cfg);
  ASSERT_EQ(r.loss_trace.size(), 2u);
  EXPECT_EQ(r.loss_trace[0].iteration, 0u);
  EXPECT_EQ(r.loss_trace[1].iteration, 1u);
  EXPECT_FALSE(s.params == init_decoder<float>(tiny(8)).params);
}

TEST(Fit, DeterministicForSameSeed) {
  const Problem p = small_problem();
  FitConfig cfg;
  cfg.iterations = 20;
  auto a = init_decoder<float>(tiny(8)), b = init_decoder<float>(tiny(8));
  const FitResult ra = fit(a, p.y, nullptr, cfg), rb = fit(b, p.y, nullptr, cfg);
  EXPECT_EQ(ra.loss_trace, rb.loss_trace);
  EXPECT_TRUE(a.params == b.params);
}

TEST(Fit, LossFallsOverDefaultIterations) {
  const Problem p = small_problem(4, 4.0, 0.05);
  FitConfig cfg;
  cfg.loss_mode = LossMode::sensmap;
  cfg.record_loss_every = 10;
  auto s = init_decoder<float>(tiny(2));
  const FitResult r = fit(s, p.y, &p.maps, cfg);
  ASSERT_EQ(r.loss_trace.size(), 251u);
  EXPECT_EQ(r.loss_trace.back().iteration, FitConfig::kDefaultIterations);
  EXPECT_LT(r.final_loss(), r.loss_trace[1].loss);
  for (const auto& pt : r.loss_trace) EXPECT_TRUE(std::isfinite(pt.loss));
}

TEST(Fit, DivergenceReportsIteration) {
  const Problem p = small_problem();
  FitConfig cfg;
  cfg.iterations = 50;
  cfg.lr = 1e30;
  auto s = init_decoder<float>(tiny(8));
  try {
    fit(s, p.y, nullptr, cfg);
    FAIL() << "expected FitDivergence";
  } catch (const FitDivergence& e) {
    EXPECT_GE(e.iteration(), 1u);
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
  }
}

TEST(Reconstruct, DataConsistencyHoldsInFloat) {
  const Problem p = small_problem(4, 4.0, 0.05);
  for (LossMode mode : {LossMode::coilwise, LossMode::sensmap}) {
    FitConfig cfg;
    cfg.loss_mode = mode;
    cfg.iterations = 30;
    const SensitivityMaps* maps = mode == LossMode::sensmap ? &p.maps : nullptr;
    const Reconstruction r = reconstruct(p.y, maps, tiny(mode == LossMode::sensmap ? 2 : 8), cfg);
    for (std::size_t c = 0; c < p.y.coils(); ++c) {
      const ComplexGrid k = apply_mask(fft2c(r.coil_images[c]), p.y.mask);
      double num = 0, den = 0;
      for (std::size_t i = 0; i < k.size(); ++i) {
        num += std::norm(k[i] - p.y.kspace[c][i]);
        den += std::norm(p.y.kspace[c][i]);
      }
      EXPECT_LT(std::sqrt(num / den), 1e-4);
    }
  }
}

TEST(Reconstruct, FullySampledIsNearExact) {
  const Problem p = small_problem(4, 1.0);
  FitConfig cfg;
  cfg.loss_mode = LossMode::sensmap;
  cfg.iterations = 20;
  const Reconstruction r = reconstruct(p.y, &p.maps, tiny(2), cfg);
  RealGrid gt = p.gt, got = r.image;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!p.phantom.support[i]) gt[i] = got[i] = 0;
  }
  EXPECT_GE(psnr(gt, got, data_range(gt)), 40.0);
}

TEST(Reconstruct, WarmStartArchitectureMismatch) {
  const Problem p = small_problem();
  const auto other = init_decoder<float>(tiny(2));
  FitConfig cfg;
  cfg.iterations = 1;
  EXPECT_THROW(reconstruct(p.y, nullptr, tiny(8), cfg, &other), ConfigMismatch);
}

TEST(Ensemble, SingleMemberEqualsReconstruct) {
  const Problem p = small_problem();
  FitConfig cfg;
  cfg.iterations = 15;
  DecoderConfig dc = tiny(8, 3);
  const EnsembleResult e = ensemble_reconstruct(p.y, nullptr, dc, cfg, {3});
  EXPECT_EQ(e.image, reconstruct(p.y, nullptr, dc, cfg).image);
}

TEST(Ensemble, MeanBeatsAverageMemberError) {
  const Problem p = small_problem(4, 4.0, 0.05);
  FitConfig cfg;
  cfg.iterations = 40;
  for (std::size_t k : {2u, 3u, 5u}) {
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < k; ++i) seeds.push_back(10 + i);
    const EnsembleResult e = ensemble_reconstruct(p.y, nullptr, tiny(8), cfg, seeds, 2);
    double member_mean = 0;
    for (const auto& m : e.members) member_mean += mse_of(m, p.gt) / static_cast<double>(k);
    EXPECT_LE(mse_of(e.image, p.gt), member_mean);
  }
}

TEST(Ensemble, FailingMemberNamesSeed) {
  const Problem p = small_problem();
  FitConfig cfg;
  cfg.iterations = 50;
  cfg.lr = 1e30;
  try {
    ensemble_reconstruct(p.y, nullptr, tiny(8), cfg, {42});
    FAIL() << "expected failure";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("seed 42"), std::string::npos) << e.what();
  }
}

TEST(ParallelFor, RunsEveryIndexAndRethrows) {
  std::vector<int> hits(37, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(5, 3, [](std::size_t i) {
                 if (i == 3) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

}  // namespace
}  // namespace umri
