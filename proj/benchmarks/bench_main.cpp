// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "umri/decoder.hpp"
#include "umri/fit.hpp"
#include "umri/ops.hpp"
#include "umri/phantom.hpp"

namespace {

using namespace umri;

Tensor<float> random_tensor(Shape s, std::uint64_t seed) {
  Tensor<float> t(std::move(s));
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.f, 1.f);
  for (auto& v : t.data()) v = n(rng);
  return t;
}

void BM_Conv3x3Forward(benchmark::State& st) {
  const auto c = static_cast<std::size_t>(st.range(0));
  const auto x = random_tensor({c, 128, 96}, 1), w = random_tensor({c, c, 3, 3}, 2), b = random_tensor({c}, 3);
  for (auto _ : st) benchmark::DoNotOptimize(conv2d(x, w, b));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(2 * c * c * 9 * 128 * 96));
}
BENCHMARK(BM_Conv3x3Forward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Conv3x3Backward(benchmark::State& st) {
  const auto c = static_cast<std::size_t>(st.range(0));
  const auto x = random_tensor({c, 128, 96}, 1), w = random_tensor({c, c, 3, 3}, 2), g = random_tensor({c, 128, 96}, 3);
  for (auto _ : st) benchmark::DoNotOptimize(conv2d_backward(x, w, g));
}
BENCHMARK(BM_Conv3x3Backward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_BatchNorm(benchmark::State& st) {
  const auto x = random_tensor({64, 128, 96}, 1), s = random_tensor({64}, 2), b = random_tensor({64}, 3);
  for (auto _ : st) benchmark::DoNotOptimize(batchnorm_channels(x, s, b));
}
BENCHMARK(BM_BatchNorm)->Unit(benchmark::kMillisecond);

void BM_UpsampleNearest(benchmark::State& st) {
  const auto x = random_tensor({64, 64, 48}, 1);
  for (auto _ : st) benchmark::DoNotOptimize(upsample(x, 128, 96, UpsampleMode::nearest));
}
BENCHMARK(BM_UpsampleNearest)->Unit(benchmark::kMillisecond);

void BM_Fft2c(benchmark::State& st) {
  const auto h = static_cast<std::size_t>(st.range(0)), w = static_cast<std::size_t>(st.range(1));
  ComplexGrid x(h, w);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (auto& v : x.values()) v = {n(rng), n(rng)};
  for (auto _ : st) benchmark::DoNotOptimize(fft2c(x));
}
BENCHMARK(BM_Fft2c)->Args({128, 96})->Args({640, 368})->Unit(benchmark::kMicrosecond);

void BM_DecoderStep(benchmark::State& st) {
  const Phantom ph = make_phantom(PhantomSpec{});
  const SensitivityMaps maps = make_sens_maps(15, ph.support);
  const CoilMeasurement y = simulate(ph.image, maps, make_mask(MaskSpec{}), 0.0, 1);
  DecoderConfig dc = DecoderConfig::brain(128, 96, 2);
  dc.in_height = 8;
  dc.in_width = 6;
  dc.in_channels = 64;
  DecoderState<float> state = init_decoder<float>(dc);
  for (auto _ : st) {
    state.params.zero_grad();
    benchmark::DoNotOptimize(loss_sensmap(state, y, maps, true));
  }
}
BENCHMARK(BM_DecoderStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
