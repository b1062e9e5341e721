// SPDX-License-Identifier: Apache-2.0
//
// Fitting an un-trained decoder to under-sampled k-space, followed by data
// consistency and coil combination.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "umri/decoder.hpp"
#include "umri/mri.hpp"
#include "umri/optim.hpp"

namespace umri {

enum class LossMode { single_coil, coilwise, sensmap };
enum class OptimizerKind { adam, gd_layerwise };

std::string to_string(LossMode m);
LossMode parse_loss_mode(const std::string& s);

/// Half the summed squared k-space residual of a decoder output
/// (out_channels x H x W) against y; writes dL/d(output) when grad != nullptr.
///   coilwise:    sum_i |y_i - M F G_i|^2 / 2, G_i = channels (2i, 2i+1)
///   sensmap:     sum_i |y_i - M F S_i G|^2 / 2, G = channels (0, 1)
///   single_coil: the coilwise loss with one coil
template <class T>
double kspace_loss(LossMode mode, const Tensor<T>& output, const CoilMeasurement& y, const SensitivityMaps* maps,
                   Tensor<T>* grad);

/// Loss of the decoder's current parameters; with_grad accumulates parameter
/// gradients into state.params.
template <class T>
double decoder_loss(DecoderState<T>& state, LossMode mode, const CoilMeasurement& y, const SensitivityMaps* maps,
                    bool with_grad);

template <class T>
double loss_coilwise(DecoderState<T>& state, const CoilMeasurement& y, bool with_grad = false) {
  return decoder_loss(state, LossMode::coilwise, y, nullptr, with_grad);
}

template <class T>
double loss_sensmap(DecoderState<T>& state, const CoilMeasurement& y, const SensitivityMaps& maps,
                    bool with_grad = false) {
  return decoder_loss(state, LossMode::sensmap, y, &maps, with_grad);
}

struct FitConfig {
  LossMode loss_mode = LossMode::coilwise;
  std::size_t iterations = 2500;
  OptimizerKind optimizer = OptimizerKind::adam;
  double lr = 0.01;
  StepsizeSchedule schedule;  // gd_layerwise only
  std::size_t record_loss_every = 1;
  bool record_stepsizes = false;  // keep Adam's per-layer effective stepsizes

  void validate() const;

  static constexpr std::size_t kDefaultIterations = 2500;
  static constexpr std::size_t kFullConvergenceIterations = 10000;
  static constexpr std::size_t kWarmStartIterations = 250;
};

struct LossPoint {
  std::size_t iteration = 0;
  double loss = 0.0;
  friend bool operator==(const LossPoint&, const LossPoint&) = default;
};

struct FitResult {
  std::vector<LossPoint> loss_trace;
  StepsizeSchedule adam_stepsizes;
  double seconds = 0.0;

  double final_loss() const { return loss_trace.back().loss; }
};

/// Raised when the loss stops being finite.
class FitDivergence : public NumericError {
 public:
  FitDivergence(std::size_t iteration, const std::string& what)
      : NumericError("fit diverged at iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Runs exactly config.iterations optimizer steps on state.params. The trace
/// holds the loss evaluated before step t for every t divisible by
/// record_loss_every, plus the loss after the last step (iteration ==
/// iterations).
FitResult fit(DecoderState<float>& state, const CoilMeasurement& y, const SensitivityMaps* maps,
              const FitConfig& config);

struct Reconstruction {
  RealGrid image;
  std::vector<ComplexGrid> coil_images;  // after data consistency
  DecoderState<float> state;
  FitResult fit;
};

/// Turns fitted decoder output into the final image: coil images get data
/// consistency then RSS (coilwise / single_coil); the sensmap image is
/// coil-projected, made consistent per coil, recombined with the maps and
/// its magnitude taken.
Reconstruction finalize_output(const Tensor<float>& output, LossMode mode, const CoilMeasurement& y,
                               const SensitivityMaps* maps);

/// Fit from a fresh decoder seeded with decoder_config.seed (or from
/// warm_start when given), then finalize.
Reconstruction reconstruct(const CoilMeasurement& y, const SensitivityMaps* maps, const DecoderConfig& decoder_config,
                           const FitConfig& fit_config, const DecoderState<float>* warm_start = nullptr);

struct EnsembleResult {
  RealGrid image;
  std::vector<RealGrid> members;
  std::vector<std::uint64_t> seeds;
  std::vector<FitResult> fits;
};

/// Mean of independent reconstructions, one per seed. Members run on up to
/// `jobs` threads; a failing member is reported with its seed.
EnsembleResult ensemble_reconstruct(const CoilMeasurement& y, const SensitivityMaps* maps,
                                    const DecoderConfig& decoder_config, const FitConfig& fit_config,
                                    const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads, rethrowing the first
/// failure.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace umri
