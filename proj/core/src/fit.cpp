// SPDX-License-Identifier: Apache-2.0
#include "umri/fit.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace umri {

void FitConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("fit config: iterations must be at least 1");
  if (optimizer == OptimizerKind::adam && !(lr > 0)) throw std::invalid_argument("fit config: lr must be positive");
  if (optimizer == OptimizerKind::gd_layerwise && schedule.empty()) {
    throw std::invalid_argument("fit config: gd_layerwise needs a stepsize schedule");
  }
  if (record_loss_every < 1) throw std::invalid_argument("fit config: record_loss_every must be at least 1");
}

namespace {

void check_mode(const DecoderConfig& dc, LossMode mode, const CoilMeasurement& y, const SensitivityMaps* maps) {
  switch (mode) {
    case LossMode::single_coil:
      if (y.coils() != 1 || dc.out_channels != 2) {
        throw std::invalid_argument("single_coil mode needs one coil and 2 output channels");
      }
      break;
    case LossMode::coilwise:
      if (dc.out_channels != 2 * y.coils()) {
        throw std::invalid_argument("coilwise mode needs out_channels == 2 * coils (" + std::to_string(2 * y.coils()) +
                                    "), config has " + std::to_string(dc.out_channels));
      }
      break;
    case LossMode::sensmap:
      if (maps == nullptr) throw std::invalid_argument("sensmap mode needs sensitivity maps");
      if (dc.out_channels != 2) throw std::invalid_argument("sensmap mode needs out_channels == 2");
      if (maps->coils() != y.coils()) throw std::invalid_argument("sensmap mode: map count differs from coil count");
      break;
  }
  if (dc.out_height != y.height() || dc.out_width != y.width()) {
    throw std::invalid_argument("decoder output size differs from k-space size");
  }
}

}  // namespace

FitResult fit(DecoderState<float>& state, const CoilMeasurement& y, const SensitivityMaps* maps,
              const FitConfig& config) {
  config.validate();
  check_mode(state.config, config.loss_mode, y, maps);
  const auto t0 = std::chrono::steady_clock::now();

  FitResult result;
  Adam<float> adam(AdamOptions{config.lr});
  Tensor<float> grad;
  for (std::size_t t = 0; t < config.iterations; ++t) {
    state.params.zero_grad();
    double loss = 0;
    try {
      ForwardPass<float> pass = forward_pass(state);
      loss = kspace_loss(config.loss_mode, pass.output_value(), y, maps, &grad);
      if (!std::isfinite(loss)) throw NumericError("loss is not finite");
      pass.backward(grad);
    } catch (const FitDivergence&) {
      throw;
    } catch (const NumericError& e) {
      throw FitDivergence(t, e.what());
    }
    if (t % config.record_loss_every == 0) result.loss_trace.push_back({t, loss});

    try {
      if (config.optimizer == OptimizerKind::adam) {
        adam.step(state.params);
        if (config.record_stepsizes) {
          for (const auto& [layer, eta] : adam.last_layer_stepsizes()) result.adam_stepsizes.append(layer, eta);
        }
      } else {
        gd_layerwise_step(state.params, config.schedule, t);
      }
    } catch (const NumericError& e) {
      throw FitDivergence(t, e.what());
    }
  }

  double final_loss = 0;
  try {
    final_loss = kspace_loss<float>(config.loss_mode, forward(state), y, maps, nullptr);
  } catch (const NumericError& e) {
    throw FitDivergence(config.iterations, e.what());
  }
  if (!std::isfinite(final_loss)) throw FitDivergence(config.iterations, "loss is not finite");
  result.loss_trace.push_back({config.iterations, final_loss});
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

Reconstruction finalize_output(const Tensor<float>& output, LossMode mode, const CoilMeasurement& y,
                               const SensitivityMaps* maps) {
  Reconstruction r;
  if (mode == LossMode::sensmap) {
    if (maps == nullptr) throw std::invalid_argument("finalize_output: sensmap mode needs sensitivity maps");
    r.coil_images = data_consistency_sensmap(channels_to_complex(output, 0), *maps, y);
    r.image = magnitude(combine_coils(r.coil_images, *maps));
  } else {
    r.coil_images = data_consistency(channels_to_coils(output), y);
    r.image = rss(r.coil_images);
  }
  return r;
}

Reconstruction reconstruct(const CoilMeasurement& y, const SensitivityMaps* maps, const DecoderConfig& decoder_config,
                           const FitConfig& fit_config, const DecoderState<float>* warm_start) {
  DecoderState<float> state;
  if (warm_start != nullptr) {
    if (warm_start->config.architecture_key() != decoder_config.architecture_key()) {
      throw ConfigMismatch("warm start architecture " + warm_start->config.architecture_key() +
                           " differs from requested " + decoder_config.architecture_key());
    }
    state = *warm_start;
  } else {
    state = init_decoder<float>(decoder_config);
  }
  FitResult fr = fit(state, y, maps, fit_config);
  Reconstruction r = finalize_output(forward(state), fit_config.loss_mode, y, maps);
  r.state = std::move(state);
  r.fit = std::move(fr);
  return r;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

EnsembleResult ensemble_reconstruct(const CoilMeasurement& y, const SensitivityMaps* maps,
                                    const DecoderConfig& decoder_config, const FitConfig& fit_config,
                                    const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
  if (seeds.empty()) throw std::invalid_argument("ensemble_reconstruct: need at least one member");
  EnsembleResult out;
  out.seeds = seeds;
  out.members.resize(seeds.size());
  out.fits.resize(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    DecoderConfig dc = decoder_config;
    dc.seed = seeds[i];
    try {
      Reconstruction r = reconstruct(y, maps, dc, fit_config);
      out.members[i] = std::move(r.image);
      out.fits[i] = std::move(r.fit);
    } catch (const std::exception& e) {
      throw std::runtime_error("ensemble member with seed " + std::to_string(seeds[i]) + " failed: " + e.what());
    }
  });
  out.image = RealGrid(out.members.front().height(), out.members.front().width());
  for (const auto& m : out.members) {
    for (std::size_t p = 0; p < m.size(); ++p) out.image[p] += m[p];
  }
  for (auto& v : out.image.values()) v /= static_cast<double>(seeds.size());
  return out;
}

}  // namespace umri
