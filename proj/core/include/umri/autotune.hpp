// SPDX-License-Identifier: Apache-2.0
//
// Per-measurement hyper-parameter selection by holding out part of the
// sampled k-space and scoring each candidate on how well its reconstruction
// predicts the held-out samples.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "umri/decoder.hpp"
#include "umri/fit.hpp"
#include "umri/mri.hpp"

namespace umri {

enum class HoldoutScheme { columns, samples };

struct HoldoutOptions {
  HoldoutScheme scheme = HoldoutScheme::columns;
  bool protect_center = true;
};

struct HoldoutSplit {
  double q = 0;
  std::vector<std::size_t> heldout_columns;  // columns scheme
  BoolGrid heldout_entries;                  // H x W, set where a sample is held out
  CoilMeasurement y_minus;                   // held-out samples zeroed and unmasked
};

/// Removes round(q * |candidates|) candidates drawn uniformly without
/// replacement. Candidates are the sampled columns outside the center band
/// (columns scheme) or the individual sampled entries (samples scheme); with
/// protect_center off the center band is eligible too.
HoldoutSplit holdout_split(const CoilMeasurement& y, double q, std::mt19937_64& rng, HoldoutOptions options = {});

/// Mean over coils and held-out entries of |y - F c|^2, c the reconstructed
/// coil images.
double holdout_error(const CoilMeasurement& y, const HoldoutSplit& split, const std::vector<ComplexGrid>& coil_images);

/// Reconstructs coil images from the reduced measurement.
using CoilReconstructor = std::function<std::vector<ComplexGrid>(const CoilMeasurement& y_minus)>;

/// k independent splits drawn from mt19937_64(seed); one reconstruction per
/// split; returns the per-fold errors.
std::vector<double> score_folds(const CoilReconstructor& recon, const CoilMeasurement& y, double q, std::size_t k,
                                std::uint64_t seed, HoldoutOptions options = {});

struct HyperConfig {
  std::size_t n_layers = 5;
  std::size_t channels = 64;
  bool sens = true;  // sensitivity-map loss (2 outputs) vs coil-wise (2 n_c outputs)

  std::string label() const;
  friend bool operator==(const HyperConfig&, const HyperConfig&) = default;
};

using HyperGrid = std::vector<HyperConfig>;

/// The full-size grid: layers {5, 8} x channels {64, 256} x sens {0, 1}.
HyperGrid default_hyper_grid();

/// Decoder and fit settings for h: base with n_layers and channels replaced,
/// loss mode and output channels set from the sens flag.
DecoderConfig decoder_for(const HyperConfig& h, const DecoderConfig& base, std::size_t coils);
FitConfig fit_for(const HyperConfig& h, const FitConfig& base);

struct AutotuneOptions {
  double q = 0.1;
  std::size_t folds = 2;
  std::uint64_t seed = 0;
  HoldoutOptions holdout;
  std::size_t jobs = 1;
};

struct ScoreRow {
  HyperConfig config;
  std::size_t parameter_count = 0;
  std::vector<double> fold_errors;
  double mean_error = 0;
  std::string error;  // set when the config failed to fit
};

struct AutotuneResult {
  std::size_t best = 0;
  std::vector<ScoreRow> table;

  const HyperConfig& chosen() const { return table.at(best).config; }
};

/// Index of the lowest mean error among rows without an error message; ties go
/// to the smaller parameter count, then to the earlier row.
std::size_t select_best(const std::vector<ScoreRow>& rows);

/// Scores every grid entry with a decoder fit per fold (|grid| * folds fits,
/// run on up to options.jobs threads) and selects the best.
AutotuneResult autotune(const HyperGrid& grid, const CoilMeasurement& y, const SensitivityMaps* maps,
                        const DecoderConfig& base_decoder, const FitConfig& base_fit, const AutotuneOptions& options);

}  // namespace umri
