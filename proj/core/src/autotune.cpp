// SPDX-License-Identifier: Apache-2.0
#include "umri/autotune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace umri {

HoldoutSplit holdout_split(const CoilMeasurement& y, double q, std::mt19937_64& rng, HoldoutOptions options) {
  if (!(q > 0) || !(q < 1)) throw std::invalid_argument("holdout_split: q must lie in (0, 1)");
  if (y.coils() == 0) throw DimensionError("holdout_split: measurement has no coils");
  const Mask& mask = y.mask;
  const std::size_t H = y.height(), W = y.width();

  HoldoutSplit split;
  split.q = q;
  split.heldout_entries = BoolGrid(H, W, 0);
  std::vector<std::size_t> candidates;  // column index or r * W + c
  for (std::size_t c : mask.sampled_columns()) {
    if (options.protect_center && mask.in_center(c)) continue;
    if (options.scheme == HoldoutScheme::columns) {
      candidates.push_back(c);
    } else {
      for (std::size_t r = 0; r < H; ++r) {
        if (mask.keeps(r, c)) candidates.push_back(r * W + c);
      }
    }
  }
  if (candidates.empty()) throw std::invalid_argument("holdout_split: no eligible sampled k-space to hold out");
  const auto count = static_cast<std::size_t>(std::llround(q * static_cast<double>(candidates.size())));
  if (count == 0) throw std::invalid_argument("holdout_split: q too small, nothing would be held out");
  if (count >= candidates.size()) {
    throw std::invalid_argument("holdout_split: q too large, hold-out set would exhaust the " +
                                std::to_string(candidates.size()) + " candidates");
  }
  std::vector<std::size_t> picked;
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(picked), static_cast<std::ptrdiff_t>(count),
              rng);

  if (options.scheme == HoldoutScheme::columns) {
    split.heldout_columns = picked;
    for (std::size_t c : picked) {
      for (std::size_t r = 0; r < H; ++r) split.heldout_entries(r, c) = 1;
    }
  } else {
    for (std::size_t e : picked) split.heldout_entries[e] = 1;
  }

  split.y_minus.mask = options.scheme == HoldoutScheme::columns ? mask.without_columns(picked)
                                                                : mask.with_excluded_entries(split.heldout_entries);
  for (const auto& k : y.kspace) split.y_minus.kspace.push_back(apply_mask(k, split.y_minus.mask));
  return split;
}

double holdout_error(const CoilMeasurement& y, const HoldoutSplit& split, const std::vector<ComplexGrid>& coil_images) {
  if (coil_images.size() != y.coils()) {
    throw DimensionError("holdout_error: " + std::to_string(coil_images.size()) + " coil images for " +
                         std::to_string(y.coils()) + " coils");
  }
  double total = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < y.coils(); ++i) {
    require_same_extents(coil_images[i], y.kspace[i], "holdout_error");
    const ComplexGrid k = fft2c(coil_images[i]);
    for (std::size_t p = 0; p < k.size(); ++p) {
      if (!split.heldout_entries[p]) continue;
      total += std::norm(y.kspace[i][p] - k[p]);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("holdout_error: empty hold-out set");
  return total / static_cast<double>(count);
}

std::vector<double> score_folds(const CoilReconstructor& recon, const CoilMeasurement& y, double q, std::size_t k,
                                std::uint64_t seed, HoldoutOptions options) {
  if (k < 1) throw std::invalid_argument("score_folds: need at least one fold");
  std::mt19937_64 rng(seed);
  std::vector<double> errors;
  for (std::size_t f = 0; f < k; ++f) {
    const HoldoutSplit split = holdout_split(y, q, rng, options);
    errors.push_back(holdout_error(y, split, recon(split.y_minus)));
  }
  return errors;
}

std::string HyperConfig::label() const {
  std::ostringstream os;
  os << "layers=" << n_layers << ",channels=" << channels << ",sens=" << (sens ? 1 : 0);
  return os.str();
}

HyperGrid default_hyper_grid() {
  HyperGrid g;
  for (std::size_t layers : {5, 8}) {
    for (std::size_t ch : {64, 256}) {
      for (bool sens : {false, true}) g.push_back({layers, ch, sens});
    }
  }
  return g;
}

DecoderConfig decoder_for(const HyperConfig& h, const DecoderConfig& base, std::size_t coils) {
  DecoderConfig d = base;
  d.n_layers = h.n_layers;
  d.channels = h.channels;
  d.out_channels = h.sens ? 2 : 2 * coils;
  return d;
}

FitConfig fit_for(const HyperConfig& h, const FitConfig& base) {
  FitConfig f = base;
  if (h.sens) {
    f.loss_mode = LossMode::sensmap;
  } else if (f.loss_mode == LossMode::sensmap) {
    f.loss_mode = LossMode::coilwise;
  }
  return f;
}

std::size_t select_best(const std::vector<ScoreRow>& rows) {
  std::size_t best = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!r.error.empty() || !std::isfinite(r.mean_error)) continue;
    if (best == rows.size()) {
      best = i;
      continue;
    }
    const auto& b = rows[best];
    if (r.mean_error < b.mean_error || (r.mean_error == b.mean_error && r.parameter_count < b.parameter_count)) {
      best = i;
    }
  }
  if (best == rows.size()) throw std::runtime_error("autotune: every configuration failed");
  return best;
}

AutotuneResult autotune(const HyperGrid& grid, const CoilMeasurement& y, const SensitivityMaps* maps,
                        const DecoderConfig& base_decoder, const FitConfig& base_fit, const AutotuneOptions& options) {
  if (grid.empty()) throw std::invalid_argument("autotune: empty grid");
  if (options.folds < 1) throw std::invalid_argument("autotune: need at least one fold");
  for (const auto& h : grid) {
    if (h.sens && maps == nullptr) throw std::invalid_argument("autotune: sens=1 config needs sensitivity maps");
  }

  // Same splits for every config.
  std::mt19937_64 rng(options.seed);
  std::vector<HoldoutSplit> splits;
  for (std::size_t f = 0; f < options.folds; ++f) splits.push_back(holdout_split(y, options.q, rng, options.holdout));

  AutotuneResult out;
  out.table.resize(grid.size());
  std::vector<std::vector<double>> errors(grid.size(), std::vector<double>(options.folds, 0.0));
  std::vector<std::string> failures(grid.size() * options.folds);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.table[i].config = grid[i];
    out.table[i].parameter_count = parameter_count(decoder_for(grid[i], base_decoder, y.coils()));
  }

  parallel_for(grid.size() * options.folds, options.jobs, [&](std::size_t job) {
    const std::size_t i = job / options.folds, f = job % options.folds;
    try {
      const DecoderConfig dc = decoder_for(grid[i], base_decoder, y.coils());
      const FitConfig fc = fit_for(grid[i], base_fit);
      const Reconstruction r = reconstruct(splits[f].y_minus, grid[i].sens ? maps : nullptr, dc, fc);
      errors[i][f] = holdout_error(y, splits[f], r.coil_images);
    } catch (const std::exception& e) {
      failures[job] = e.what();
    }
  });

  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto& row = out.table[i];
    row.fold_errors = errors[i];
    for (std::size_t f = 0; f < options.folds; ++f) {
      const auto& msg = failures[i * options.folds + f];
      if (!msg.empty() && row.error.empty()) row.error = "fold " + std::to_string(f) + ": " + msg;
    }
    if (row.error.empty()) {
      double s = 0;
      for (double e : row.fold_errors) s += e;
      row.mean_error = s / static_cast<double>(options.folds);
    } else {
      row.mean_error = std::numeric_limits<double>::infinity();
    }
  }
  out.best = select_best(out.table);
  return out;
}

}  // namespace umri
