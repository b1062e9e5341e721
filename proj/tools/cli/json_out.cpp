// SPDX-License-Identifier: Apache-2.0
#include "cli/json_out.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

namespace umri::cli {

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

namespace {

json summary(const MetricSummary& m) {
  json per = json::array();
  for (double v : m.per_image) per.push_back(number(v));
  return {{"per_image", per}, {"mean", number(m.mean)}, {"ci95", number(m.ci95)}};
}

}  // namespace

json to_json(const MetricReport& r) {
  return {{"psnr", summary(r.psnr)},
          {"ssim", summary(r.ssim)},
          {"ms_ssim", summary(r.ms_ssim)},
          {"vif", summary(r.vif)},
          {"normalization", to_string(r.normalization)},
          {"evaluation_mode", to_string(r.evaluation_mode)}};
}

json to_json(const HyperConfig& h) {
  return {{"n_layers", h.n_layers}, {"channels", h.channels}, {"sens", h.sens ? 1 : 0}};
}

json to_json(const AutotuneResult& r) {
  json rows = json::array();
  for (const auto& row : r.table) {
    json folds = json::array();
    for (double e : row.fold_errors) folds.push_back(number(e));
    json j = {{"config", to_json(row.config)},
              {"parameter_count", row.parameter_count},
              {"fold_errors", folds},
              {"mean_error", number(row.mean_error)}};
    if (!row.error.empty()) j["error"] = row.error;
    rows.push_back(j);
  }
  return {{"table", rows}, {"chosen_index", r.best}, {"chosen", to_json(r.chosen())}};
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace umri::cli
