// SPDX-License-Identifier: Apache-2.0
#include "umri/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace umri {

GradCheckReport grad_check(const ScalarObjective& f, ParamStore<double>& point, double step,
                           std::size_t max_per_tensor) {
  if (!(step > 0)) throw std::invalid_argument("grad_check: step must be positive");

  point.zero_grad();
  const double f0 = f(point, true);
  if (!std::isfinite(f0)) throw NumericError("grad_check: objective is not finite at the base point");

  std::vector<std::vector<double>> analytic;
  double max_abs = 0;
  for (auto& e : point) {
    analytic.emplace_back(e.tensor.grad().begin(), e.tensor.grad().end());
    for (double g : analytic.back()) max_abs = std::max(max_abs, std::abs(g));
  }
  const double floor = std::max(1e-3 * max_abs, 1e-300);

  GradCheckReport report;
  for (std::size_t t = 0; t < point.size(); ++t) {
    auto& entry = point.entries()[t];
    const std::size_t n = entry.tensor.size();
    const std::size_t stride = (max_per_tensor == 0 || n <= max_per_tensor) ? 1 : (n + max_per_tensor - 1) / max_per_tensor;
    for (std::size_t i = 0; i < n; i += stride) {
      double& x = entry.tensor[i];
      const double saved = x;
      x = saved + step;
      const double fp = f(point, false);
      x = saved - step;
      const double fm = f(point, false);
      x = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw NumericError("grad_check: objective not finite when perturbing " + entry.name + "[" +
                           std::to_string(i) + "]");
      }
      const double numeric = (fp - fm) / (2 * step);
      const double ad = analytic[t][i];
      const double err = std::abs(numeric - ad) / std::max({std::abs(numeric), std::abs(ad), floor});
      ++report.checked;
      if (err > report.max_rel_error || report.checked == 1) {
        report.max_rel_error = err;
        report.worst_param = entry.name;
        report.worst_index = i;
        report.worst_analytic = ad;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace umri
