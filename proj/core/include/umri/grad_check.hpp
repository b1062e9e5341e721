// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "umri/param_store.hpp"

namespace umri {

/// Evaluates a scalar objective at the current parameter values. When
/// with_grad is true it must also accumulate dF/dp into each parameter's grad
/// buffer (the checker zeroes grads beforehand).
using ScalarObjective = std::function<double(ParamStore<double>& params, bool with_grad)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients with central differences of the given
/// step. The per-entry error is |fd - ad| / max(|fd|, |ad|, 1e-3 * max|ad|),
/// so entries whose gradient is negligible against the largest one are
/// judged on an absolute scale.
///
/// max_per_tensor > 0 checks an evenly strided subset of each tensor.
GradCheckReport grad_check(const ScalarObjective& f, ParamStore<double>& point, double step = 1e-6,
                           std::size_t max_per_tensor = 0);

}  // namespace umri
