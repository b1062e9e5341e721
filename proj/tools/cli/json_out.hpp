// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cli/settings.hpp"
#include "umri/autotune.hpp"
#include "umri/metrics.hpp"

namespace umri::cli {

/// Finite numbers as JSON numbers; infinities as the strings "inf" / "-inf".
json number(double v);

json to_json(const MetricReport& r);
json to_json(const HyperConfig& h);
json to_json(const AutotuneResult& r);

/// UTC wall-clock time in ISO 8601.
std::string utc_timestamp();

}  // namespace umri::cli
