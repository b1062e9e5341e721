// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace umri::cli {

/// Runs `umri <args...>`; args excludes the program name. Failures are
/// reported on err as {"error": {"type", "message"}} with a nonzero return:
/// 2 for usage and configuration errors, 1 for everything else.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace umri::cli
