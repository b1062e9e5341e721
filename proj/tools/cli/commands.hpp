// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

#include "cli/settings.hpp"

namespace umri::cli {

SettingTable phantom_settings();
SettingTable recon_settings();
SettingTable autotune_settings();
SettingTable eval_settings();

/// Each command takes the resolved config; it is echoed into manifests.
void cmd_phantom(json cfg, std::ostream& out);
void cmd_recon(json cfg, std::ostream& out);
void cmd_autotune(json cfg, std::ostream& out);
void cmd_eval(json cfg, std::ostream& out);

}  // namespace umri::cli
