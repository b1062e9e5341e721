// SPDX-License-Identifier: Apache-2.0
//
// Typed run settings shared by flags and JSON config files. Resolution order:
// explicit flags, then config-file keys, then built-in defaults.
#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace umri::cli {

using json = nlohmann::ordered_json;

/// Bad flags, config keys or values.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Kind { integer, real, text, flag, text_list };

struct Setting {
  std::string key;
  Kind kind;
  json fallback;  // null means "unset"
  std::string help;
};

using SettingTable = std::vector<Setting>;

class SettingBinder {
 public:
  explicit SettingBinder(SettingTable table) : table_(std::move(table)) {}

  /// Adds --key-name options plus --config to the app.
  void attach(CLI::App& app);

  /// Defaults overlaid with the config file (if any) and explicit flags.
  json resolve() const;

  const SettingTable& table() const noexcept { return table_; }

 private:
  SettingTable table_;
  std::map<std::string, std::string> text_;
  std::map<std::string, std::vector<std::string>> lists_;
  std::map<std::string, CLI::Option*> options_;
  std::string config_path_;
};

/// Value of a key that must be set after resolution.
std::string required_text(const json& cfg, const std::string& key);

/// seed from the resolved config, else UMRI_SEED, else 0.
std::uint64_t resolve_seed(json& cfg);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace umri::cli
