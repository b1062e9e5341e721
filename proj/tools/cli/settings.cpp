// SPDX-License-Identifier: Apache-2.0
#include "cli/settings.hpp"

#include <cstdlib>
#include <fstream>

namespace umri::cli {
namespace {

std::string flag_name(const std::string& key) {
  std::string s = "--" + key;
  for (auto& c : s) {
    if (c == '_') c = '-';
  }
  return s;
}

json parse_value(const Setting& s, const std::string& text) {
  try {
    std::size_t used = 0;
    switch (s.kind) {
      case Kind::integer: {
        const long long v = std::stoll(text, &used);
        if (used != text.size()) break;
        return v;
      }
      case Kind::real: {
        const double v = std::stod(text, &used);
        if (used != text.size()) break;
        return v;
      }
      case Kind::flag:
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        break;
      case Kind::text:
        return text;
      case Kind::text_list:
        return json::array({text});
    }
  } catch (const std::logic_error&) {
  }
  throw UsageError("invalid value '" + text + "' for " + flag_name(s.key));
}

bool type_matches(const Setting& s, const json& v) {
  if (v.is_null()) return true;
  switch (s.kind) {
    case Kind::integer:
      return v.is_number_integer();
    case Kind::real:
      return v.is_number();
    case Kind::flag:
      return v.is_boolean();
    case Kind::text:
      return v.is_string();
    case Kind::text_list:
      if (v.is_string()) return true;
      if (!v.is_array()) return false;
      for (const auto& e : v) {
        if (!e.is_string()) return false;
      }
      return true;
  }
  return false;
}

}  // namespace

void SettingBinder::attach(CLI::App& app) {
  app.add_option("--config", config_path_, "JSON config file; explicit flags take precedence");
  for (const auto& s : table_) {
    CLI::Option* opt = nullptr;
    if (s.kind == Kind::text_list) {
      opt = app.add_option(flag_name(s.key), lists_[s.key], s.help);
    } else {
      opt = app.add_option(flag_name(s.key), text_[s.key], s.help);
    }
    static const char* kTypeNames[] = {"INT", "REAL", "TEXT", "BOOL", "TEXT ..."};
    opt->type_name(kTypeNames[static_cast<int>(s.kind)]);
    if (!s.fallback.is_null()) opt->description(s.help + " (default " + s.fallback.dump() + ")");
    options_[s.key] = opt;
  }
}

json SettingBinder::resolve() const {
  json cfg = json::object();
  for (const auto& s : table_) cfg[s.key] = s.fallback;

  if (!config_path_.empty()) {
    const json file = read_json_file(config_path_);
    if (!file.is_object()) throw UsageError(config_path_ + ": config must be a JSON object");
    for (const auto& [key, value] : file.items()) {
      auto it = std::find_if(table_.begin(), table_.end(), [&](const Setting& s) { return s.key == key; });
      if (it == table_.end()) throw UsageError(config_path_ + ": unknown config key '" + key + "'");
      if (!type_matches(*it, value)) throw UsageError(config_path_ + ": wrong type for config key '" + key + "'");
      cfg[key] = it->kind == Kind::real && value.is_number() ? json(value.get<double>())
                 : it->kind == Kind::text_list && value.is_string() ? json::array({value})
                                                                      : value;
    }
  }

  for (const auto& s : table_) {
    const CLI::Option* opt = options_.at(s.key);
    if (opt->count() == 0) continue;
    if (s.kind == Kind::text_list) {
      cfg[s.key] = lists_.at(s.key);
    } else {
      cfg[s.key] = parse_value(s, text_.at(s.key));
    }
  }
  return cfg;
}

std::string required_text(const json& cfg, const std::string& key) {
  if (!cfg.contains(key) || !cfg[key].is_string() || cfg[key].get<std::string>().empty()) {
    throw UsageError("missing required setting " + flag_name(key));
  }
  return cfg[key].get<std::string>();
}

std::uint64_t resolve_seed(json& cfg) {
  if (cfg.contains("seed") && !cfg["seed"].is_null()) {
    const auto v = cfg["seed"].get<long long>();
    if (v < 0) throw UsageError("seed must be non-negative");
    return static_cast<std::uint64_t>(v);
  }
  std::uint64_t seed = 0;
  if (const char* env = std::getenv("UMRI_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    } catch (const std::logic_error&) {
      throw UsageError(std::string("UMRI_SEED is not a non-negative integer: '") + env + "'");
    }
  }
  cfg["seed"] = seed;
  return seed;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace umri::cli
