// SPDX-License-Identifier: Apache-2.0
#include "cli/cli.hpp"

#include <functional>

#include "cli/commands.hpp"
#include "umri/errors.hpp"
#include "umri/fit.hpp"

namespace umri::cli {
namespace {

void report(std::ostream& err, const std::string& type, const std::string& message) {
  err << json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Un-trained network MRI reconstruction toolkit", "umri"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "umri 0.1.0");

  struct Command {
    CLI::App* app;
    SettingBinder binder;
    std::function<void(json, std::ostream&)> run;
  };
  std::vector<Command> commands;
  commands.reserve(4);
  auto add = [&](const char* name, const char* help, SettingTable table, void (*fn)(json, std::ostream&)) {
    commands.push_back({app.add_subcommand(name, help), SettingBinder(std::move(table)), fn});
    commands.back().binder.attach(*commands.back().app);
  };
  add("phantom", "Generate a phantom, coil maps, mask and measurement", phantom_settings(), cmd_phantom);
  add("recon", "Reconstruct an image from under-sampled k-space", recon_settings(), cmd_recon);
  add("autotune", "Select decoder hyper-parameters by k-space hold-out", autotune_settings(), cmd_autotune);
  add("eval", "Score reconstructions against ground truth", eval_settings(), cmd_eval);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report(err, "UsageError", e.what());
    return 2;
  }

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      c.run(c.binder.resolve(), out);
      return 0;
    } catch (const UsageError& e) {
      report(err, "UsageError", e.what());
      return 2;
    } catch (const ConfigMismatch& e) {
      report(err, "ConfigMismatch", e.what());
      return 1;
    } catch (const FormatError& e) {
      report(err, "FormatError", e.what());
      return 1;
    } catch (const DimensionError& e) {
      report(err, "DimensionError", e.what());
      return 1;
    } catch (const FitDivergence& e) {
      report(err, "FitDivergence", e.what());
      return 1;
    } catch (const NumericError& e) {
      report(err, "NumericError", e.what());
      return 1;
    } catch (const std::invalid_argument& e) {
      report(err, "InvalidArgument", e.what());
      return 2;
    } catch (const json::exception& e) {
      report(err, "UsageError", e.what());
      return 2;
    } catch (const std::exception& e) {
      report(err, "Error", e.what());
      return 1;
    }
  }
  return 2;
}

}  // namespace umri::cli
