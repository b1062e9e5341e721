// SPDX-License-Identifier: Apache-2.0
#include "cli/commands.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cli/json_out.hpp"
#include "umri/array_io.hpp"
#include "umri/autotune.hpp"
#include "umri/fit.hpp"
#include "umri/metrics.hpp"
#include "umri/phantom.hpp"
#include "umri/tv.hpp"

namespace umri::cli {
namespace {

constexpr const char* kVersion = "0.1.0";

std::size_t positive(const json& cfg, const std::string& key) {
  const auto v = cfg.at(key).get<long long>();
  if (v < 1) throw UsageError(key + " must be at least 1");
  return static_cast<std::size_t>(v);
}

std::string text(const json& cfg, const std::string& key) {
  return cfg.at(key).is_null() ? std::string() : cfg.at(key).get<std::string>();
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / p.stem()).string() + suffix;
}

json timestamps(std::chrono::steady_clock::time_point t0, const std::string& started) {
  return {{"started_utc", started},
          {"elapsed_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
}

// Slices of a rank-2 or rank-3 array; complex arrays become magnitudes.
std::vector<RealGrid> read_images(const std::string& path) {
  const NdArray a = read_array(path);
  if (a.dtype == DType::real32) return real_stack(a);
  std::vector<RealGrid> out;
  for (const auto& g : complex_stack(a)) out.push_back(magnitude(g));
  return out;
}

struct Inputs {
  CoilMeasurement y;
  std::optional<SensitivityMaps> maps;
};

Inputs read_inputs(const json& cfg) {
  Inputs in;
  in.y.kspace = complex_stack(read_array(required_text(cfg, "kspace")));
  in.y.mask = mask_from_array(read_array(required_text(cfg, "mask")));
  if (in.y.mask.width() != in.y.width()) {
    throw DimensionError("mask width " + std::to_string(in.y.mask.width()) + " differs from k-space width " +
                         std::to_string(in.y.width()));
  }
  for (auto& k : in.y.kspace) k = apply_mask(k, in.y.mask);
  const std::string sens = text(cfg, "sens");
  if (!sens.empty()) {
    in.maps = maps_from_array(read_array(sens));
    if (in.maps->coils() != in.y.coils() || in.maps->height() != in.y.height() ||
        in.maps->width() != in.y.width()) {
      throw DimensionError("sensitivity maps do not match the k-space coils or extents");
    }
  }
  return in;
}

DecoderConfig decoder_from(const json& cfg, Arch arch, std::size_t out_h, std::size_t out_w) {
  DecoderConfig dc = DecoderConfig::brain(out_h, out_w, 2);
  dc.arch = arch;
  if (cfg.contains("layers") && !cfg["layers"].is_null()) dc.n_layers = positive(cfg, "layers");
  if (cfg.contains("channels") && !cfg["channels"].is_null()) dc.channels = positive(cfg, "channels");
  dc.in_channels = positive(cfg, "in_channels");
  dc.in_height = positive(cfg, "in_height");
  dc.in_width = positive(cfg, "in_width");
  dc.size_rule = parse_size_rule(cfg.at("size_rule").get<std::string>());
  return dc;
}

Setting decoder_setting(const std::string& key, json fallback, const std::string& help) {
  return {key, fallback.is_number_integer() || fallback.is_null() ? Kind::integer : Kind::real, fallback, help};
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << body;
  if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace

SettingTable phantom_settings() {
  return {{"out", Kind::text, "", "output directory"},
          {"height", Kind::integer, 128, "image rows"},
          {"width", Kind::integer, 96, "image columns"},
          {"coils", Kind::integer, 15, "number of receive coils"},
          {"acceleration", Kind::real, 4.0, "under-sampling factor"},
          {"mask_kind", Kind::text, "random", "random or equispaced outer columns"},
          {"center_fraction", Kind::real, nullptr, "fully sampled center fraction (0.08 at 4x, 0.04 at 8x)"},
          {"noise", Kind::real, 0.05, "relative noise level"},
          {"ellipses", Kind::integer, 10, "inner ellipses"},
          {"texture_amplitude", Kind::real, 0.08, "texture strength"},
          {"texture_scale", Kind::real, 2.0, "texture correlation length in pixels"},
          {"seed", Kind::integer, nullptr, "phantom seed; mask and noise use seed+1 and seed+2"}};
}

SettingTable recon_settings() {
  return {{"kspace", Kind::text, "", "measured k-space (complex, coils x H x W)"},
          {"mask", Kind::text, "", "sampling mask"},
          {"sens", Kind::text, "", "sensitivity maps; enables the map-based loss"},
          {"method", Kind::text, "convdecoder", "convdecoder, deepdecoder, tv or zero_fill"},
          {"out", Kind::text, "", "output image file"},
          decoder_setting("layers", nullptr, "decoder layers (default 5)"),
          decoder_setting("channels", nullptr, "decoder channels (default 64)"),
          decoder_setting("in_channels", 256, "decoder input channels"),
          decoder_setting("in_height", 8, "decoder input rows"),
          decoder_setting("in_width", 6, "decoder input columns"),
          {"size_rule", Kind::text, "geometric", "geometric or linear layer sizes"},
          {"loss", Kind::text, "auto", "auto, single_coil, coilwise or sensmap"},
          decoder_setting("iters", 2500, "optimizer iterations"),
          decoder_setting("lr", 0.01, "Adam learning rate"),
          decoder_setting("ensemble", 1, "number of independently seeded fits to average"),
          {"warm_start", Kind::text, "", "parameter file to start from"},
          {"save_params", Kind::text, "", "write fitted parameters here"},
          {"gt", Kind::text, "", "ground truth image; enables metrics"},
          {"loss_csv", Kind::text, "", "write the loss trace here"},
          {"manifest", Kind::text, "", "manifest path (default <out>.manifest.json)"},
          {"metrics", Kind::text, "", "metrics path (default <out>.metrics.json)"},
          {"norm", Kind::text, "meanstd_gt", "metric normalization"},
          {"tv_lambda", Kind::real, 1e-3, "TV weight"},
          {"tv_iters", Kind::integer, 300, "TV iterations"},
          {"tv_eps", Kind::real, 1e-3, "TV smoothing"},
          {"tv_solver", Kind::text, "gd_backtracking", "gd_backtracking or adam"},
          {"tv_step", Kind::real, 1.0, "TV initial step / learning rate"},
          {"seed", Kind::integer, nullptr, "initialization seed (falls back to UMRI_SEED, then 0)"},
          {"jobs", Kind::integer, 1, "worker threads for ensembles"}};
}

SettingTable autotune_settings() {
  return {{"kspace", Kind::text, "", "measured k-space"},
          {"mask", Kind::text, "", "sampling mask"},
          {"sens", Kind::text, "", "sensitivity maps (needed for sens=1 entries)"},
          {"grid", Kind::text, "", "grid JSON; default layers {5,8} x channels {64,256} x sens {0,1}"},
          {"q", Kind::real, 0.1, "hold-out fraction"},
          {"folds", Kind::integer, 2, "independent hold-out splits"},
          {"holdout", Kind::text, "columns", "columns or samples"},
          {"protect_center", Kind::flag, true, "never hold out the center band"},
          {"method", Kind::text, "convdecoder", "convdecoder or deepdecoder"},
          decoder_setting("in_channels", 256, "decoder input channels"),
          decoder_setting("in_height", 8, "decoder input rows"),
          decoder_setting("in_width", 6, "decoder input columns"),
          {"size_rule", Kind::text, "geometric", "geometric or linear layer sizes"},
          decoder_setting("iters", 2500, "optimizer iterations per fit"),
          decoder_setting("lr", 0.01, "Adam learning rate"),
          {"out", Kind::text, "", "score table JSON"},
          {"chosen", Kind::text, "", "chosen recon config (default <out stem>.chosen.json)"},
          {"manifest", Kind::text, "", "manifest path (default <out stem>.manifest.json)"},
          {"seed", Kind::integer, nullptr, "split and initialization seed"},
          {"jobs", Kind::integer, 1, "worker threads"}};
}

SettingTable eval_settings() {
  return {{"recon", Kind::text_list, json::array(), "reconstruction file(s)"},
          {"gt", Kind::text_list, json::array(), "ground truth file(s)"},
          {"norm", Kind::text, "meanstd_gt", "none, minmax, meanstd_both or meanstd_gt"},
          {"mode", Kind::text, "image", "image or volume"},
          {"out", Kind::text, "", "report path (stdout when empty)"}};
}

void cmd_phantom(json cfg, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_timestamp();
  const std::string dir = required_text(cfg, "out");
  if (cfg["seed"].is_null() && std::getenv("UMRI_SEED") == nullptr) cfg["seed"] = 1234;
  const std::uint64_t seed = resolve_seed(cfg);

  PhantomSpec ps;
  ps.height = positive(cfg, "height");
  ps.width = positive(cfg, "width");
  ps.seed = seed;
  ps.n_ellipses = static_cast<std::size_t>(cfg["ellipses"].get<long long>());
  ps.texture_amplitude = cfg["texture_amplitude"].get<double>();
  ps.texture_scale = cfg["texture_scale"].get<double>();
  ps.validate();
  MaskSpec ms;
  ms.width = ps.width;
  ms.acceleration = cfg["acceleration"].get<double>();
  ms.kind = parse_mask_kind(cfg["mask_kind"].get<std::string>());
  if (cfg["center_fraction"].is_null()) cfg["center_fraction"] = MaskSpec::default_center_fraction(ms.acceleration);
  ms.center_fraction = cfg["center_fraction"].get<double>();
  ms.seed = seed + 1;
  ms.validate();
  const std::size_t coils = positive(cfg, "coils");
  const double noise = cfg["noise"].get<double>();
  if (noise < 0) throw UsageError("noise must be non-negative");

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);

  const Phantom ph = make_phantom(ps);
  const SensitivityMaps maps = make_sens_maps(coils, ph.support);
  const Mask mask = make_mask(ms);
  const CoilMeasurement y = simulate(ph.image, maps, mask, noise, seed + 2);

  const std::filesystem::path d(dir);
  const std::string image_path = (d / "image.umri").string(), maps_path = (d / "maps.umri").string();
  const std::string mask_path = (d / "mask.umri").string(), kspace_path = (d / "kspace.umri").string();
  write_array(image_path, to_array(ph.image));
  write_array(maps_path, to_array(maps.maps));
  write_array(mask_path, mask_to_array(mask));
  write_array(kspace_path, to_array(y.kspace));

  json manifest = {{"command", "phantom"},
                   {"version", kVersion},
                   {"config", cfg},
                   {"outputs", {{"image", image_path}, {"maps", maps_path}, {"mask", mask_path}, {"kspace", kspace_path}}},
                   {"seeds", {{"phantom", seed}, {"mask", seed + 1}, {"noise", seed + 2}}},
                   {"mask",
                    {{"width", mask.width()},
                     {"sampled_columns", mask.sampled_columns().size()},
                     {"center_columns", mask.center_size()},
                     {"acceleration", mask.acceleration()}}},
                   {"timestamps", timestamps(t0, started)}};
  const std::string manifest_path = (d / "manifest.json").string();
  write_json_file(manifest_path, manifest);
  out << manifest_path << '\n';
}

void cmd_recon(json cfg, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_timestamp();
  const std::string out_path = required_text(cfg, "out");
  const std::uint64_t seed = resolve_seed(cfg);
  const std::string method = cfg["method"].get<std::string>();
  const Inputs in = read_inputs(cfg);
  const SensitivityMaps* maps = in.maps ? &*in.maps : nullptr;
  const std::size_t ensemble = positive(cfg, "ensemble"), jobs = positive(cfg, "jobs");
  const Normalization norm = parse_normalization(cfg["norm"].get<std::string>());
  const std::string warm = text(cfg, "warm_start"), save = text(cfg, "save_params"), csv = text(cfg, "loss_csv");

  json manifest = {{"command", "recon"}, {"version", kVersion}, {"config", cfg}};
  json outputs = {{"image", out_path}};
  RealGrid image;

  if (method == "zero_fill") {
    image = zero_filled(in.y);
  } else if (method == "tv") {
    TVConfig tc;
    tc.lambda = cfg["tv_lambda"].get<double>();
    tc.iterations = positive(cfg, "tv_iters");
    tc.eps = cfg["tv_eps"].get<double>();
    tc.stepsize = cfg["tv_step"].get<double>();
    tc.solver = parse_tv_solver(cfg["tv_solver"].get<std::string>());
    const TVResult r = tv_reconstruct(in.y, maps, tc);
    image = r.image;
    manifest["tv"] = {{"iterations", tc.iterations}, {"final_objective", number(r.objective.back())}};
    if (!csv.empty()) {
      std::ostringstream os;
      os << std::setprecision(17) << "iteration,objective\n";
      for (std::size_t t = 0; t < r.objective.size(); ++t) os << t << ',' << r.objective[t] << '\n';
      write_text(csv, os.str());
      outputs["loss_csv"] = csv;
    }
  } else if (method == "convdecoder" || method == "deepdecoder") {
    DecoderConfig dc = decoder_from(cfg, parse_arch(method), in.y.height(), in.y.width());
    FitConfig fc;
    fc.iterations = positive(cfg, "iters");
    fc.lr = cfg["lr"].get<double>();
    const std::string loss = cfg["loss"].get<std::string>();
    if (loss == "auto") {
      fc.loss_mode = maps ? LossMode::sensmap : in.y.coils() == 1 ? LossMode::single_coil : LossMode::coilwise;
    } else {
      fc.loss_mode = parse_loss_mode(loss);
    }
    if (fc.loss_mode == LossMode::sensmap && maps == nullptr) throw UsageError("loss sensmap needs --sens");
    dc.out_channels = fc.loss_mode == LossMode::sensmap ? 2 : 2 * in.y.coils();
    dc.seed = seed;
    dc.validate();
    if (ensemble > 1 && (!warm.empty() || !save.empty())) {
      throw UsageError("--warm-start and --save-params need --ensemble 1");
    }

    std::vector<std::uint64_t> seeds;
    std::vector<FitResult> fits;
    if (ensemble == 1) {
      std::optional<DecoderState<float>> start;
      if (!warm.empty()) start = load_params(dc, warm);
      Reconstruction r = reconstruct(in.y, maps, dc, fc, start ? &*start : nullptr);
      if (!save.empty()) {
        save_params(r.state, save);
        outputs["params"] = save;
      }
      image = std::move(r.image);
      seeds = {seed};
      fits.push_back(std::move(r.fit));
    } else {
      for (std::size_t i = 0; i < ensemble; ++i) seeds.push_back(seed + i);
      EnsembleResult e = ensemble_reconstruct(in.y, maps, dc, fc, seeds, jobs);
      image = std::move(e.image);
      fits = std::move(e.fits);
    }
    json members = json::array();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      members.push_back({{"seed", seeds[i]}, {"final_loss", number(fits[i].final_loss())}});
    }
    manifest["decoder"] = {{"architecture", dc.architecture_key()},
                           {"parameters", parameter_count(dc)},
                           {"loss_mode", to_string(fc.loss_mode)},
                           {"warm_start", !warm.empty()}};
    manifest["members"] = members;
    if (!csv.empty()) {
      std::ostringstream os;
      os << std::setprecision(17) << "member,seed,iteration,loss\n";
      for (std::size_t i = 0; i < fits.size(); ++i) {
        for (const auto& p : fits[i].loss_trace) os << i << ',' << seeds[i] << ',' << p.iteration << ',' << p.loss << '\n';
      }
      write_text(csv, os.str());
      outputs["loss_csv"] = csv;
    }
  } else {
    throw UsageError("unknown method '" + method + "' (expected convdecoder, deepdecoder, tv or zero_fill)");
  }

  write_array(out_path, to_array(image));
  const std::string gt = text(cfg, "gt");
  if (!gt.empty()) {
    const auto truth = read_images(gt);
    if (truth.size() != 1) throw DimensionError("--gt must hold a single image");
    const MetricReport rep = evaluate({image}, truth, norm, EvalMode::image);
    std::string metrics_path = text(cfg, "metrics");
    if (metrics_path.empty()) metrics_path = with_suffix(out_path, ".metrics.json");
    write_json_file(metrics_path, to_json(rep));
    outputs["metrics"] = metrics_path;
  }
  manifest["outputs"] = outputs;
  manifest["timestamps"] = timestamps(t0, started);
  std::string manifest_path = text(cfg, "manifest");
  if (manifest_path.empty()) manifest_path = with_suffix(out_path, ".manifest.json");
  write_json_file(manifest_path, manifest);
  out << out_path << '\n';
}

void cmd_autotune(json cfg, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_timestamp();
  const std::string out_path = required_text(cfg, "out");
  const std::uint64_t seed = resolve_seed(cfg);
  const Inputs in = read_inputs(cfg);
  const SensitivityMaps* maps = in.maps ? &*in.maps : nullptr;

  HyperGrid grid;
  const std::string grid_path = text(cfg, "grid");
  if (grid_path.empty()) {
    grid = default_hyper_grid();
  } else {
    json g = read_json_file(grid_path);
    if (g.is_object()) {
      for (const auto& [key, value] : g.items()) {
        if (key != "configs") throw UsageError(grid_path + ": unknown grid key '" + key + "'");
      }
      g = g.value("configs", json::array());
    }
    if (!g.is_array() || g.empty()) throw UsageError(grid_path + ": grid must be a nonempty list of configs");
    for (const auto& e : g) {
      if (!e.is_object()) throw UsageError(grid_path + ": grid entries must be objects");
      for (const auto& [key, value] : e.items()) {
        if (key != "n_layers" && key != "channels" && key != "sens") {
          throw UsageError(grid_path + ": unknown grid entry key '" + key + "'");
        }
        if (!value.is_number_integer() || value.get<long long>() < 0) {
          throw UsageError(grid_path + ": grid value '" + key + "' must be a non-negative integer");
        }
      }
      HyperConfig h;
      h.n_layers = e.value("n_layers", 5);
      h.channels = e.value("channels", 64);
      h.sens = e.value("sens", 1) != 0;
      grid.push_back(h);
    }
  }

  DecoderConfig base = decoder_from(cfg, parse_arch(cfg["method"].get<std::string>()), in.y.height(), in.y.width());
  base.seed = seed;
  FitConfig fc;
  fc.iterations = positive(cfg, "iters");
  fc.lr = cfg["lr"].get<double>();
  fc.loss_mode = in.y.coils() == 1 ? LossMode::single_coil : LossMode::coilwise;
  AutotuneOptions opt;
  opt.q = cfg["q"].get<double>();
  opt.folds = positive(cfg, "folds");
  opt.seed = seed;
  opt.jobs = positive(cfg, "jobs");
  const std::string scheme = cfg["holdout"].get<std::string>();
  if (scheme != "columns" && scheme != "samples") throw UsageError("holdout must be columns or samples");
  opt.holdout.scheme = scheme == "columns" ? HoldoutScheme::columns : HoldoutScheme::samples;
  opt.holdout.protect_center = cfg["protect_center"].get<bool>();

  const AutotuneResult result = autotune(grid, in.y, maps, base, fc, opt);
  json table = to_json(result);
  table["q"] = opt.q;
  table["folds"] = opt.folds;
  table["seed"] = seed;
  write_json_file(out_path, table);

  const HyperConfig& h = result.chosen();
  json chosen = {{"method", cfg["method"]},
                 {"layers", h.n_layers},
                 {"channels", h.channels},
                 {"loss", h.sens ? "sensmap" : (in.y.coils() == 1 ? "single_coil" : "coilwise")},
                 {"in_channels", cfg["in_channels"]},
                 {"in_height", cfg["in_height"]},
                 {"in_width", cfg["in_width"]},
                 {"size_rule", cfg["size_rule"]},
                 {"iters", cfg["iters"]},
                 {"lr", cfg["lr"]},
                 {"seed", seed}};
  std::string chosen_path = text(cfg, "chosen");
  if (chosen_path.empty()) chosen_path = with_suffix(out_path, ".chosen.json");
  write_json_file(chosen_path, chosen);

  std::string manifest_path = text(cfg, "manifest");
  if (manifest_path.empty()) manifest_path = with_suffix(out_path, ".manifest.json");
  write_json_file(manifest_path, {{"command", "autotune"},
                                  {"version", kVersion},
                                  {"config", cfg},
                                  {"outputs", {{"table", out_path}, {"chosen", chosen_path}}},
                                  {"fits", grid.size() * opt.folds},
                                  {"timestamps", timestamps(t0, started)}});
  out << chosen_path << '\n';
}

void cmd_eval(json cfg, std::ostream& out) {
  const auto recon_paths = cfg["recon"].get<std::vector<std::string>>();
  const auto gt_paths = cfg["gt"].get<std::vector<std::string>>();
  if (recon_paths.empty() || gt_paths.empty()) throw UsageError("eval needs --recon and --gt");
  std::vector<RealGrid> recon, gt;
  for (const auto& p : recon_paths) {
    auto s = read_images(p);
    recon.insert(recon.end(), s.begin(), s.end());
  }
  for (const auto& p : gt_paths) {
    auto s = read_images(p);
    gt.insert(gt.end(), s.begin(), s.end());
  }
  const MetricReport rep = evaluate(recon, gt, parse_normalization(cfg["norm"].get<std::string>()),
                                    parse_eval_mode(cfg["mode"].get<std::string>()));
  const json j = to_json(rep);
  const std::string path = text(cfg, "out");
  if (path.empty()) {
    out << j.dump(2) << '\n';
  } else {
    write_json_file(path, j);
    out << path << '\n';
  }
}

}  // namespace umri::cli
