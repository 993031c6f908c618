#pragma once

// Command-line front end. Kept in a header so the test suite can drive it
// in-process with the same argv a user would type.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "specrec/compare.hpp"
#include "specrec/fixtures.hpp"
#include "specrec/io.hpp"
#include "specrec/report.hpp"

namespace specrec::cli {

namespace fs = std::filesystem;

/// Thrown for bad flag combinations discovered after parsing; maps to exit 2.
struct UsageError : Error {
  using Error::Error;
};

struct SceneConfig {
  std::string name;
  std::string cube;                       // raw container or PNG directory
  std::optional<SyntheticSpec> synthetic;  // used when `cube` is empty
};

struct CliConfig {
  SolverParams params;
  std::string cube, mask, dictionary, measurement, truth, reference, estimate, regions, manifest;
  std::string out_dir = ".";
  std::string name;
  std::string method = "csc-tv";
  std::string format = "csv";
  std::uint64_t seed = 7;
  std::uint64_t noise_seed = 11;
  double density = 0.5;
  long shear_step = 1;
  std::size_t width = 64, height = 64, bands = 0;
  bool no_timing = false;
  std::vector<SceneConfig> scenes;
  std::vector<std::string> methods;
};

namespace detail {

template <class T>
void take(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

inline SyntheticSpec synthetic_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  take(j, "width", s.width);
  take(j, "height", s.height);
  take(j, "bands", s.bands);
  take(j, "seed", s.seed);
  take(j, "patches", s.patches);
  take(j, "texture_amplitude", s.texture_amplitude);
  take(j, "texture_period", s.texture_period);
  return s;
}

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "beta", "rho", "kappa", "outer_iters", "inner_iters", "tv_iters", "lowpass_weight",
      "gram_epsilon", "noise_sigma", "cube", "mask", "dictionary", "measurement", "truth",
      "reference", "estimate", "regions", "manifest", "out_dir", "name", "method", "format",
      "seed", "noise_seed", "density", "shear_step", "width", "height", "bands", "no_timing",
      "scenes", "methods"};
  return keys;
}

}  // namespace detail

/// Fills `cfg` from a JSON object whose keys mirror the long flag names
/// (underscores instead of dashes). Unknown keys are rejected.
inline void apply_config_json(const nlohmann::json& j, CliConfig& cfg) {
  using detail::take;
  if (!j.is_object()) throw FormatError("config: top level must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    const auto& keys = detail::known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw FormatError("config: unknown key \"" + key + "\"");
  }
  auto& p = cfg.params;
  take(j, "beta", p.beta);
  take(j, "rho", p.rho);
  take(j, "kappa", p.kappa);
  take(j, "outer_iters", p.outer_iters);
  take(j, "inner_iters", p.inner_iters);
  take(j, "tv_iters", p.tv_iters);
  take(j, "lowpass_weight", p.lowpass_weight);
  take(j, "gram_epsilon", p.gram_epsilon);
  take(j, "noise_sigma", p.noise_sigma);
  take(j, "cube", cfg.cube);
  take(j, "mask", cfg.mask);
  take(j, "dictionary", cfg.dictionary);
  take(j, "measurement", cfg.measurement);
  take(j, "truth", cfg.truth);
  take(j, "reference", cfg.reference);
  take(j, "estimate", cfg.estimate);
  take(j, "regions", cfg.regions);
  take(j, "manifest", cfg.manifest);
  take(j, "out_dir", cfg.out_dir);
  take(j, "name", cfg.name);
  take(j, "method", cfg.method);
  take(j, "format", cfg.format);
  take(j, "seed", cfg.seed);
  take(j, "noise_seed", cfg.noise_seed);
  take(j, "density", cfg.density);
  take(j, "shear_step", cfg.shear_step);
  take(j, "width", cfg.width);
  take(j, "height", cfg.height);
  take(j, "bands", cfg.bands);
  take(j, "no_timing", cfg.no_timing);
  take(j, "methods", cfg.methods);
  if (j.contains("scenes")) {
    cfg.scenes.clear();
    for (const auto& s : j.at("scenes")) {
      SceneConfig sc;
      take(s, "name", sc.name);
      take(s, "cube", sc.cube);
      if (s.contains("synthetic")) sc.synthetic = detail::synthetic_from_json(s.at("synthetic"));
      if (sc.name.empty()) throw FormatError("config: every scene needs a name");
      if (sc.cube.empty() && !sc.synthetic)
        throw FormatError("config: scene \"" + sc.name + "\" needs \"cube\" or \"synthetic\"");
      cfg.scenes.push_back(std::move(sc));
    }
  }
}

inline CliConfig load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string() + " (--config)");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  CliConfig cfg;
  apply_config_json(j, cfg);
  return cfg;
}

/// Finds `--config PATH` or `--config=PATH` anywhere in argv.
inline std::optional<std::string> scan_config_flag(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    std::string_view a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.starts_with("--config=")) return std::string(a.substr(9));
  }
  return std::nullopt;
}

/// Output names must be bare file names so nothing lands outside --out-dir.
inline void check_plain_name(const std::string& name, const char* flag) {
  if (name.empty() || name == "." || name == ".." ||
      name.find_first_of("/\\") != std::string::npos)
    throw UsageError(std::string(flag) + " must be a plain file name, got \"" + name + "\"");
}

inline fs::path output_path(const CliConfig& cfg, const std::string& name, const char* flag) {
  check_plain_name(name, flag);
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / name;
}

inline std::string stem_of(const std::string& name) { return fs::path(name).stem().string(); }

inline void require_flag(const std::string& value, const char* flag, const char* what) {
  if (value.empty()) throw UsageError(std::string(what) + " requires " + flag);
}

inline void require_file(const std::string& path, const char* flag) {
  if (!fs::exists(path)) throw DataError("file not found: \"" + path + "\" (" + flag + ")");
}

inline std::vector<std::string> read_manifest(const std::string& path) {
  if (path.empty()) return {};
  require_file(path, "--manifest");
  std::ifstream in(path);
  std::vector<std::string> names;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) names.push_back(line);
  return names;
}

/// A mask file with one plane is sheared into `bands` planes; a file with
/// one plane per band is used as is.
inline SystemMasks load_system(const CliConfig& cfg, std::size_t bands) {
  require_file(cfg.mask, "--mask");
  SpectralCube planes = load_mask_planes(cfg.mask);
  if (planes.bands() == 1) return build_system(extract_band(planes, 0), bands, cfg.shear_step);
  if (planes.bands() != bands)
    throw ShapeError(cfg.mask + ": mask has " + std::to_string(planes.bands()) +
                     " planes, expected 1 or " + std::to_string(bands));
  return SystemMasks(std::move(planes));
}

inline Method parse_method_flag(const std::string& s) {
  try {
    return parse_method(s);
  } catch (const ParameterError& e) {
    throw UsageError(std::string("--method: ") + e.what());
  }
}

inline std::vector<Method> methods_of(const CliConfig& cfg) {
  std::vector<Method> out;
  if (cfg.methods.empty()) return {Method::GapTvOnly, Method::CscWithoutTv, Method::CscWithTv};
  for (const auto& m : cfg.methods) out.push_back(parse_method_flag(m));
  return out;
}

inline bool needs_dictionary(const std::vector<Method>& ms) {
  for (Method m : ms)
    if (m != Method::GapTvOnly) return true;
  return false;
}

inline std::optional<ConvDictionary> load_dictionary_flag(const CliConfig& cfg, bool needed,
                                                          const std::string& what) {
  if (!needed) return std::nullopt;
  if (cfg.dictionary.empty())
    throw DataError(what + " needs a dictionary: pass --dictionary PATH");
  require_file(cfg.dictionary, "--dictionary");
  return load_dictionary(cfg.dictionary);
}

inline std::vector<Region> read_regions(const std::string& path,
                                        std::vector<std::string>& labels) {
  require_file(path, "--regions");
  std::ifstream in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!j.is_array()) throw FormatError(path + ": regions file must be a JSON list");
  std::vector<Region> out;
  for (const auto& r : j) {
    Region reg{r.at("x0").get<std::size_t>(), r.at("y0").get<std::size_t>(),
               r.at("w").get<std::size_t>(), r.at("h").get<std::size_t>()};
    labels.push_back(r.contains("name") ? r.at("name").get<std::string>()
                                        : "region" + std::to_string(out.size()));
    out.push_back(reg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

inline void cmd_mask_gen(const CliConfig& cfg, std::ostream& out) {
  const auto path = output_path(cfg, cfg.name.empty() ? "mask.srec" : cfg.name, "--name");
  save_mask(generate_mask(cfg.width, cfg.height, cfg.seed, cfg.density), path);
  out << "wrote " << path.string() << '\n';
}

inline void cmd_simulate(const CliConfig& cfg, std::ostream& out) {
  require_flag(cfg.cube, "--cube", "simulate");
  require_file(cfg.cube, "--cube");
  const SpectralCube cube = normalize_cube(load_cube_any(cfg.cube, read_manifest(cfg.manifest)));
  SystemMasks sys = cfg.mask.empty()
                        ? build_system(generate_mask(cube.width(), cube.height(), cfg.seed,
                                                     cfg.density),
                                       cube.bands(), cfg.shear_step)
                        : load_system(cfg, cube.bands());
  const Measurement y = add_noise(forward(sys, cube), cfg.params.noise_sigma, cfg.noise_seed);
  const std::string name = cfg.name.empty() ? "measurement.srec" : cfg.name;
  const auto path = output_path(cfg, name, "--name");
  save_measurement(y, path);
  const auto sys_path = output_path(cfg, stem_of(name) + "_system.srec", "--name");
  save_system(sys, sys_path);
  out << "wrote " << path.string() << " and " << sys_path.string() << '\n';
}

inline void cmd_reconstruct(const CliConfig& cfg, std::ostream& out) {
  require_flag(cfg.measurement, "--measurement", "reconstruct");
  require_flag(cfg.mask, "--mask", "reconstruct");
  const Method method = parse_method_flag(cfg.method);
  require_file(cfg.measurement, "--measurement");
  const Measurement y = load_measurement(cfg.measurement);

  std::optional<SpectralCube> truth;
  if (!cfg.truth.empty()) {
    require_file(cfg.truth, "--truth");
    truth = load_cube_any(cfg.truth);
  }
  std::size_t bands = cfg.bands;
  if (bands == 0 && truth) bands = truth->bands();
  if (bands == 0) {
    require_file(cfg.mask, "--mask");
    bands = load_mask_planes(cfg.mask).bands();
    if (bands == 1)
      throw UsageError("reconstruct: a single-plane mask needs --bands (or --truth)");
  }
  const SystemMasks sys = load_system(cfg, bands);
  const auto dict = load_dictionary_flag(cfg, method != Method::GapTvOnly,
                                         "method " + std::string(method_name(method)));

  const std::string name = cfg.name.empty() ? "reconstruction.srec" : cfg.name;
  const auto cube_path = output_path(cfg, name, "--name");
  const auto trace_path = output_path(cfg, stem_of(name) + "_trace.csv", "--name");

  const Reconstruction r =
      reconstruct(sys, y, dict ? &*dict : nullptr, cfg.params, method, truth ? &*truth : nullptr);
  save_cube(r.cube, cube_path);
  std::ofstream trace(trace_path, std::ios::binary);
  write_run_trace_csv(trace, r.trace, !cfg.no_timing);
  if (!trace) throw Error("write failed: " + trace_path.string());
  out << "wrote " << cube_path.string() << " and " << trace_path.string() << '\n';
}

inline void cmd_metrics(const CliConfig& cfg, std::ostream& out) {
  require_flag(cfg.reference, "--reference", "metrics");
  require_flag(cfg.estimate, "--estimate", "metrics");
  if (cfg.format != "csv" && cfg.format != "json")
    throw UsageError("--format must be csv or json, got \"" + cfg.format + "\"");
  require_file(cfg.reference, "--reference");
  require_file(cfg.estimate, "--estimate");
  const SpectralCube ref = load_cube_any(cfg.reference);
  const SpectralCube est = load_cube_any(cfg.estimate);

  std::vector<NamedMetrics> rows{{"all", evaluate(ref, est)}};
  if (!cfg.regions.empty()) {
    std::vector<std::string> labels;
    const auto regions = read_regions(cfg.regions, labels);
    for (std::size_t i = 0; i < regions.size(); ++i)
      rows.push_back({labels[i], evaluate_region(ref, est, regions[i])});
  }
  const std::string name = cfg.name.empty() ? "metrics." + cfg.format : cfg.name;
  const auto path = output_path(cfg, name, "--name");
  std::ofstream f(path, std::ios::binary);
  if (cfg.format == "csv")
    write_metrics_csv(f, rows);
  else
    f << metrics_json(rows).dump(2) << '\n';
  if (!f) throw Error("write failed: " + path.string());
  write_metrics_csv(out, rows);
}

inline void cmd_compare(const CliConfig& cfg, std::ostream& out) {
  std::vector<SceneConfig> scene_cfgs = cfg.scenes;
  if (scene_cfgs.empty()) {
    require_flag(cfg.cube, "--cube (or \"scenes\" in --config)", "compare");
    scene_cfgs.push_back({stem_of(cfg.cube), cfg.cube, std::nullopt});
  }
  std::vector<Scene> scenes;
  for (const auto& sc : scene_cfgs) {
    check_plain_name(sc.name, "scene name");
    if (sc.synthetic) {
      scenes.push_back({sc.name, make_synthetic_cube(*sc.synthetic)});
    } else {
      require_file(sc.cube, "scene cube");
      scenes.push_back({sc.name, normalize_cube(load_cube_any(sc.cube))});
    }
  }
  const auto methods = methods_of(cfg);
  const auto dict = load_dictionary_flag(cfg, needs_dictionary(methods), "compare");
  const AcquisitionSetup acq{cfg.seed, cfg.density, cfg.shear_step, cfg.params.noise_sigma,
                             cfg.noise_seed};
  const std::string name = cfg.name.empty() ? "compare.csv" : cfg.name;
  const auto csv_path = output_path(cfg, name, "--name");

  const auto rows = compare_methods(
      scenes, methods, acq, dict ? &*dict : nullptr, cfg.params,
      [&](const std::string& scene, Method m, const SpectralCube& cube) {
        save_cube(cube, output_path(cfg, scene + "_" + std::string(method_name(m)) + ".srec",
                                    "scene name"));
      });
  std::ofstream f(csv_path, std::ios::binary);
  write_compare_csv(f, rows, !cfg.no_timing);
  if (!f) throw Error("write failed: " + csv_path.string());
  write_compare_csv(out, rows, !cfg.no_timing);
}

inline std::array<std::size_t, 3> parse_rgb(const std::string& s) {
  std::array<std::size_t, 3> out{};
  std::stringstream ss(s);
  std::string tok;
  std::size_t i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i == 3) break;
    try {
      std::size_t used = 0;
      out[i] = std::stoul(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("--rgb expects three band indices like 20,12,4, got \"" + s + "\"");
    }
    ++i;
  }
  if (i != 3 || std::getline(ss, tok, ','))
    throw UsageError("--rgb expects three band indices like 20,12,4, got \"" + s + "\"");
  return out;
}

inline void cmd_export(const CliConfig& cfg, std::optional<std::size_t> band,
                       const std::string& rgb, std::ostream& out) {
  require_flag(cfg.cube, "--cube", "export");
  if (band && !rgb.empty()) throw UsageError("export: --band and --rgb are exclusive");
  require_file(cfg.cube, "--cube");
  const SpectralCube cube = load_cube_any(cfg.cube, read_manifest(cfg.manifest));
  auto check_band = [&](std::size_t l) {
    if (l >= cube.bands())
      throw DataError("band " + std::to_string(l) + " out of range (cube has " +
                      std::to_string(cube.bands()) + " bands)");
  };
  if (!rgb.empty()) {
    const auto bands = parse_rgb(rgb);
    for (auto l : bands) check_band(l);
    const auto path = output_path(cfg, cfg.name.empty() ? "composite.png" : cfg.name, "--name");
    export_rgb(cube, bands, path);
    out << "wrote " << path.string() << '\n';
  } else if (band) {
    check_band(*band);
    const auto path = output_path(
        cfg, cfg.name.empty() ? "band" + std::to_string(*band) + ".png" : cfg.name, "--name");
    export_png(extract_band(cube, *band), path);
    out << "wrote " << path.string() << '\n';
  } else {
    const std::string stem = cfg.name.empty() ? "band" : stem_of(cfg.name);
    const int digits = static_cast<int>(std::to_string(cube.bands() - 1).size());
    for (std::size_t l = 0; l < cube.bands(); ++l) {
      std::string idx = std::to_string(l);
      idx.insert(0, static_cast<std::size_t>(digits) - idx.size(), '0');
      export_png(extract_band(cube, l), output_path(cfg, stem + "_" + idx + ".png", "--name"));
    }
    out << "wrote " << cube.bands() << " PNG files to " << cfg.out_dir << '\n';
  }
}

// ---------------------------------------------------------------------------

inline void add_solver_flags(CLI::App* app, SolverParams& p) {
  app->add_option("--beta", p.beta, "TV weight");
  app->add_option("--rho", p.rho, "ADMM penalty");
  app->add_option("--kappa", p.kappa, "cross-band group sparsity weight");
  app->add_option("--outer-iters", p.outer_iters, "outer rounds");
  app->add_option("--inner-iters", p.inner_iters, "ADMM iterations per round");
  app->add_option("--tv-iters", p.tv_iters, "Chambolle iterations per TV call");
  app->add_option("--lowpass-weight", p.lowpass_weight, "low-pass split weight");
  app->add_option("--gram-epsilon", p.gram_epsilon, "pixels with smaller gram are unobserved");
}

/// Returns the process exit code: 0 success, 1 data error, 2 usage error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CliConfig cfg;
  try {
    if (auto path = scan_config_flag(argc, argv)) cfg = load_config_file(*path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  CLI::App app{"Snapshot spectral cube reconstruction", "specrec"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with defaults; flags override it");
  app.add_option("--out-dir", cfg.out_dir, "directory receiving every output file");
  app.add_option("--name", cfg.name, "output file name (plain name, no directories)");

  auto* mask_gen = app.add_subcommand("mask-gen", "write a random binary mask");
  mask_gen->add_option("--width", cfg.width, "mask width");
  mask_gen->add_option("--height", cfg.height, "mask height");
  mask_gen->add_option("--seed", cfg.seed, "RNG seed");
  mask_gen->add_option("--density", cfg.density, "fraction of open pixels");

  auto* simulate = app.add_subcommand("simulate", "coded measurement of a cube");
  simulate->add_option("--cube", cfg.cube, "cube container or directory of band PNGs");
  simulate->add_option("--manifest", cfg.manifest, "text file listing band PNGs in order");
  simulate->add_option("--mask", cfg.mask, "mask container (base plane or one per band)");
  simulate->add_option("--seed", cfg.seed, "mask seed when --mask is omitted");
  simulate->add_option("--density", cfg.density, "mask density when --mask is omitted");
  simulate->add_option("--shear", cfg.shear_step, "per-band mask shift in pixels");
  simulate->add_option("--sigma", cfg.params.noise_sigma, "Gaussian noise sigma");
  simulate->add_option("--noise-seed", cfg.noise_seed, "noise RNG seed");

  auto* recon = app.add_subcommand("reconstruct", "recover a cube from a measurement");
  recon->add_option("--measurement", cfg.measurement, "measurement container");
  recon->add_option("--mask", cfg.mask, "mask container (base plane or one per band)");
  recon->add_option("--bands", cfg.bands, "band count when the mask has one plane");
  recon->add_option("--shear", cfg.shear_step, "per-band mask shift in pixels");
  recon->add_option("--dictionary", cfg.dictionary, "convolutional dictionary container");
  recon->add_option("--method", cfg.method, "gaptv, csc or csc-tv");
  recon->add_option("--truth", cfg.truth, "ground truth cube for per-iteration metrics");
  recon->add_flag("--no-timing", cfg.no_timing, "write 0 in the seconds column");
  add_solver_flags(recon, cfg.params);

  auto* metrics = app.add_subcommand("metrics", "PSNR / SSIM / SAM between two cubes");
  metrics->add_option("--reference", cfg.reference, "ground truth cube");
  metrics->add_option("--estimate", cfg.estimate, "estimated cube");
  metrics->add_option("--regions", cfg.regions, "JSON list of {x0,y0,w,h[,name]}");
  metrics->add_option("--format", cfg.format, "csv or json");

  auto* compare = app.add_subcommand("compare", "run several methods on several scenes");
  compare->add_option("--cube", cfg.cube, "single scene when the config lists none");
  compare->add_option("--dictionary", cfg.dictionary, "convolutional dictionary container");
  compare->add_option("--seed", cfg.seed, "mask seed");
  compare->add_option("--density", cfg.density, "mask density");
  compare->add_option("--shear", cfg.shear_step, "per-band mask shift in pixels");
  compare->add_option("--sigma", cfg.params.noise_sigma, "Gaussian noise sigma");
  compare->add_option("--noise-seed", cfg.noise_seed, "noise RNG seed");
  compare->add_option("--methods", cfg.methods, "subset of gaptv csc csc-tv");
  compare->add_flag("--no-timing", cfg.no_timing, "write 0 in the seconds column");
  add_solver_flags(compare, cfg.params);

  std::optional<std::size_t> band;
  std::string rgb;
  auto* exp = app.add_subcommand("export", "write bands or an RGB composite as 16-bit PNG");
  exp->add_option("--cube", cfg.cube, "cube container or directory of band PNGs");
  exp->add_option("--manifest", cfg.manifest, "text file listing band PNGs in order");
  exp->add_option("--band", band, "single band index");
  exp->add_option("--rgb", rgb, "three band indices r,g,b");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 2;
  }

  try {
    if (*mask_gen) cmd_mask_gen(cfg, out);
    else if (*simulate) cmd_simulate(cfg, out);
    else if (*recon) cmd_reconstruct(cfg, out);
    else if (*metrics) cmd_metrics(cfg, out);
    else if (*compare) cmd_compare(cfg, out);
    else if (*exp) cmd_export(cfg, band, rgb, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace specrec::cli
