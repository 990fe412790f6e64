#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "powerdoa/io.hpp"
#include "powerdoa/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace powerdoa;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input:
    case ErrorCode::io:
      return 2;
    case ErrorCode::non_convergence:
      return 3;
    case ErrorCode::no_signal:
    case ErrorCode::unidentifiable:
    case ErrorCode::model_degenerate:
      return 4;
  }
  return 2;
}

fs::path resolve(const fs::path& base, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? p : base / p;
}

json load_config(const fs::path& path) {
  const std::string text = io::read_file(path);
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded()) {
    throw_error(ErrorCode::io, path.string() + ": invalid JSON");
  }
  if (!parsed.is_object()) {
    throw_error(ErrorCode::io, path.string() + ": config must be a JSON object");
  }
  return parsed;
}

void reject_unknown_keys(const json& object, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  for (const auto& [key, value] : object.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* name) { return key == name; })) {
      throw_error(ErrorCode::invalid_input, context + ": unknown config key '" + key + "'");
    }
  }
}

template <typename T>
T get_or(const json& object, const char* key, T fallback) {
  const auto it = object.find(key);
  return it == object.end() ? fallback : it->get<T>();
}

template <typename T>
T get_required(const json& object, const char* key, const std::string& context) {
  const auto it = object.find(key);
  if (it == object.end()) {
    throw_error(ErrorCode::invalid_input, context + ": missing required key '" + key + "'");
  }
  return it->get<T>();
}

void check_format_version(const json& config, const std::string& context) {
  if (get_or<int>(config, "format_version", 1) != 1) {
    throw_error(ErrorCode::invalid_input, context + ": unsupported format_version");
  }
}

GroundTruthArray array_from_config(const json& config) {
  reject_unknown_keys(config,
                      {"n_mics", "kappa", "sharpness", "sigma2", "gain_variation",
                       "irregularity", "pattern_seed"},
                      "array");
  const int n_mics = get_or<int>(config, "n_mics", 8);
  if (n_mics < 1) {
    throw_error(ErrorCode::invalid_input, "array.n_mics must be >= 1");
  }
  return GroundTruthArray::circular_cardioid(
      n_mics, get_or<double>(config, "kappa", 0.1), get_or<double>(config, "sharpness", 2.5),
      get_or<double>(config, "sigma2", 1e-4), get_or<double>(config, "gain_variation", 0.1),
      get_or<double>(config, "irregularity", 0.05), get_or<uint64_t>(config, "pattern_seed", 1));
}

NoiseMode noise_mode_from_name(const std::string& name) {
  if (name == "none") return NoiseMode::none;
  if (name == "gaussian") return NoiseMode::gaussian;
  if (name == "chisq") return NoiseMode::chisq;
  throw_error(ErrorCode::invalid_input, "scenario.noise_mode: unknown mode '" + name + "'");
}

ScenarioConfig scenario_from_config(const json& config, uint64_t seed) {
  reject_unknown_keys(config,
                      {"signal_type", "alpha", "duration_s", "sample_rate_hz",
                       "train_angle_count", "validation_angle_count", "validation_offset_deg",
                       "noise_mode"},
                      "scenario");
  ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.signal_type = signal_type_from_name(get_or<std::string>(config, "signal_type", "wideband"));
  cfg.alpha = get_or<double>(config, "alpha", 1.0);
  cfg.duration_s = get_or<double>(config, "duration_s", 1.0);
  cfg.sample_rate = get_or<double>(config, "sample_rate_hz", 48000.0);
  cfg.noise_mode = noise_mode_from_name(get_or<std::string>(config, "noise_mode", "chisq"));

  const int train_count = get_or<int>(config, "train_angle_count", 24);
  if (train_count < 1) {
    throw_error(ErrorCode::invalid_input, "scenario.train_angle_count must be >= 1");
  }
  cfg.train_angles = uniform_angle_grid(train_count);

  const int validation_count = get_or<int>(config, "validation_angle_count", 24);
  if (validation_count < 0) {
    throw_error(ErrorCode::invalid_input, "scenario.validation_angle_count must be >= 0");
  }
  const double offset =
      get_or<double>(config, "validation_offset_deg", 7.5) * kPi / 180.0;
  if (validation_count > 0) {
    for (const Angle& a : uniform_angle_grid(validation_count)) {
      cfg.validation_angles.emplace_back(a.radians() + offset);
    }
  }
  cfg.validate();
  return cfg;
}

SolverConfig solver_from_config(const json& config) {
  SolverConfig solver;
  if (const auto it = config.find("solver"); it != config.end()) {
    reject_unknown_keys(*it,
                        {"max_iterations", "relative_loss_tolerance", "gradient_tolerance",
                         "initial_damping_scale", "ridge"},
                        "solver");
    solver.max_iterations = get_or<int>(*it, "max_iterations", solver.max_iterations);
    solver.relative_loss_tolerance =
        get_or<double>(*it, "relative_loss_tolerance", solver.relative_loss_tolerance);
    solver.gradient_tolerance =
        get_or<double>(*it, "gradient_tolerance", solver.gradient_tolerance);
    solver.initial_damping_scale =
        get_or<double>(*it, "initial_damping_scale", solver.initial_damping_scale);
    solver.ridge = get_or<double>(*it, "ridge", solver.ridge);
  }
  return solver;
}

int cmd_simulate(const fs::path& config_path, const std::string& out_dir) {
  const json config = load_config(config_path);
  reject_unknown_keys(config, {"format_version", "seed", "array", "scenario"}, "simulate");
  check_format_version(config, "simulate");
  const uint64_t seed = get_or<uint64_t>(config, "seed", 1);
  const GroundTruthArray array = array_from_config(get_or<json>(config, "array", json::object()));
  const ScenarioConfig cfg =
      scenario_from_config(get_or<json>(config, "scenario", json::object()), seed);

  const fs::path base = out_dir.empty() ? config_path.parent_path() : fs::path(out_dir);
  fs::create_directories(base.empty() ? fs::path(".") : base);

  const TrainingSet set = generate_training_set(array, cfg);
  io::save_training_csv(base / "train.csv", set);
  std::cout << "wrote " << (base / "train.csv").string() << " (" << set.n_angles()
            << " angles, " << set.n_mics() << " mics)\n";
  io::save_sidecar_json(base / "train_noise.json", set);
  std::cout << "wrote " << (base / "train_noise.json").string() << "\n";

  for (size_t i = 0; i < cfg.validation_angles.size(); ++i) {
    const uint64_t obs_seed = sub_seed(seed, 2, i);
    const PowerVector obs = generate_observation(array, cfg.validation_angles[i], cfg, obs_seed);
    char name[32];
    std::snprintf(name, sizeof(name), "obs_%03zu.json", i);
    io::save_power_json(base / name, obs);
    std::cout << "wrote " << (base / name).string() << " (angle "
              << io::format_double(cfg.validation_angles[i].degrees()) << " deg)\n";
  }

  json truth;
  truth["validation_angles_deg"] = json::array();
  for (const Angle& a : cfg.validation_angles) {
    truth["validation_angles_deg"].push_back(a.degrees());
  }
  truth["alpha"] = cfg.alpha;
  io::write_file_atomic(base / "truth.json", truth.dump(2) + "\n");
  std::cout << "wrote " << (base / "truth.json").string() << "\n";
  return 0;
}

int cmd_train(const fs::path& config_path) {
  const json config = load_config(config_path);
  reject_unknown_keys(
      config, {"format_version", "data_csv", "sidecar_json", "order", "solver", "model_out",
               "report_out"},
      "train");
  check_format_version(config, "train");
  const fs::path base = config_path.parent_path();
  const TrainingSet set = io::load_training_set(
      resolve(base, get_required<std::string>(config, "data_csv", "train")),
      resolve(base, get_required<std::string>(config, "sidecar_json", "train")));
  const int order = get_required<int>(config, "order", "train");
  const SolverConfig solver = solver_from_config(config);

  auto [model, report] = fit(set, order, solver);
  io::save_model_json(resolve(base, get_or<std::string>(config, "model_out", "model.json")),
                      model);
  io::save_fit_report_json(
      resolve(base, get_or<std::string>(config, "report_out", "fit_report.json")), report);
  std::cout << "order " << order << ": loss " << io::format_double(report.loss) << ", "
            << report.iterations << " iterations, "
            << (report.converged ? "converged" : "NOT converged") << "\n";
  if (!report.converged) {
    throw_error(ErrorCode::non_convergence, "fit did not converge (report written)");
  }
  return 0;
}

int cmd_select_order(const fs::path& config_path) {
  const json config = load_config(config_path);
  reject_unknown_keys(config,
                      {"format_version", "data_csv", "sidecar_json", "orders", "solver",
                       "model_out", "report_out", "scores_out"},
                      "select-order");
  check_format_version(config, "select-order");
  const fs::path base = config_path.parent_path();
  const TrainingSet set = io::load_training_set(
      resolve(base, get_required<std::string>(config, "data_csv", "select-order")),
      resolve(base, get_required<std::string>(config, "sidecar_json", "select-order")));
  const std::vector<int> orders =
      get_required<std::vector<int>>(config, "orders", "select-order");
  const SolverConfig solver = solver_from_config(config);

  const OrderSelection selection = select_order(set, orders, solver);

  json scores;
  scores["best_order"] = selection.best_order;
  json table = json::object();
  for (const auto& [order, bic] : selection.scores) {
    table[std::to_string(order)] = bic;
  }
  scores["bic"] = table;
  json failures = json::object();
  for (const auto& [order, reason] : selection.failures) {
    failures[std::to_string(order)] = reason;
  }
  scores["failures"] = failures;
  io::write_file_atomic(resolve(base, get_or<std::string>(config, "scores_out", "scores.json")),
                        scores.dump(2) + "\n");

  auto [model, report] = fit(set, selection.best_order, solver);
  io::save_model_json(resolve(base, get_or<std::string>(config, "model_out", "model.json")),
                      model);
  io::save_fit_report_json(
      resolve(base, get_or<std::string>(config, "report_out", "fit_report.json")), report);
  std::cout << "selected order " << selection.best_order << " from " << orders.size()
            << " candidates\n";
  return 0;
}

int cmd_estimate(const std::string& model_path, const std::string& obs_path,
                 const std::string& obs_dir, const std::string& out_path, int grid_points,
                 bool refine, double no_signal_factor) {
  const DirectivityModel model = io::load_model_json(model_path);
  EstimateConfig config;
  config.grid_points = grid_points;
  config.refine = refine;
  config.no_signal_factor = no_signal_factor;

  if (!obs_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(obs_dir)) {
      if (entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    std::ostringstream lines;
    int first_error = 0;
    for (const fs::path& file : files) {
      json row;
      row["file"] = file.filename().string();
      try {
        const PowerVector obs = io::load_power_json(file);
        const DoaEstimate est = estimate(model, obs, config);
        row["psi_hat_deg"] = est.psi_hat.degrees();
        row["residual"] = est.residual;
      } catch (const Error& e) {
        row["error"] = error_code_name(e.code());
        if (first_error == 0) {
          first_error = exit_code_for(e.code());
        }
      }
      lines << row.dump() << "\n";
    }
    if (out_path.empty()) {
      std::cout << lines.str();
    } else {
      io::write_file_atomic(out_path, lines.str());
    }
    return first_error;
  }

  const PowerVector obs = io::load_power_json(obs_path);
  std::string text;
  int code = 0;
  try {
    const DoaEstimate est = estimate(model, obs, config);
    text = io::estimate_to_json(est);
  } catch (const Error& e) {
    // The result document carries the failure; estimation errors are part of
    // this command's output contract, not just its exit code.
    if (exit_code_for(e.code()) != 4) {
      throw;
    }
    json row;
    row["error"] = error_code_name(e.code());
    row["message"] = e.what();
    text = row.dump(2) + "\n";
    code = 4;
  }
  std::cout << text;
  if (!out_path.empty()) {
    io::write_file_atomic(out_path, text);
  }
  return code;
}

int cmd_crlb(const std::string& model_path, const std::string& out_path, int grid_points,
             std::optional<double> alpha, std::optional<double> lambda,
             std::optional<double> snr_db) {
  const DirectivityModel model = io::load_model_json(model_path);
  SnrSpec snr = snr_from_model(model).snr;
  if (alpha) {
    snr.alpha = *alpha;
  }
  if (lambda) {
    snr.lambda = *lambda;
  }
  if (snr_db) {
    snr = SnrSpec::from_snr_db(snr.alpha, *snr_db);
  }
  snr.validate();
  const CrlbCurve curve = crlb_curve(model, snr, grid_points);
  const std::string text = io::crlb_curve_to_csv(curve);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    io::write_file_atomic(out_path, text);
    std::cout << "wrote " << out_path << " (" << grid_points << " angles, snr "
              << io::format_double(snr.snr_db()) << " dB)\n";
  }
  return 0;
}

int cmd_benchmark(const fs::path& config_path) {
  const json config = load_config(config_path);
  reject_unknown_keys(config,
                      {"format_version", "seed", "array", "scenario", "model", "trials",
                       "signal_types", "grid_points", "refine", "histogram_bins", "out_prefix"},
                      "benchmark");
  check_format_version(config, "benchmark");
  const fs::path base = config_path.parent_path();
  const uint64_t seed = get_or<uint64_t>(config, "seed", 1);
  const GroundTruthArray array = array_from_config(get_or<json>(config, "array", json::object()));
  const ScenarioConfig cfg =
      scenario_from_config(get_or<json>(config, "scenario", json::object()), seed);
  const DirectivityModel model =
      io::load_model_json(resolve(base, get_required<std::string>(config, "model", "benchmark")));
  const int trials = get_or<int>(config, "trials", 100);

  BenchmarkOptions options;
  if (const auto it = config.find("signal_types"); it != config.end()) {
    options.signal_types.clear();
    for (const json& name : *it) {
      options.signal_types.push_back(signal_type_from_name(name.get<std::string>()));
    }
  }
  options.estimate.grid_points = get_or<int>(config, "grid_points", 720);
  options.estimate.refine = get_or<bool>(config, "refine", true);
  options.histogram_bins = get_or<int>(config, "histogram_bins", 41);

  const BenchmarkReport report = run_benchmark(array, cfg, model, trials, options);
  const fs::path prefix = resolve(base, get_or<std::string>(config, "out_prefix", "bench"));
  io::save_benchmark_outputs(prefix, report);
  for (const SignalSummary& summary : report.signals) {
    std::cout << signal_type_name(summary.signal) << ": rmse "
              << io::format_double(summary.rmse_deg) << " deg, " << summary.n_failed
              << " failed trials\n";
  }
  std::cout << "wrote " << prefix.string() << "_report.json, _trials.csv, _summary.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-based direction-of-arrival estimation toolkit"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "print errors as machine-parsable JSON");

  std::string config_path;
  std::string out_dir;
  auto* simulate =
      app.add_subcommand("simulate", "generate a synthetic training sweep and observations");
  simulate->add_option("--config", config_path, "simulate config JSON")->required();
  simulate->add_option("--out", out_dir, "output directory (default: config directory)");

  auto* train = app.add_subcommand("train", "fit a directivity model from a training sweep");
  train->add_option("--config", config_path, "train config JSON")->required();

  auto* select =
      app.add_subcommand("select-order", "fit candidate orders and pick the BIC minimizer");
  select->add_option("--config", config_path, "select-order config JSON")->required();

  std::string model_path, obs_path, obs_dir, out_path;
  int grid_points = 720;
  bool no_refine = false;
  double no_signal_factor = 1.0;
  auto* est = app.add_subcommand("estimate", "estimate the DOA of an observation");
  est->add_option("--model", model_path, "model JSON")->required();
  est->add_option("--obs", obs_path, "observation power JSON");
  est->add_option("--obs-dir", obs_dir, "directory of observation JSONs (batch mode)");
  est->add_option("--out", out_path, "write the result here as well");
  est->add_option("--grid", grid_points, "grid points over the circle");
  est->add_flag("--no-refine", no_refine, "skip golden-section refinement");
  est->add_option("--no-signal-factor", no_signal_factor, "no-signal gate scale");

  std::string crlb_out;
  int crlb_grid = 360;
  std::optional<double> alpha_override, lambda_override, snr_db_override;
  auto* crlb_cmd = app.add_subcommand("crlb", "evaluate the CRLB curve of a model");
  crlb_cmd->add_option("--model", model_path, "model JSON")->required();
  crlb_cmd->add_option("--out", crlb_out, "output CSV (default: stdout)");
  crlb_cmd->add_option("--grid", crlb_grid, "grid points over the circle");
  crlb_cmd->add_option("--alpha", alpha_override, "override the signal level alpha");
  crlb_cmd->add_option("--lambda", lambda_override, "override the power-noise variance lambda");
  crlb_cmd->add_option("--snr-db", snr_db_override, "set lambda from an SNR in dB");

  auto* bench = app.add_subcommand("benchmark", "Monte-Carlo validation run against a model");
  bench->add_option("--config", config_path, "benchmark config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(config_path, out_dir);
    if (train->parsed()) return cmd_train(config_path);
    if (select->parsed()) return cmd_select_order(config_path);
    if (est->parsed()) {
      if (obs_path.empty() == obs_dir.empty()) {
        throw_error(ErrorCode::invalid_input, "estimate needs exactly one of --obs or --obs-dir");
      }
      return cmd_estimate(model_path, obs_path, obs_dir, out_path, grid_points, !no_refine,
                          no_signal_factor);
    }
    if (crlb_cmd->parsed()) {
      return cmd_crlb(model_path, crlb_out, crlb_grid, alpha_override, lambda_override,
                      snr_db_override);
    }
    if (bench->parsed()) return cmd_benchmark(config_path);
  } catch (const Error& e) {
    if (json_errors) {
      json out;
      out["error"] = error_code_name(e.code());
      out["message"] = e.what();
      std::cout << out.dump() << "\n";
    }
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
