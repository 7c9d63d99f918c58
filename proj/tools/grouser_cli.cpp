// Command-line front end: one subcommand per workflow stage.
#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "grouser/campaign.hpp"
#include "grouser/config.hpp"
#include "grouser/error.hpp"
#include "grouser/estimators.hpp"
#include "grouser/scaling_law.hpp"
#include "grouser/telemetry.hpp"
#include "grouser/terrain_analysis.hpp"

#ifndef GROUSER_CONFIG_DIR
#define GROUSER_CONFIG_DIR "config"
#endif

namespace fs = std::filesystem;
using namespace grouser;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kSimFault = 3, kValidation = 4 };

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config: return kConfig;
    case ErrorCode::Fault: return kSimFault;
    default: return kOther;
  }
}

// An unreadable configuration file is a configuration error.
Json load_config(const fs::path& path) {
  try {
    return load_json_file(path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw Error(ErrorCode::Config, e.what());
    throw;
  }
}

fs::path default_config(const std::string& name) { return fs::path(GROUSER_CONFIG_DIR) / name; }

// --output beats GROUSER_OUTPUT_DIR, which beats the config file.
fs::path resolve_output(const std::string& flag, const fs::path& from_config) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("GROUSER_OUTPUT_DIR"); env && *env) return env;
  return from_config;
}

fs::path relative_to(const fs::path& base_file, const fs::path& p) {
  return p.is_absolute() ? p : base_file.parent_path() / p;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  GROUSER_REQUIRE(out.good(), ErrorCode::Io, "cannot write '" + p.string() + "'");
  return out;
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    const std::string item = csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) {
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw Error(ErrorCode::Config, "not a number: '" + item + "'");
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

ScalingFit load_fit(const std::string& path, bool published) {
  if (published) {
    ScalingFit f;
    f.family = FitFamily::Power;
    f.space = FitSpace::Original;
    f.a = 13.489;
    f.b = -0.228;
    return f;
  }
  GROUSER_REQUIRE(!path.empty(), ErrorCode::Config, "need --fit FILE or --published");
  ScalingFit f;
  from_json(load_config(path), f, "fit");
  return f;
}

struct SimulateOpts {
  std::string config, calibration, controller, terrain, log, trace;
  double height = -1.0;
  double initial = -1.0;
  std::uint64_t seed = 1;
  std::vector<std::string> backdrives;
};

int cmd_simulate(const SimulateOpts& o) {
  const fs::path cal_path = o.calibration.empty() ? default_config("terrain_calibration.json") : fs::path(o.calibration);
  const auto calibration = load_terrain_calibration(cal_path);
  SimConfig sim;
  if (!o.config.empty()) {
    sim = sim_config_from_json(load_config(o.config), calibration);
  } else {
    GROUSER_REQUIRE(!o.terrain.empty() && o.height >= 0.0, ErrorCode::Config,
                    "simulate needs --config FILE or --terrain NAME --height MM");
    sim.terrain = find_terrain(calibration, o.terrain);
    sim.commanded_height_mm = o.height;
    sim.initial_height_mm = o.initial >= 0.0 ? o.initial : o.height;
    sim.seed = o.seed;
    if (!o.controller.empty()) sim.gains = load_controller_gains(o.controller, &sim.servo);
  }
  sim.validate();

  TrialHooks hooks;
  for (const auto& spec : o.backdrives) {
    const auto colon = spec.find(':');
    GROUSER_REQUIRE(colon != std::string::npos, ErrorCode::Config, "backdrive must be TIME_S:DEGREES");
    const auto v = parse_list(spec.substr(0, colon) + "," + spec.substr(colon + 1));
    GROUSER_REQUIRE(v.size() == 2, ErrorCode::Config, "backdrive must be TIME_S:DEGREES");
    hooks.backdrives.emplace_back(v[0], v[1] * std::numbers::pi / 180.0);
  }
  std::vector<ControllerTraceRow> trace;
  if (!o.trace.empty()) hooks.trace = &trace;

  TrialRecord rec = run_trial(sim, make_polar_table(sim), hooks);
  process_trial(rec);
  if (!o.log.empty()) write_trial_log(rec, fs::path(o.log));
  if (!o.trace.empty()) {
    auto out = open_out(o.trace);
    write_controller_trace(out, trace);
  }
  const auto& m = *rec.metrics;
  Json summary{{"terrain", sim.terrain.name},
               {"height_mm", sim.commanded_height_mm},
               {"seed", sim.seed},
               {"outcome", to_string(rec.outcome)},
               {"frames", rec.frames.size()},
               {"slip_est", m.slip_est},
               {"true_slip_mean", rec.true_slip_mean}};
  summary["energy_J"] = m.energy_J ? Json(*m.energy_J) : Json();
  summary["travel_time_s"] = m.travel_time_s ? Json(*m.travel_time_s) : Json();
  std::cout << summary.dump(2) << '\n';
  std::size_t desync = 0;
  for (const auto& f : rec.frames) desync += (f.flags & kFlagDesync) ? 1 : 0;
  if (desync > 0) {
    std::cerr << "simulate: " << desync << " frames flagged encoder desync\n";
    return kSimFault;
  }
  return kOk;
}

struct CampaignOpts {
  std::string config, calibration, output;
  int threads = -1;
  int trials = 0;
  bool logs = false;
};

int cmd_campaign(const CampaignOpts& o) {
  const fs::path cfg_path = o.config.empty() ? default_config("campaign.json") : fs::path(o.config);
  const Json j = load_config(cfg_path);
  CampaignConfig cfg = campaign_config_from_json(j);

  fs::path cal_path = o.calibration;
  if (cal_path.empty()) {
    cal_path = j.contains("calibration") ? relative_to(cfg_path, j.at("calibration").get<std::string>())
                                         : default_config("terrain_calibration.json");
  }
  GROUSER_REQUIRE(fs::exists(cal_path), ErrorCode::Config, "terrain calibration '" + cal_path.string() + "' not found");
  const auto calibration = load_terrain_calibration(cal_path);

  if (j.contains("controller") && !cfg.sim_overrides.contains("gains")) {
    ServoLimits servo;
    const PidGains g = load_controller_gains(relative_to(cfg_path, j.at("controller").get<std::string>()), &servo);
    cfg.sim_overrides["gains"] = to_json(g);
    if (!cfg.sim_overrides.contains("servo")) cfg.sim_overrides["servo"] = to_json(servo);
  }
  if (o.threads >= 0) cfg.threads = o.threads;
  if (o.trials > 0) cfg.trials_per_config = o.trials;
  if (o.logs) cfg.write_logs = true;
  cfg.output_dir = resolve_output(o.output, cfg.output_dir);
  cfg.validate();

  const CampaignReport report = run_campaign(cfg, calibration);
  report.write_csv(std::cout);
  std::size_t faults = 0;
  for (const auto& c : report.cells) faults += c.faults;
  if (!cfg.output_dir.empty()) {
    auto csv = open_out(cfg.output_dir / "report.csv");
    report.write_csv(csv);
    Json summary = report.summary_json();
    summary["config"] = to_json(cfg);
    save_json_file(cfg.output_dir / "summary.json", summary);
    std::cerr << "campaign: " << report.trials << " trials, report in " << cfg.output_dir.string() << '\n';
  }
  if (faults > 0) {
    std::cerr << "campaign: " << faults << " trials faulted\n";
    return kSimFault;
  }
  return kOk;
}

int cmd_analyze_psd(const std::string& input, const std::string& percentiles, bool linear, const std::string& curve_out) {
  std::ifstream in(input);
  GROUSER_REQUIRE(in.good(), ErrorCode::Io, "cannot open '" + input + "'");
  const auto data = SieveDataset::read_csv(in);
  const auto curve = build_cumulative_curve(data);
  const auto space = linear ? InterpSpace::Linear : InterpSpace::LogDiameter;
  std::cout << "percent,diameter_mm\n";
  for (double p : parse_list(percentiles)) std::cout << p << ',' << curve.percentile_diameter(p, space) << '\n';
  if (!curve_out.empty()) {
    auto out = open_out(curve_out);
    curve.write_csv(out);
  }
  return kOk;
}

int cmd_fit(const std::string& points_path, const std::string& space_name, const std::string& output) {
  const auto points = optimum_points_from_json(load_json_file(points_path));
  FitSpace space = FitSpace::Linearized;
  if (space_name == "original") {
    space = FitSpace::Original;
  } else {
    GROUSER_REQUIRE(space_name == "linearized", ErrorCode::Config, "--space must be linearized or original");
  }
  const auto fits = fit_all_families(points, space);
  write_fits_csv(std::cout, fits);
  const auto& best = select_best(fits);
  std::cerr << "best: " << to_string(best.family) << " (" << best.fit_space_descriptor() << ")\n";
  if (!output.empty()) {
    if (fs::path(output).has_parent_path()) fs::create_directories(fs::path(output).parent_path());
    save_json_file(output, to_json(best));
  }
  return kOk;
}

int cmd_predict(const std::string& fit_path, bool published, const std::string& d50s) {
  const ScalingFit fit = load_fit(fit_path, published);
  std::cout << "d50_mm,h_mm,raw_mm,clamped\n";
  for (double d : parse_list(d50s)) {
    const auto p = predict_height(fit, d);
    std::cout << d << ',' << p.h_mm << ',' << p.raw_mm << ',' << (p.clamped ? 1 : 0) << '\n';
  }
  return kOk;
}

struct ValidateOpts {
  std::string fit, measurements, expect, csv;
  bool published = false;
  std::vector<std::string> checks;
  double tolerance_pp = 0.1;
};

int cmd_validate(const ValidateOpts& o) {
  const ScalingFit fit = load_fit(o.fit, o.published);
  const auto rows = validation_measurements_from_json(load_json_file(o.measurements));
  std::vector<std::string> expected;
  if (!o.expect.empty()) {
    std::size_t pos = 0;
    while (pos <= o.expect.size()) {
      const auto comma = o.expect.find(',', pos);
      expected.push_back(o.expect.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  const auto report = validate_table(fit, rows, expected);
  report.write_table(std::cout);
  if (!o.csv.empty()) {
    auto out = open_out(o.csv);
    report.write_csv(out);
  }

  int status = kOk;
  for (const auto& c : o.checks) {
    const auto eq = c.find('=');
    GROUSER_REQUIRE(eq != std::string::npos, ErrorCode::Config, "--check must be TERRAIN=PERCENT");
    const std::string terrain = c.substr(0, eq);
    const auto want = parse_list(c.substr(eq + 1));
    GROUSER_REQUIRE(want.size() == 1, ErrorCode::Config, "--check must be TERRAIN=PERCENT");
    const auto it = std::find_if(report.rows.begin(), report.rows.end(),
                                 [&](const ValidationRow& r) { return r.measurement.terrain == terrain; });
    if (it == report.rows.end() || std::abs(it->percent_change - want[0]) > o.tolerance_pp) {
      std::cerr << "validate: " << terrain << " outside " << o.tolerance_pp << " pp of " << want[0] << "%\n";
      status = kValidation;
    }
  }
  if (report.partial()) {
    std::cerr << "validate: partial report, missing terrains present\n";
    status = kValidation;
  }
  return status;
}

int cmd_report(const std::string& logs, const std::string& output) {
  const auto rows = aggregate_log_tree(logs);
  const auto write = [&](std::ostream& out) {
    write_aggregate_header(out);
    for (const auto& r : rows) write_aggregate_row(out, r);
  };
  write(std::cout);
  if (!output.empty()) {
    auto out = open_out(output);
    write(out);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adjustable-grouser wheel testbed simulator and analysis tools"};
  app.require_subcommand(1);
  int status = kOk;

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Run one trial and print its summary");
  simulate->add_option("--config", sim.config, "SimConfig JSON");
  simulate->add_option("--calibration", sim.calibration, "Terrain calibration JSON");
  simulate->add_option("--controller", sim.controller, "Controller gains JSON");
  simulate->add_option("--terrain", sim.terrain, "Terrain name from the calibration");
  simulate->add_option("--height", sim.height, "Commanded grouser height (mm)");
  simulate->add_option("--initial-height", sim.initial, "Initial grouser height (mm), default = commanded");
  simulate->add_option("--seed", sim.seed, "Trial seed");
  simulate->add_option("--log", sim.log, "Write the trial log (JSON lines)");
  simulate->add_option("--trace", sim.trace, "Write the controller trace CSV");
  simulate->add_option("--backdrive", sim.backdrives, "Inject TIME_S:DEGREES (repeatable)");
  simulate->callback([&] { status = cmd_simulate(sim); });

  CampaignOpts camp;
  auto* campaign = app.add_subcommand("campaign", "Run the terrain x height grid");
  campaign->add_option("--config", camp.config, "Campaign JSON");
  campaign->add_option("--calibration", camp.calibration, "Terrain calibration JSON (overrides the config)");
  campaign->add_option("--output", camp.output, "Output directory (overrides GROUSER_OUTPUT_DIR)");
  campaign->add_option("--threads", camp.threads, "Worker threads, 0 = all cores");
  campaign->add_option("--trials", camp.trials, "Trials per configuration");
  campaign->add_flag("--logs", camp.logs, "Write per-trial logs under the output directory");
  campaign->callback([&] { status = cmd_campaign(camp); });

  std::string psd_input, psd_curve, psd_percentiles = "10,30,50,60,90";
  bool psd_linear = false;
  auto* psd = app.add_subcommand("analyze-psd", "Sieve CSV to percentile diameters");
  psd->add_option("input", psd_input, "aperture_mm,mass_retained CSV")->required();
  psd->add_option("--percentiles", psd_percentiles, "Comma-separated percents");
  psd->add_flag("--linear", psd_linear, "Interpolate linearly in diameter instead of log diameter");
  psd->add_option("--curve", psd_curve, "Write the percent-passing curve CSV");
  psd->callback([&] { status = cmd_analyze_psd(psd_input, psd_percentiles, psd_linear, psd_curve); });

  std::string fit_points, fit_space = "linearized", fit_out;
  auto* fit = app.add_subcommand("fit-scaling", "Fit h* against D50 for each family");
  fit->add_option("points", fit_points, "Optimum points JSON")->required();
  fit->add_option("--space", fit_space, "linearized or original");
  fit->add_option("--output", fit_out, "Write the best fit as JSON");
  fit->callback([&] { status = cmd_fit(fit_points, fit_space, fit_out); });

  std::string pred_fit, pred_d50;
  bool pred_published = false;
  auto* predict = app.add_subcommand("predict", "Evaluate a fit at given D50 values");
  predict->add_option("--fit", pred_fit, "Fit JSON from fit-scaling");
  predict->add_flag("--published", pred_published, "Use h* = 13.489 D^-0.228");
  predict->add_option("--d50", pred_d50, "Comma-separated D50 values (mm)")->required();
  predict->callback([&] { status = cmd_predict(pred_fit, pred_published, pred_d50); });

  ValidateOpts val;
  auto* validate = app.add_subcommand("validate", "Slip at predicted heights versus previous optimum");
  validate->add_option("measurements", val.measurements, "Validation measurements JSON")->required();
  validate->add_option("--fit", val.fit, "Fit JSON from fit-scaling");
  validate->add_flag("--published", val.published, "Use h* = 13.489 D^-0.228");
  validate->add_option("--expect", val.expect, "Comma-separated terrains that must be present");
  validate->add_option("--check", val.checks, "TERRAIN=PERCENT expected change (repeatable)");
  validate->add_option("--tolerance-pp", val.tolerance_pp, "Tolerance for --check in percentage points");
  validate->add_option("--csv", val.csv, "Write the report as CSV");
  validate->callback([&] { status = cmd_validate(val); });

  std::string rep_logs, rep_out;
  auto* report = app.add_subcommand("report", "Aggregate a campaign log tree into CSV");
  report->add_option("logs", rep_logs, "Campaign output directory")->required();
  report->add_option("--output", rep_out, "Write the CSV here as well");
  report->callback([&] { status = cmd_report(rep_logs, rep_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return status;
}
