#include "grouser/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "grouser/error.hpp"
#include "grouser/telemetry.hpp"

namespace grouser {

void CampaignConfig::validate() const {
  GROUSER_REQUIRE(!terrains.empty(), ErrorCode::Config, "campaign needs at least one terrain");
  GROUSER_REQUIRE(!heights_mm.empty(), ErrorCode::Config, "campaign needs at least one height");
  for (double h : heights_mm) {
    GROUSER_REQUIRE(h >= 0.0 && h <= 17.5, ErrorCode::Config, "campaign heights must lie in [0, 17.5] mm");
  }
  GROUSER_REQUIRE(trials_per_config >= 1, ErrorCode::Config, "trials_per_config must be at least 1");
  GROUSER_REQUIRE(threads >= 0, ErrorCode::Config, "threads must be non-negative");
  GROUSER_REQUIRE(!write_logs || !output_dir.empty(), ErrorCode::Config, "write_logs needs an output_dir");
  GROUSER_REQUIRE(sim_overrides.is_object(), ErrorCode::Config, "campaign.sim must be an object");
  for (const char* key : {"terrain", "seed", "initial_height_mm", "commanded_height_mm"}) {
    GROUSER_REQUIRE(!sim_overrides.contains(key), ErrorCode::Config,
                    std::string("campaign.sim may not set '") + key + "'");
  }
}

CampaignConfig campaign_config_from_json(const Json& j) {
  GROUSER_REQUIRE(j.is_object(), ErrorCode::Config, "campaign: expected an object");
  CampaignConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "terrains") {
        c.terrains = value.get<std::vector<std::string>>();
      } else if (key == "heights_mm") {
        c.heights_mm = value.get<std::vector<double>>();
      } else if (key == "trials_per_config") {
        c.trials_per_config = value.get<int>();
      } else if (key == "base_seed") {
        c.base_seed = value.get<std::uint64_t>();
      } else if (key == "output_dir") {
        c.output_dir = value.get<std::string>();
      } else if (key == "write_logs") {
        c.write_logs = value.get<bool>();
      } else if (key == "threads") {
        c.threads = value.get<int>();
      } else if (key == "sim") {
        c.sim_overrides = value;
      } else if (key != "calibration" && key != "controller" && key != "description") {
        throw Error(ErrorCode::Config, "campaign: unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Config, "campaign." + key + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

Json to_json(const CampaignConfig& c) {
  return {{"terrains", c.terrains},
          {"heights_mm", c.heights_mm},
          {"trials_per_config", c.trials_per_config},
          {"base_seed", c.base_seed},
          {"output_dir", c.output_dir.string()},
          {"write_logs", c.write_logs},
          {"threads", c.threads},
          {"sim", c.sim_overrides}};
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t cell, std::size_t trial, int trials_per_config) {
  return base_seed + static_cast<std::uint64_t>(cell) * static_cast<std::uint64_t>(trials_per_config) + trial;
}

SimConfig make_cell_config(const CampaignConfig& c, const TerrainModel& terrain, double height_mm,
                           std::uint64_t seed) {
  Json j = c.sim_overrides;
  j["terrain"] = to_json(terrain);
  j["seed"] = seed;
  j["initial_height_mm"] = height_mm;
  j["commanded_height_mm"] = height_mm;
  return sim_config_from_json(j);
}

std::filesystem::path cell_log_dir(const std::filesystem::path& root, const std::string& terrain, double height_mm) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "h_%04.1fmm", height_mm);
  return root / terrain / buf;
}

std::string trial_log_name(std::size_t trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%02zu.jsonl", trial);
  return buf;
}

CampaignReport run_campaign(const CampaignConfig& config, const std::vector<TerrainModel>& calibration) {
  config.validate();

  // Resolve everything up front so a bad calibration aborts before any trial.
  struct Job {
    std::size_t cell;
    std::size_t trial;
    SimConfig sim;
  };
  std::vector<Job> jobs;
  jobs.reserve(config.trial_count());
  CampaignReport report;
  std::size_t cell_index = 0;
  for (const auto& name : config.terrains) {
    const TerrainModel& terrain = find_terrain(calibration, name);
    for (double h : config.heights_mm) {
      CampaignCell cell;
      cell.terrain = name;
      cell.packing = terrain.packing_label();
      cell.height_mm = h;
      cell.trials.resize(static_cast<std::size_t>(config.trials_per_config));
      report.cells.push_back(std::move(cell));
      for (std::size_t t = 0; t < static_cast<std::size_t>(config.trials_per_config); ++t) {
        const auto seed = trial_seed(config.base_seed, cell_index, t, config.trials_per_config);
        jobs.push_back({cell_index, t, make_cell_config(config, terrain, h, seed)});
      }
      ++cell_index;
    }
  }
  report.trials = jobs.size();

  if (config.write_logs) {
    for (const auto& cell : report.cells) {
      std::error_code ec;
      const auto dir = cell_log_dir(config.output_dir, cell.terrain, cell.height_mm);
      std::filesystem::create_directories(dir, ec);
      GROUSER_REQUIRE(!ec, ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
    }
  }

  const auto table = make_polar_table(jobs.front().sim);
  for (const auto& j : jobs) {
    if (j.sim.cam_mode != jobs.front().sim.cam_mode || j.sim.polar_samples != jobs.front().sim.polar_samples) {
      throw Error(ErrorCode::Config, "all campaign trials must share one cam table");
    }
  }

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      TrialSummary& out = report.cells[job.cell].trials[job.trial];
      out.seed = job.sim.seed;
      try {
        TrialRecord rec = run_trial(job.sim, table);
        process_trial(rec);
        out.outcome = rec.outcome;
        out.true_slip_mean = rec.true_slip_mean;
        out.metrics = *rec.metrics;
        if (config.write_logs) {
          const auto& cell = report.cells[job.cell];
          write_trial_log(rec, cell_log_dir(config.output_dir, cell.terrain, cell.height_mm) / trial_log_name(job.trial));
        }
      } catch (const Error& e) {
        out.fault = std::string(to_string(e.code())) + ": " + e.what();
      }
    }
  };
  unsigned n_threads = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  n_threads = std::clamp<unsigned>(n_threads, 1, static_cast<unsigned>(jobs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  // Ordered reduction.
  for (auto& cell : report.cells) {
    std::vector<TrialRecord> stubs;
    for (const auto& t : cell.trials) {
      if (!t.outcome) {
        ++cell.faults;
        continue;
      }
      TrialRecord r;
      r.outcome = *t.outcome;
      r.metrics = t.metrics;
      stubs.push_back(std::move(r));
    }
    cell.stats = aggregate(stubs);
    cell.stats.trials = cell.trials.size();  // faulted trials count against completion
  }
  return report;
}

std::map<std::string, double> CampaignReport::argmin_heights() const {
  std::map<std::string, std::pair<double, double>> best;  // terrain -> (slip, height)
  for (const auto& c : cells) {
    if (!c.stats.slip) continue;
    const auto it = best.find(c.terrain);
    if (it == best.end() || c.stats.slip->mean < it->second.first) best[c.terrain] = {c.stats.slip->mean, c.height_mm};
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : best) out[k] = v.second;
  return out;
}

std::map<std::string, double> CampaignReport::mean_slip_std() const {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& c : cells) {
    if (!c.stats.slip || !c.stats.slip->std) continue;
    auto& a = acc[c.terrain];
    a.first += *c.stats.slip->std;
    ++a.second;
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

const CampaignCell& CampaignReport::cell(const std::string& terrain, double height_mm) const {
  for (const auto& c : cells) {
    if (c.terrain == terrain && std::abs(c.height_mm - height_mm) < 1e-9) return c;
  }
  throw Error(ErrorCode::Range, "no campaign cell for " + terrain + " at " + std::to_string(height_mm) + " mm");
}

void CampaignReport::write_csv(std::ostream& out) const {
  write_aggregate_header(out);
  for (const auto& c : cells) write_aggregate_row(out, {c.terrain, c.packing, c.height_mm, c.stats});
}

Json CampaignReport::summary_json() const {
  Json cells_json = Json::array();
  std::size_t completed = 0;
  std::size_t faults = 0;
  for (const auto& c : cells) {
    completed += c.stats.completed;
    faults += c.faults;
    Json cj{{"terrain", c.terrain},
            {"packing", c.packing},
            {"height_mm", c.height_mm},
            {"trials", c.trials.size()},
            {"completed", c.stats.completed},
            {"faults", c.faults}};
    cj["slip_mean"] = c.stats.slip ? Json(c.stats.slip->mean) : Json();
    cj["slip_std"] = c.stats.slip && c.stats.slip->std ? Json(*c.stats.slip->std) : Json();
    cells_json.push_back(cj);
  }
  return {{"trials", trials},
          {"cells", cells.size()},
          {"completed", completed},
          {"faults", faults},
          {"argmin_height_mm", argmin_heights()},
          {"mean_slip_std", mean_slip_std()},
          {"cell_stats", cells_json}};
}

std::vector<AggregateRow> aggregate_log_tree(const std::filesystem::path& root) {
  GROUSER_REQUIRE(std::filesystem::is_directory(root), ErrorCode::Io, "'" + root.string() + "' is not a directory");
  std::vector<std::filesystem::path> cell_dirs;
  for (const auto& terrain : std::filesystem::directory_iterator(root)) {
    if (!terrain.is_directory()) continue;
    for (const auto& cell : std::filesystem::directory_iterator(terrain.path())) {
      if (cell.is_directory() && cell.path().filename().string().rfind("h_", 0) == 0) cell_dirs.push_back(cell.path());
    }
  }
  std::sort(cell_dirs.begin(), cell_dirs.end());
  std::vector<AggregateRow> rows;
  for (const auto& dir : cell_dirs) {
    std::vector<std::filesystem::path> logs;
    for (const auto& f : std::filesystem::directory_iterator(dir)) {
      if (f.path().extension() == ".jsonl") logs.push_back(f.path());
    }
    if (logs.empty()) continue;
    std::sort(logs.begin(), logs.end());
    std::vector<TrialRecord> records;
    for (const auto& p : logs) {
      TrialRecord r = read_trial_log(p);
      if (!r.metrics) process_trial(r);
      records.push_back(std::move(r));
    }
    AggregateRow row;
    row.terrain = records.front().config.terrain.name;
    row.packing = records.front().config.terrain.packing_label();
    row.height_mm = records.front().config.commanded_height_mm;
    row.stats = aggregate(records);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace grouser
