#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grouser/config.hpp"
#include "grouser/estimators.hpp"
#include "grouser/testbed.hpp"

namespace grouser {

struct CampaignConfig {
  std::vector<std::string> terrains{"vinyl", "rock", "gravel", "loose_sand", "dense_sand"};
  std::vector<double> heights_mm{0.0, 3.5, 7.0, 10.5, 14.0, 17.5};
  int trials_per_config = 25;
  std::uint64_t base_seed = 20240;
  std::filesystem::path output_dir;  // empty: nothing written
  bool write_logs = false;           // per-trial JSON-lines logs under output_dir
  int threads = 0;                   // 0: hardware concurrency
  Json sim_overrides = Json::object();  // SimConfig fields other than terrain, heights and seed

  void validate() const;
  std::size_t trial_count() const noexcept { return terrains.size() * heights_mm.size() * static_cast<std::size_t>(trials_per_config); }
};

/// Reads a campaign file. Relative paths inside are not resolved here.
CampaignConfig campaign_config_from_json(const Json& j);
Json to_json(const CampaignConfig& c);

/// Seed of trial `trial` in cell `cell`; injective for trial < trials_per_config.
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t cell, std::size_t trial, int trials_per_config);

/// SimConfig for one trial: overrides applied, initial and commanded height = h.
SimConfig make_cell_config(const CampaignConfig& c, const TerrainModel& terrain, double height_mm,
                           std::uint64_t seed);

struct TrialSummary {
  std::uint64_t seed = 0;
  std::optional<TrialOutcome> outcome;  // absent when the trial faulted
  std::string fault;
  double true_slip_mean = 0.0;
  TrialMetrics metrics;
};

struct CampaignCell {
  std::string terrain;
  std::string packing;
  double height_mm = 0.0;
  std::vector<TrialSummary> trials;
  Aggregate stats;
  std::size_t faults = 0;
};

struct CampaignReport {
  std::vector<CampaignCell> cells;  // terrain-major, heights in config order
  std::size_t trials = 0;

  /// Height with the lowest mean slip among cells with at least one completed trial.
  std::map<std::string, double> argmin_heights() const;
  /// Mean over cells of the per-cell slip standard deviation, per terrain.
  std::map<std::string, double> mean_slip_std() const;
  const CampaignCell& cell(const std::string& terrain, double height_mm) const;

  void write_csv(std::ostream& out) const;
  Json summary_json() const;
};

/// Runs every (terrain × height) cell. Throws Config before any simulation if
/// a terrain has no calibration; per-trial faults are recorded and skipped.
/// The report is independent of thread count and completion order.
CampaignReport run_campaign(const CampaignConfig& config, const std::vector<TerrainModel>& calibration);

/// Directory of one cell's logs: <root>/<terrain>/h_<hh.h>mm.
std::filesystem::path cell_log_dir(const std::filesystem::path& root, const std::string& terrain, double height_mm);
std::string trial_log_name(std::size_t trial);

/// Rebuilds per-cell aggregates from a log tree written by run_campaign.
std::vector<AggregateRow> aggregate_log_tree(const std::filesystem::path& root);

}  // namespace grouser
