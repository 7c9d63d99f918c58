#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grouser/sensor_frame.hpp"
#include "grouser/testbed.hpp"

namespace grouser {

struct SlipRatio {
  double value = 0.0;
  bool negative = false;  // overrun; reported as-is, never clamped
};

/// s = 1 − v_real / (r ω). Throws Domain when r ω ≤ 0 (slip undefined).
SlipRatio slip_ratio(double v_real_mps, double radius_m, double omega_rad_s);

/// Slip at every interior frame from centered differences of the linear
/// encoder, against the commanded rim speed r ω. Entry k corresponds to frame k+1.
std::vector<double> slip_series(std::span<const SensorFrame> frames, const SimConfig& config);

/// Whole-trial slip from the linear and motor encoders between the first frame
/// and frame `last`.
double trial_slip(std::span<const SensorFrame> frames, std::size_t last, const SimConfig& config);

struct EnergyResult {
  double joules = 0.0;
  bool composite = false;  // odd interval count: last interval by trapezoid
  std::size_t intervals = 0;
};

/// Current samples at a fixed period, integrated to energy at a fixed bus voltage.
class EnergyAccumulator {
 public:
  explicit EnergyAccumulator(double ts_s, double bus_voltage_v = 12.0);

  void add(double current_a);
  std::size_t size() const noexcept { return samples_.size(); }
  std::span<const double> samples() const noexcept { return samples_; }
  double ts_s() const noexcept { return ts_s_; }
  double bus_voltage_v() const noexcept { return bus_voltage_v_; }

 private:
  double ts_s_;
  double bus_voltage_v_;
  std::vector<double> samples_;
};

/// Composite Simpson over the samples. Throws Data on fewer than 3 samples.
EnergyResult energy_simpson(const EnergyAccumulator& acc);
EnergyResult energy_simpson(std::span<const double> current_a, double ts_s, double bus_voltage_v = 12.0);

/// Composite trapezoid, for comparison.
double energy_trapezoid(std::span<const double> current_a, double ts_s, double bus_voltage_v = 12.0);

/// Index of the first frame at or past the stroke, if any.
std::optional<std::size_t> stroke_frame(const TrialRecord& record);

/// Time at which the linear position reaches the stroke, interpolated between
/// the bracketing frames. nullopt for an incomplete trial.
std::optional<double> travel_time(const TrialRecord& record);

/// Slip, energy and travel time for a record (computed up to the stroke frame).
TrialMetrics compute_metrics(const TrialRecord& record);
void process_trial(TrialRecord& record);

struct MetricStats {
  double mean = 0.0;
  std::optional<double> std;  // unbiased; needs at least two values
};

/// Mean and unbiased standard deviation. Values are summed in sorted order so
/// the result does not depend on input order. Empty input gives nullopt.
std::optional<MetricStats> summarize(std::vector<double> values);

struct Aggregate {
  std::size_t trials = 0;
  std::size_t completed = 0;
  std::optional<MetricStats> slip;
  std::optional<MetricStats> energy_J;
  std::optional<MetricStats> time_s;

  /// No completed trials.
  bool empty() const noexcept { return completed == 0; }
  double completion_rate() const noexcept {
    return trials == 0 ? 0.0 : static_cast<double>(completed) / static_cast<double>(trials);
  }
};

/// Statistics over completed trials; incomplete ones are counted only.
/// Records without metrics are processed on the fly.
Aggregate aggregate(std::span<const TrialRecord> trials);

struct AggregateRow {
  std::string terrain;
  std::string packing;
  double height_mm = 0.0;
  Aggregate stats;
};

/// terrain,packing,height_mm,slip_mean,slip_std,energy_J_mean,time_s_mean,completion_rate
void write_aggregate_header(std::ostream& out);
void write_aggregate_row(std::ostream& out, const AggregateRow& row);

}  // namespace grouser
