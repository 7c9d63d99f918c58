#include "grouser/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "grouser/error.hpp"

namespace grouser {

SlipRatio slip_ratio(double v_real_mps, double radius_m, double omega_rad_s) {
  const double v_theory = radius_m * omega_rad_s;
  GROUSER_REQUIRE(std::isfinite(v_theory) && v_theory > 0.0 && radius_m > 0.0, ErrorCode::Domain,
                  "slip undefined: theoretical velocity r*omega must be positive");
  GROUSER_REQUIRE(std::isfinite(v_real_mps), ErrorCode::Domain, "non-finite velocity");
  SlipRatio s;
  s.value = 1.0 - v_real_mps / v_theory;
  s.negative = s.value < 0.0;
  return s;
}

namespace {

double linear_m(const SensorFrame& f, const SimConfig& config) {
  return static_cast<double>(f.linear_counts) * static_cast<double>(config.linear_resolution_nm) * 1e-9;
}

}  // namespace

std::vector<double> slip_series(std::span<const SensorFrame> frames, const SimConfig& config) {
  std::vector<double> out;
  if (frames.size() < 3) return out;
  out.reserve(frames.size() - 2);
  for (std::size_t k = 1; k + 1 < frames.size(); ++k) {
    const double dt = frames[k + 1].t_s() - frames[k - 1].t_s();
    GROUSER_REQUIRE(dt > 0.0, ErrorCode::Data, "frame times must increase");
    const double v = (linear_m(frames[k + 1], config) - linear_m(frames[k - 1], config)) / dt;
    out.push_back(slip_ratio(v, config.wheel.radius_m, config.omega_rad_s()).value);
  }
  return out;
}

double trial_slip(std::span<const SensorFrame> frames, std::size_t last, const SimConfig& config) {
  GROUSER_REQUIRE(last < frames.size() && last > 0, ErrorCode::Data, "trial slip needs at least two frames");
  const auto& a = frames.front();
  const auto& b = frames[last];
  const double wheel_rad = static_cast<double>(b.motor_counts - a.motor_counts) /
                           config.encoders.wheel_counts_per_rev() * 2.0 * std::numbers::pi;
  const double dt = b.t_s() - a.t_s();
  GROUSER_REQUIRE(dt > 0.0, ErrorCode::Data, "frame times must increase");
  const double v = (linear_m(b, config) - linear_m(a, config)) / dt;
  return slip_ratio(v, config.wheel.radius_m, wheel_rad / dt).value;
}

EnergyAccumulator::EnergyAccumulator(double ts_s, double bus_voltage_v)
    : ts_s_(ts_s), bus_voltage_v_(bus_voltage_v) {
  GROUSER_REQUIRE(std::isfinite(ts_s) && ts_s > 0.0, ErrorCode::Domain, "sample period must be positive");
  GROUSER_REQUIRE(std::isfinite(bus_voltage_v) && bus_voltage_v > 0.0, ErrorCode::Domain,
                  "bus voltage must be positive");
}

void EnergyAccumulator::add(double current_a) {
  GROUSER_REQUIRE(std::isfinite(current_a), ErrorCode::Data, "non-finite current sample");
  samples_.push_back(current_a);
}

EnergyResult energy_simpson(const EnergyAccumulator& acc) {
  return energy_simpson(acc.samples(), acc.ts_s(), acc.bus_voltage_v());
}

EnergyResult energy_simpson(std::span<const double> i, double ts_s, double bus_voltage_v) {
  GROUSER_REQUIRE(i.size() >= 3, ErrorCode::Data, "Simpson integration needs at least 3 samples");
  GROUSER_REQUIRE(ts_s > 0.0 && bus_voltage_v > 0.0, ErrorCode::Domain, "period and voltage must be positive");
  EnergyResult r;
  r.intervals = i.size() - 1;
  const std::size_t simpson_intervals = r.intervals - r.intervals % 2;
  double sum = 0.0;
  for (std::size_t j = 0; j + 2 <= simpson_intervals; j += 2) sum += i[j] + 4.0 * i[j + 1] + i[j + 2];
  double charge = ts_s / 3.0 * sum;
  if (simpson_intervals != r.intervals) {
    r.composite = true;
    charge += 0.5 * ts_s * (i[r.intervals - 1] + i[r.intervals]);
  }
  r.joules = bus_voltage_v * charge;
  return r;
}

double energy_trapezoid(std::span<const double> i, double ts_s, double bus_voltage_v) {
  GROUSER_REQUIRE(i.size() >= 2, ErrorCode::Data, "trapezoid integration needs at least 2 samples");
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < i.size(); ++k) sum += i[k] + i[k + 1];
  return bus_voltage_v * 0.5 * ts_s * sum;
}

std::optional<std::size_t> stroke_frame(const TrialRecord& record) {
  const auto target = record.config.stroke_counts();
  for (std::size_t k = 0; k < record.frames.size(); ++k) {
    if (record.frames[k].linear_counts >= target) return k;
  }
  return std::nullopt;
}

std::optional<double> travel_time(const TrialRecord& record) {
  if (!record.completed()) return std::nullopt;
  const auto k = stroke_frame(record);
  if (!k) return std::nullopt;
  const auto& f = record.frames;
  if (*k == 0) return f[0].t_s();
  const auto& a = f[*k - 1];
  const auto& b = f[*k];
  const double target = static_cast<double>(record.config.stroke_counts());
  const double span = static_cast<double>(b.linear_counts - a.linear_counts);
  const double frac = (target - static_cast<double>(a.linear_counts)) / span;
  return a.t_s() + frac * (b.t_s() - a.t_s());
}

TrialMetrics compute_metrics(const TrialRecord& record) {
  TrialMetrics m;
  const auto& f = record.frames;
  std::size_t last = f.empty() ? 0 : f.size() - 1;
  if (const auto k = stroke_frame(record)) last = *k;
  if (last > 0) m.slip_est = trial_slip(f, last, record.config);
  if (last >= 2) {
    std::vector<double> current;
    current.reserve(last + 1);
    for (std::size_t k = 0; k <= last; ++k) current.push_back(f[k].current_A());
    const auto e = energy_simpson(current, record.config.gains.ts_s, record.config.bus_voltage_v);
    m.energy_J = e.joules;
    m.energy_composite = e.composite;
  }
  m.travel_time_s = travel_time(record);
  return m;
}

void process_trial(TrialRecord& record) { record.metrics = compute_metrics(record); }

std::optional<MetricStats> summarize(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  MetricStats s;
  s.mean = sum / n;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

Aggregate aggregate(std::span<const TrialRecord> trials) {
  Aggregate a;
  a.trials = trials.size();
  std::vector<double> slip, energy, time;
  for (const auto& t : trials) {
    if (!t.completed()) continue;
    ++a.completed;
    const TrialMetrics m = t.metrics ? *t.metrics : compute_metrics(t);
    slip.push_back(m.slip_est);
    if (m.energy_J) energy.push_back(*m.energy_J);
    if (m.travel_time_s) time.push_back(*m.travel_time_s);
  }
  a.slip = summarize(std::move(slip));
  a.energy_J = summarize(std::move(energy));
  a.time_s = summarize(std::move(time));
  return a;
}

void write_aggregate_header(std::ostream& out) {
  out << "terrain,packing,height_mm,slip_mean,slip_std,energy_J_mean,time_s_mean,completion_rate\n";
}

void write_aggregate_row(std::ostream& out, const AggregateRow& row) {
  std::ostringstream line;
  line.precision(10);
  const auto put = [&line](const std::optional<double>& v) {
    if (v) line << *v;
  };
  const auto mean = [](const std::optional<MetricStats>& s) { return s ? std::optional(s->mean) : std::nullopt; };
  const auto& st = row.stats;
  line << row.terrain << ',' << row.packing << ',' << row.height_mm << ',';
  put(mean(st.slip));
  line << ',';
  put(st.slip ? st.slip->std : std::nullopt);
  line << ',';
  put(mean(st.energy_J));
  line << ',';
  put(mean(st.time_s));
  line << ',' << st.completion_rate() << '\n';
  out << line.str();
}

}  // namespace grouser
