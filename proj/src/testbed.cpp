#include "grouser/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "grouser/error.hpp"

namespace grouser {

void SimConfig::validate() const {
  wheel.validate();
  encoders.validate();
  gains.validate();
  terrain.validate();
  GROUSER_REQUIRE(std::isfinite(stroke_m) && stroke_m > 0.0, ErrorCode::Config, "stroke must be positive");
  GROUSER_REQUIRE(std::isfinite(surface_speed_mps) && surface_speed_mps > 0.0, ErrorCode::Config,
                  "surface speed must be positive");
  GROUSER_REQUIRE(dt_us > 0, ErrorCode::Config, "plant step must be positive");
  const double ts_us = gains.ts_s * 1e6;
  const auto ticks = std::llround(ts_us / static_cast<double>(dt_us));
  GROUSER_REQUIRE(ticks >= 1 && std::abs(ts_us - static_cast<double>(ticks * dt_us)) < 1e-6, ErrorCode::Config,
                  "controller period must be a whole multiple of the plant step");
  GROUSER_REQUIRE(initial_height_mm >= 0.0 && initial_height_mm <= wheel.grouser_height_max_mm &&
                      commanded_height_mm >= 0.0 && commanded_height_mm <= wheel.grouser_height_max_mm,
                  ErrorCode::Config, "initial and commanded heights must lie in [0, 17.5] mm");
  GROUSER_REQUIRE(trial_timeout_s > 0.0, ErrorCode::Config, "trial timeout must be positive");
  GROUSER_REQUIRE(stall_window_s > 0.0, ErrorCode::Config, "stall window must be positive");
  GROUSER_REQUIRE(bus_voltage_v > 0.0, ErrorCode::Config, "bus voltage must be positive");
  GROUSER_REQUIRE(linear_resolution_nm > 0, ErrorCode::Config, "linear encoder resolution must be positive");
  GROUSER_REQUIRE(servo.max_rate_rad_s > 0.0 && servo.slew_per_s > 0.0, ErrorCode::Config,
                  "servo limits must be positive");
  GROUSER_REQUIRE(polar_samples >= PolarTable::kMinSamples, ErrorCode::Config, "too few polar samples");
}

std::int64_t SimConfig::steps_per_tick() const noexcept {
  return std::max<std::int64_t>(1, std::llround(gains.ts_s * 1e6 / static_cast<double>(dt_us)));
}

std::int64_t SimConfig::stroke_counts() const noexcept {
  return static_cast<std::int64_t>(std::ceil(stroke_m * 1e9 / static_cast<double>(linear_resolution_nm) - 1e-9));
}

Testbed::Testbed(const SimConfig& config, std::shared_ptr<const PolarTable> table)
    : config_(config),
      table_(std::move(table)),
      slip_rng_(config.seed, 1),
      current_(config.terrain.current, mix_seed(config.seed ^ 0x2545f4914f6cdd1dULL)) {
  config_.validate();
  GROUSER_REQUIRE(table_ != nullptr, ErrorCode::Config, "testbed needs a polar table");
  offset_rad_ = table_->offset_from_height(config_.initial_height_mm);
  trial_noise_ = slip_rng_.normal();
  slip_ = draw_slip();
  current_a_ = config_.terrain.current.baseline_a + config_.terrain.current.slip_gain_a * slip_;
}

double Testbed::draw_slip() {
  const double h = true_height_mm();
  const auto& terrain = config_.terrain;
  if (is_immobilizing(terrain, h)) return 1.0;
  const double z = config_.per_step_slip_noise ? slip_rng_.normal() : trial_noise_;
  return std::clamp(terrain.slip_mean(h) + terrain.slip_sigma * z, 0.0, terrain.slip_ceiling);
}

double Testbed::time_s() const noexcept { return static_cast<double>(step_ * config_.dt_us) * 1e-6; }

double Testbed::wheel_angle_rad() const noexcept { return config_.omega_rad_s() * time_s(); }

double Testbed::true_height_mm() const { return table_->height_from_offset(offset_rad_); }

void Testbed::set_servo_command(double command) { commanded_ = std::clamp(command, -1.0, 1.0); }

void Testbed::inject_backdrive(double delta_rad) {
  offset_rad_ = std::clamp(offset_rad_ + delta_rad, kFullDeployOffsetRad, 0.0);
}

SensorFrame Testbed::step() {
  const double dt = config_.dt_s();
  ++step_;

  const double max_delta = config_.servo.slew_per_s * dt;
  applied_command_ += std::clamp(commanded_ - applied_command_, -max_delta, max_delta);
  // Positive command deploys, i.e. drives the offset negative.
  offset_rad_ = std::clamp(offset_rad_ - config_.servo.max_rate_rad_s * applied_command_ * dt,
                           kFullDeployOffsetRad, 0.0);

  slip_ = draw_slip();
  position_nm_ += config_.surface_speed_mps * (1.0 - slip_) * static_cast<double>(config_.dt_us) * 1e3;
  current_a_ = current_.next(slip_, dt);
  return frame();
}

SensorFrame Testbed::frame() const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  SensorFrame f;
  f.t_us = static_cast<std::uint64_t>(step_ * config_.dt_us);

  const double wheel = wheel_angle_rad();
  f.motor_counts = static_cast<std::int64_t>(std::floor(wheel / two_pi * config_.encoders.wheel_counts_per_rev()));

  double cam = std::fmod(wheel + offset_rad_, two_pi);
  if (cam < 0.0) cam += two_pi;
  const int cam_cpr = config_.encoders.cam_counts_per_rev;
  f.cam_counts = static_cast<std::uint16_t>(
      std::min<std::int64_t>(cam_cpr - 1, static_cast<std::int64_t>(std::floor(cam / two_pi * cam_cpr))));

  f.linear_counts = static_cast<std::int64_t>(std::floor(position_nm_ / static_cast<double>(config_.linear_resolution_nm)));
  f.current_mA = static_cast<std::uint32_t>(std::lround(std::max(0.0, current_a_) * 1000.0));
  if (slip_ >= 1.0) f.flags |= kFlagImmobilized;
  return f;
}

std::string_view to_string(TrialOutcome o) noexcept {
  switch (o) {
    case TrialOutcome::Completed: return "completed";
    case TrialOutcome::Immobilized: return "immobilized";
    case TrialOutcome::TimedOut: return "timed_out";
  }
  return "timed_out";
}

TrialOutcome trial_outcome_from_string(std::string_view s) {
  if (s == "completed") return TrialOutcome::Completed;
  if (s == "immobilized") return TrialOutcome::Immobilized;
  if (s == "timed_out") return TrialOutcome::TimedOut;
  throw Error(ErrorCode::Data, "unknown trial outcome '" + std::string(s) + "'");
}

std::shared_ptr<const PolarTable> make_polar_table(const SimConfig& config) {
  return std::make_shared<const PolarTable>(
      PolarTable::sample(CamProfile::wheel_slot(config.cam_mode), config.polar_samples));
}

TrialRecord run_trial(const SimConfig& config) {
  config.validate();
  return run_trial(config, make_polar_table(config));
}

TrialRecord run_trial(const SimConfig& config, std::shared_ptr<const PolarTable> table, const TrialHooks& hooks) {
  config.validate();
  GROUSER_REQUIRE(table != nullptr, ErrorCode::Config, "run_trial needs a polar table");

  TrialRecord record;
  record.config = config;
  Testbed bed(config, table);

  const std::int64_t steps_per_tick = config.steps_per_tick();
  const std::int64_t stroke_counts = config.stroke_counts();
  const auto stall_ticks = static_cast<std::size_t>(std::ceil(config.stall_window_s / config.gains.ts_s));
  const auto max_steps = static_cast<std::int64_t>(std::ceil(config.trial_timeout_s / config.dt_s()));

  PidState pid;
  std::size_t next_backdrive = 0;
  auto backdrives = hooks.backdrives;
  std::sort(backdrives.begin(), backdrives.end());

  double slip_sum = bed.current_slip();
  std::int64_t slip_samples = 1;

  const auto tick = [&] {
    std::uint8_t flags = 0;
    while (next_backdrive < backdrives.size() && backdrives[next_backdrive].first <= bed.time_s() + 1e-12) {
      bed.inject_backdrive(backdrives[next_backdrive].second);
      flags |= kFlagBackdrive;
      ++next_backdrive;
    }
    SensorFrame f = bed.frame();
    f.flags |= flags;
    try {
      const auto m = measure_height(f.cam_counts, f.motor_counts, *table, config.encoders);
      const auto out = pid_step(pid, config.gains, config.commanded_height_mm, m.derived_height_mm);
      pid = out.state;
      bed.set_servo_command(out.command);
      if (out.saturated) f.flags |= kFlagSaturated;
      if (hooks.trace) {
        hooks.trace->push_back({static_cast<std::int64_t>(record.frames.size()), out.error, out.state.integral,
                                out.derivative, out.command, out.saturated});
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Fault) throw;
      f.flags |= kFlagDesync;  // hold the previous command
    }
    if (hooks.true_heights) hooks.true_heights->push_back(bed.true_height_mm());
    record.frames.push_back(f);
    return f;
  };

  tick();
  for (std::int64_t step = 1;; ++step) {
    bed.step();
    slip_sum += bed.current_slip();
    ++slip_samples;
    if (step % steps_per_tick != 0) continue;

    const SensorFrame f = tick();
    if (f.linear_counts >= stroke_counts) {
      record.outcome = TrialOutcome::Completed;
      break;
    }
    const std::size_t n = record.frames.size();
    if (n > stall_ticks && record.frames[n - 1 - stall_ticks].linear_counts == f.linear_counts) {
      record.outcome = TrialOutcome::Immobilized;
      break;
    }
    if (step >= max_steps) {
      record.outcome = TrialOutcome::TimedOut;
      break;
    }
  }
  record.true_slip_mean = slip_sum / static_cast<double>(slip_samples);
  return record;
}

}  // namespace grouser
