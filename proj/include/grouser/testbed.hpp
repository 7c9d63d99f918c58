#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "grouser/cam_kinematics.hpp"
#include "grouser/controller.hpp"
#include "grouser/sensor_frame.hpp"
#include "grouser/terrain_models.hpp"
#include "grouser/wheel_geometry.hpp"

namespace grouser {

/// Continuous-rotation servo driving the cam through the planetary stage,
/// expressed at the cam: |command| = 1 gives max_rate_rad_s of offset change.
struct ServoLimits {
  double max_rate_rad_s = 0.8;
  double slew_per_s = 25.0;  // command units per second
};

struct SimConfig {
  WheelGeometry wheel;
  EncoderConfig encoders;
  PidGains gains;
  ServoLimits servo;
  TerrainModel terrain;

  double stroke_m = 0.4325;
  double surface_speed_mps = 0.5;
  std::int64_t dt_us = 1000;
  std::uint64_t seed = 1;
  double initial_height_mm = 0.0;
  double commanded_height_mm = 0.0;
  double trial_timeout_s = 300.0;
  double stall_window_s = 1.0;  // no linear progress for this long ⇒ immobilized
  double bus_voltage_v = 12.0;
  std::int64_t linear_resolution_nm = 5000;
  bool per_step_slip_noise = false;
  JunctionMode cam_mode = JunctionMode::ContinuityEnforced;  // a physical slot is continuous
  int polar_samples = 4096;

  /// Throws Config on any invalid field.
  void validate() const;

  double dt_s() const noexcept { return static_cast<double>(dt_us) * 1e-6; }
  double omega_rad_s() const noexcept { return surface_speed_mps / wheel.radius_m; }
  /// Plant steps per controller tick.
  std::int64_t steps_per_tick() const noexcept;
  std::int64_t stroke_counts() const noexcept;
};

/// Fixed-step plant: wheel rotation, terrain slip, servo/cam dynamics and the
/// four quantized sensors. Ground truth is exposed for verification.
class Testbed {
 public:
  Testbed(const SimConfig& config, std::shared_ptr<const PolarTable> table);

  /// Advances the plant by one step and returns the resulting sensor frame.
  SensorFrame step();

  /// Quantized sensors at the current instant.
  SensorFrame frame() const;

  /// Servo rate command in [−1, 1]; the applied command slews toward it.
  void set_servo_command(double command);

  /// Perturbs the cam–wheel offset by delta (positive retracts the grousers),
  /// clamped at the slot ends.
  void inject_backdrive(double delta_rad);

  std::int64_t step_index() const noexcept { return step_; }
  double time_s() const noexcept;
  double wheel_angle_rad() const noexcept;
  double cam_offset_rad() const noexcept { return offset_rad_; }
  double true_height_mm() const;
  double linear_position_m() const noexcept { return position_nm_ * 1e-9; }
  double current_slip() const noexcept { return slip_; }
  double current_A() const noexcept { return current_a_; }
  double applied_command() const noexcept { return applied_command_; }
  const PolarTable& table() const noexcept { return *table_; }

 private:
  double draw_slip();

  SimConfig config_;
  std::shared_ptr<const PolarTable> table_;
  Rng slip_rng_;
  CurrentSource current_;
  double trial_noise_ = 0.0;

  std::int64_t step_ = 0;
  double offset_rad_ = 0.0;
  double position_nm_ = 0.0;
  double slip_ = 0.0;
  double current_a_ = 0.0;
  double commanded_ = 0.0;
  double applied_command_ = 0.0;
};

enum class TrialOutcome { Completed, Immobilized, TimedOut };

std::string_view to_string(TrialOutcome o) noexcept;
TrialOutcome trial_outcome_from_string(std::string_view s);

/// Derived per-trial metrics; present only once a record has been processed.
struct TrialMetrics {
  double slip_est = 0.0;
  std::optional<double> energy_J;
  bool energy_composite = false;
  std::optional<double> travel_time_s;
};

struct TrialRecord {
  SimConfig config;
  std::vector<SensorFrame> frames;  // one per controller tick, t = 0 first
  TrialOutcome outcome = TrialOutcome::TimedOut;
  double true_slip_mean = 0.0;      // plant ground truth, time-averaged
  std::optional<TrialMetrics> metrics;

  bool completed() const noexcept { return outcome == TrialOutcome::Completed; }
};

/// Options for run_trial beyond the configuration itself.
struct TrialHooks {
  /// Backdrive injections as (time_s, delta_rad), applied at the first tick at or after time_s.
  std::vector<std::pair<double, double>> backdrives;
  /// Optional controller trace sink.
  std::vector<ControllerTraceRow>* trace = nullptr;
  /// Per-tick ground-truth heights (mm), for verification.
  std::vector<double>* true_heights = nullptr;
};

std::shared_ptr<const PolarTable> make_polar_table(const SimConfig& config);

/// Runs controller + plant until the stroke is covered, the wheel stalls, or
/// the timeout expires. Throws Config before stepping if the config is invalid.
TrialRecord run_trial(const SimConfig& config);
TrialRecord run_trial(const SimConfig& config, std::shared_ptr<const PolarTable> table,
                      const TrialHooks& hooks = {});

}  // namespace grouser
