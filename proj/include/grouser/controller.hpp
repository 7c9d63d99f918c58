#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>

#include "grouser/cam_kinematics.hpp"

namespace grouser {

/// Discrete PID gains. Output is a normalized servo rate command.
struct PidGains {
  double kp = 1.0;        // command per mm
  double ki = 4.0;        // command per mm·s
  double kd = 0.002;      // command per mm/s
  double alpha_s = 0.001; // derivative smoothing constant added to the divisor
  double ts_s = 0.010;    // controller period
  double u_min = -1.0;
  double u_max = 1.0;

  void validate() const;

  /// Integral magnitude at which Ki·I alone saturates the output; the
  /// integrator is clamped to ±this value. Infinite when ki == 0.
  double integral_limit() const noexcept;
};

struct PidState {
  double integral = 0.0;    // mm·s
  double prev_error = 0.0;  // mm
  double last_output = 0.0;
};

struct PidResult {
  double command = 0.0;
  bool saturated = false;
  double error = 0.0;
  double derivative = 0.0;
  PidState state;
};

/// One controller tick on an error value:
///   I[k] = I[k−1] + Ts/2 (e[k] + e[k−1])        (clamped to ±integral_limit)
///   D[k] = (e[k] − e[k−1]) / (Ts + α)
///   u    = sat(Kp e + Ki I + Kd D)
/// Throws Fault on non-finite input.
PidResult pid_update(const PidState& state, const PidGains& gains, double error);

/// Height-regulation wrapper: e = h_d − h, both in [0, 17.5] mm.
PidResult pid_step(const PidState& state, const PidGains& gains, double h_desired_mm, double h_mm);

/// Encoder resolution used to turn raw counts into frame angles.
struct EncoderConfig {
  int cam_counts_per_rev = 4096;  // 12-bit magnetic encoder on the cam
  double motor_cpr = 48.0;        // at the motor shaft
  double gearbox_ratio = 9.68;
  double drive_reduction = 10.0;

  void validate() const;
  double wheel_counts_per_rev() const noexcept { return motor_cpr * gearbox_ratio * drive_reduction; }
  double cam_rad_per_count() const noexcept;
  double wheel_rad_per_count() const noexcept;
  /// Offsets this far outside the deploy span are quantization, not desync.
  double desync_tolerance_rad() const noexcept { return cam_rad_per_count() + wheel_rad_per_count(); }
};

struct HeightMeasurement {
  std::uint16_t cam_angle_counts = 0;
  std::int64_t wheel_angle_counts = 0;
  double offset_rad = 0.0;
  double derived_height_mm = 0.0;
  bool clamped = false;  // offset was within quantization of the span edge
};

/// Maps an angle difference into (−π, π].
double wrap_angle(double rad) noexcept;

/// Height from frame angles: h = f(wrap(cam − wheel)). Throws Fault if the
/// wrapped offset is outside the deploy span by more than `tolerance_rad`.
HeightMeasurement measure_height_from_angles(double cam_rad, double wheel_rad, const PolarTable& table,
                                             double tolerance_rad);

/// Height from raw encoder counts. Throws Range on cam counts above 4095,
/// Fault on an apparent desync.
HeightMeasurement measure_height(int cam_counts, std::int64_t wheel_counts, const PolarTable& table,
                                 const EncoderConfig& encoders = {});

struct ControllerTraceRow {
  std::int64_t k = 0;
  double error = 0.0;
  double integral = 0.0;
  double derivative = 0.0;
  double command = 0.0;
  bool saturated = false;
};

/// k,e,I,D,u,saturated CSV with header.
void write_controller_trace(std::ostream& out, std::span<const ControllerTraceRow> rows);

}  // namespace grouser
