#include "grouser/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "grouser/error.hpp"

namespace grouser {

void PidGains::validate() const {
  GROUSER_REQUIRE(std::isfinite(kp) && std::isfinite(ki) && std::isfinite(kd), ErrorCode::Config,
                  "PID gains must be finite");
  GROUSER_REQUIRE(std::isfinite(ts_s) && ts_s > 0.0, ErrorCode::Config, "sampling period must be positive");
  GROUSER_REQUIRE(std::isfinite(alpha_s) && alpha_s >= 0.0, ErrorCode::Config,
                  "derivative smoothing constant must be >= 0");
  GROUSER_REQUIRE(u_min < u_max, ErrorCode::Config, "command limits must satisfy u_min < u_max");
}

double PidGains::integral_limit() const noexcept {
  if (ki == 0.0) return std::numeric_limits<double>::infinity();
  return std::max(std::abs(u_min), std::abs(u_max)) / std::abs(ki);
}

PidResult pid_update(const PidState& state, const PidGains& gains, double error) {
  GROUSER_REQUIRE(std::isfinite(error), ErrorCode::Fault, "non-finite controller error");
  GROUSER_REQUIRE(std::isfinite(state.integral) && std::isfinite(state.prev_error), ErrorCode::Fault,
                  "non-finite controller state");

  const double limit = gains.integral_limit();
  PidResult out;
  out.error = error;
  out.state.integral =
      std::clamp(state.integral + 0.5 * gains.ts_s * (error + state.prev_error), -limit, limit);
  out.derivative = (error - state.prev_error) / (gains.ts_s + gains.alpha_s);

  const double raw = gains.kp * error + gains.ki * out.state.integral + gains.kd * out.derivative;
  out.command = std::clamp(raw, gains.u_min, gains.u_max);
  out.saturated = out.command != raw;
  out.state.prev_error = error;
  out.state.last_output = out.command;
  return out;
}

PidResult pid_step(const PidState& state, const PidGains& gains, double h_desired_mm, double h_mm) {
  GROUSER_REQUIRE(std::isfinite(h_desired_mm) && std::isfinite(h_mm), ErrorCode::Fault,
                  "non-finite height input");
  GROUSER_REQUIRE(h_desired_mm >= 0.0 && h_desired_mm <= kFullDeployHeightMm && h_mm >= 0.0 &&
                      h_mm <= kFullDeployHeightMm,
                  ErrorCode::Range, "controller heights must lie in [0, 17.5] mm");
  return pid_update(state, gains, h_desired_mm - h_mm);
}

void EncoderConfig::validate() const {
  GROUSER_REQUIRE(cam_counts_per_rev > 0, ErrorCode::Config, "cam counts per rev must be positive");
  GROUSER_REQUIRE(motor_cpr > 0.0 && gearbox_ratio > 0.0 && drive_reduction > 0.0, ErrorCode::Config,
                  "motor encoder chain must be positive");
}

double EncoderConfig::cam_rad_per_count() const noexcept {
  return 2.0 * std::numbers::pi / static_cast<double>(cam_counts_per_rev);
}

double EncoderConfig::wheel_rad_per_count() const noexcept {
  return 2.0 * std::numbers::pi / wheel_counts_per_rev();
}

double wrap_angle(double rad) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(rad, two_pi);  // [−π, π]
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

HeightMeasurement measure_height_from_angles(double cam_rad, double wheel_rad, const PolarTable& table,
                                             double tolerance_rad) {
  GROUSER_REQUIRE(std::isfinite(cam_rad) && std::isfinite(wheel_rad), ErrorCode::Fault,
                  "non-finite encoder angle");
  HeightMeasurement m;
  m.offset_rad = wrap_angle(cam_rad - wheel_rad);
  if (m.offset_rad > tolerance_rad || m.offset_rad < kFullDeployOffsetRad - tolerance_rad) {
    throw Error(ErrorCode::Fault, "cam-wheel offset " + std::to_string(m.offset_rad) +
                                      " rad outside the deploy span (possible encoder desync)");
  }
  const double clamped = std::clamp(m.offset_rad, kFullDeployOffsetRad, 0.0);
  m.clamped = clamped != m.offset_rad;
  m.derived_height_mm = table.height_from_offset(clamped);
  return m;
}

HeightMeasurement measure_height(int cam_counts, std::int64_t wheel_counts, const PolarTable& table,
                                 const EncoderConfig& encoders) {
  GROUSER_REQUIRE(cam_counts >= 0 && cam_counts < encoders.cam_counts_per_rev, ErrorCode::Range,
                  "cam encoder counts " + std::to_string(cam_counts) + " outside the 12-bit range");
  const double wheel_rad = static_cast<double>(wheel_counts) * encoders.wheel_rad_per_count();
  const double cam_rad = static_cast<double>(cam_counts) * encoders.cam_rad_per_count();
  auto m = measure_height_from_angles(cam_rad, wheel_rad, table, encoders.desync_tolerance_rad());
  m.cam_angle_counts = static_cast<std::uint16_t>(cam_counts);
  m.wheel_angle_counts = wheel_counts;
  return m;
}

void write_controller_trace(std::ostream& out, std::span<const ControllerTraceRow> rows) {
  const auto old_precision = out.precision(17);
  out << "k,e,I,D,u,saturated\n";
  for (const auto& r : rows) {
    out << r.k << ',' << r.error << ',' << r.integral << ',' << r.derivative << ',' << r.command << ','
        << (r.saturated ? 1 : 0) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace grouser
