#include "grouser/wheel_geometry.hpp"

#include <cmath>
#include <string>

#include "grouser/error.hpp"

namespace grouser {

void WheelGeometry::validate() const {
  GROUSER_REQUIRE(std::isfinite(radius_m) && radius_m > 0.0, ErrorCode::Config,
                  "wheel radius must be positive");
  GROUSER_REQUIRE(grouser_count >= 1, ErrorCode::Config, "grouser_count must be >= 1");
  GROUSER_REQUIRE(std::isfinite(grouser_height_max_mm) && grouser_height_max_mm > 0.0,
                  ErrorCode::Config, "grouser_height_max_mm must be positive");
}

void WheelGeometry::check_height(double height_mm) const {
  GROUSER_REQUIRE(std::isfinite(height_mm) && height_mm >= 0.0 && height_mm <= grouser_height_max_mm,
                  ErrorCode::Range,
                  "grouser height " + std::to_string(height_mm) + " mm outside [0, " +
                      std::to_string(grouser_height_max_mm) + "]");
}

void GearTrain::validate() const {
  GROUSER_REQUIRE(sun_teeth > 0 && ring_teeth > sun_teeth, ErrorCode::Config,
                  "gear train requires ring_teeth > sun_teeth > 0");
}

double GearTrain::ratio() const { return gear_ratio(ring_teeth, sun_teeth); }

double GearTrain::output_torque_kgcm() const { return output_torque(ratio(), input_torque_kgcm); }

double gear_ratio(int ring_teeth, int sun_teeth) {
  GROUSER_REQUIRE(ring_teeth >= 1 && sun_teeth >= 1, ErrorCode::Domain,
                  "tooth counts must be >= 1");
  return -static_cast<double>(ring_teeth) / static_cast<double>(sun_teeth);
}

double output_torque(double ratio, double input_torque) { return std::abs(ratio) * input_torque; }

double grouser_spacing_bound(double slip, double h_hat, double z_hat) {
  GROUSER_REQUIRE(std::isfinite(slip) && slip >= 0.0 && slip < 1.0, ErrorCode::Domain,
                  "slip must lie in [0, 1)");
  GROUSER_REQUIRE(std::isfinite(h_hat) && h_hat >= 0.0, ErrorCode::Domain,
                  "normalized grouser height must be >= 0");
  GROUSER_REQUIRE(std::isfinite(z_hat) && z_hat >= 0.0 && z_hat <= 1.0, ErrorCode::Domain,
                  "normalized sinkage must lie in [0, 1]");

  const double sunk = (1.0 - z_hat) * (1.0 - z_hat);
  const double outer = (1.0 + h_hat) * (1.0 + h_hat) - sunk;
  const double inner = 1.0 - sunk;
  GROUSER_REQUIRE(outer >= 0.0 && inner >= 0.0, ErrorCode::Domain, "negative radicand");
  return (std::sqrt(outer) - std::sqrt(inner)) / (1.0 - slip);
}

double normalize(double value_mm, double radius_m) {
  GROUSER_REQUIRE(std::isfinite(radius_m) && radius_m > 0.0, ErrorCode::Domain,
                  "radius must be positive");
  return value_mm / (radius_m * 1000.0);
}

}  // namespace grouser
