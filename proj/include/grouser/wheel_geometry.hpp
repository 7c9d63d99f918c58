#pragma once

#include <numbers>

namespace grouser {

/// Fixed geometry of the adaptive-grouser wheel. Lengths carry their unit in
/// the field name; angles are radians.
struct WheelGeometry {
  double radius_m = 0.0625;
  double width_mm = 42.0;
  int grouser_count = 16;
  double grouser_height_max_mm = 17.5;
  double main_grouser_width_mm = 25.0;
  double top_grouser_width_mm = 15.0;
  double chamfer_rad = std::numbers::pi / 4.0;

  /// Angular pitch between adjacent grousers, 2π / grouser_count.
  double grouser_spacing_rad() const noexcept {
    return 2.0 * std::numbers::pi / static_cast<double>(grouser_count);
  }

  /// Throws Config if any invariant is broken.
  void validate() const;

  /// Throws Range unless 0 ≤ h ≤ grouser_height_max_mm.
  void check_height(double height_mm) const;
};

/// Pinion-to-wheel reduction of the drive motor (15T pinion on a 150T gear).
inline constexpr int kDrivePinionTeeth = 15;
inline constexpr int kDriveGearTeeth = 150;
inline constexpr double kDriveReduction =
    static_cast<double>(kDriveGearTeeth) / static_cast<double>(kDrivePinionTeeth);

/// Sun-input, ring-output planetary stage driving the cam.
struct GearTrain {
  int ring_teeth = 90;
  int sun_teeth = 12;
  double input_torque_kgcm = 45.0;

  void validate() const;
  double ratio() const;
  double output_torque_kgcm() const;
};

/// Signed ratio of a sun-input / ring-output planetary stage: −ring/sun.
double gear_ratio(int ring_teeth, int sun_teeth);

/// |ratio| × input torque.
double output_torque(double ratio, double input_torque);

// Upper bound on grouser angular spacing (rad) for slip s, normalized grouser
// height h_hat and normalized sinkage z_hat:
//   (√((1+ĥ)² − (1−ẑ)²) − √(1 − (1−ẑ)²)) / (1 − s)
double grouser_spacing_bound(double slip, double h_hat, double z_hat);

/// value_mm / radius, with the radius given in metres.
double normalize(double value_mm, double radius_m);

}  // namespace grouser
