#pragma once

#include <cstdint>

namespace grouser {

/// Frame flag bits.
inline constexpr std::uint8_t kFlagSaturated = 0x01;    // controller output saturated this tick
inline constexpr std::uint8_t kFlagBackdrive = 0x02;    // cam offset perturbed externally
inline constexpr std::uint8_t kFlagDesync = 0x04;       // cam/wheel offset outside the deploy span
inline constexpr std::uint8_t kFlagImmobilized = 0x08;  // plant reports full slip

/// One quantized sample of the four testbed sensors.
struct SensorFrame {
  std::uint64_t t_us = 0;
  std::int64_t motor_counts = 0;     // drive motor encoder, signed
  std::uint16_t cam_counts = 0;      // 12-bit absolute cam angle
  std::int64_t linear_counts = 0;    // 5 µm per count
  std::uint32_t current_mA = 0;      // drive motor current
  std::uint8_t flags = 0;

  double t_s() const noexcept { return static_cast<double>(t_us) * 1e-6; }
  double current_A() const noexcept { return static_cast<double>(current_mA) * 1e-3; }

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

}  // namespace grouser
