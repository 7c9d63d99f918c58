#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grouser/rng.hpp"

namespace grouser {

/// Where a calibration number comes from.
enum class Provenance {
  Measured,  // reported measurement
  Derived,   // computed from reported measurements
  Free,      // unconstrained choice, bounded only by reported trends
};

std::string_view to_string(Provenance p) noexcept;
Provenance provenance_from_string(std::string_view s);

struct SlipAnchor {
  double height_mm = 0.0;
  double slip_mean = 0.0;
  Provenance provenance = Provenance::Free;
  std::string note;
};

/// Drive current model: mean = baseline + slip_gain × slip, plus Poisson-timed
/// rectangular spikes on terrains with large granules.
struct CurrentParams {
  double baseline_a = 0.8;
  double slip_gain_a = 0.6;
  double spike_rate_hz = 0.0;
  double spike_amp_a = 0.0;
  double spike_duration_s = 0.05;
};

/// Bulk packing of a granular terrain; volume_fraction = bulk / particle.
struct PackingState {
  std::string label;
  double bulk_density = 0.0;
  double particle_density = 2650.0;
  double volume_fraction = 0.0;

  static PackingState from_densities(std::string label, double bulk_density, double particle_density = 2650.0);
  void validate() const;
};

/// Calibrated empirical response of one terrain state to grouser height.
struct TerrainModel {
  std::string name;
  std::vector<SlipAnchor> anchors;  // sorted by height
  double slip_sigma = 0.0;
  Provenance sigma_provenance = Provenance::Measured;
  std::optional<double> immobilize_below_mm;
  double slip_ceiling = 1.0;  // samples are clamped to [0, ceiling]
  CurrentParams current;
  std::optional<PackingState> packing;
  std::optional<double> d50_mm;  // characteristic diameter; absent for non-granular surfaces

  void validate() const;

  /// Monotone piecewise-linear interpolation between anchors, clamped at the
  /// ends (no extrapolation). Throws Range outside [0, 17.5] mm.
  double slip_mean(double h_mm) const;
  std::string packing_label() const { return packing ? packing->label : std::string{}; }
};

/// Trial-level slip sample: full slip (1.0) when the height immobilizes the
/// wheel, otherwise mean + N(0, σ) clamped to [0, slip_ceiling]. Deterministic
/// for a given seed.
double slip_response(const TerrainModel& model, double h_mm, std::uint64_t seed);

bool is_immobilizing(const TerrainModel& model, double h_mm);

struct CurrentTraceParams {
  double mean_a = 0.0;  // spike-free mean
  double spike_rate_hz = 0.0;
  double spike_amp_a = 0.0;
  double spike_duration_s = 0.0;
  std::uint64_t seed = 0;
};

CurrentTraceParams current_model(const TerrainModel& model, double slip, std::uint64_t seed);

/// Fixed-step current generator: baseline + slip_gain × slip, plus spikes
/// whose start times form a Poisson process of rate spike_rate_hz.
class CurrentSource {
 public:
  CurrentSource(const CurrentParams& params, std::uint64_t seed);

  /// Current over the next step of length dt_s given the instantaneous slip.
  double next(double slip, double dt_s);

 private:
  CurrentParams params_;
  Rng rng_;
  double spike_remaining_s_ = 0.0;
};

}  // namespace grouser
