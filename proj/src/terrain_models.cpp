#include "grouser/terrain_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grouser/cam_kinematics.hpp"
#include "grouser/error.hpp"
#include "grouser/terrain_analysis.hpp"

namespace grouser {

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::Measured: return "measured";
    case Provenance::Derived: return "derived";
    case Provenance::Free: return "free";
  }
  return "free";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "measured") return Provenance::Measured;
  if (s == "derived") return Provenance::Derived;
  if (s == "free") return Provenance::Free;
  throw Error(ErrorCode::Config, "unknown provenance '" + std::string(s) + "'");
}

PackingState PackingState::from_densities(std::string label, double bulk_density, double particle_density) {
  PackingState p;
  p.label = std::move(label);
  p.bulk_density = bulk_density;
  p.particle_density = particle_density;
  p.volume_fraction = grouser::volume_fraction(bulk_density, particle_density);
  return p;
}

void PackingState::validate() const {
  GROUSER_REQUIRE(volume_fraction > 0.0 && volume_fraction < 1.0, ErrorCode::Config,
                  "packing volume fraction must lie in (0, 1)");
  GROUSER_REQUIRE(std::abs(volume_fraction - bulk_density / particle_density) <= 0.001, ErrorCode::Config,
                  "packing volume fraction inconsistent with densities");
}

void TerrainModel::validate() const {
  GROUSER_REQUIRE(!name.empty(), ErrorCode::Config, "terrain model needs a name");
  GROUSER_REQUIRE(!anchors.empty(), ErrorCode::Config, "terrain '" + name + "' has no slip anchors");
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto& a = anchors[i];
    GROUSER_REQUIRE(a.slip_mean >= 0.0 && a.slip_mean <= 1.0, ErrorCode::Config,
                    "terrain '" + name + "' slip anchor outside [0, 1]");
    GROUSER_REQUIRE(a.height_mm >= 0.0 && a.height_mm <= kFullDeployHeightMm, ErrorCode::Config,
                    "terrain '" + name + "' anchor height outside [0, 17.5]");
    if (i > 0) {
      GROUSER_REQUIRE(a.height_mm > anchors[i - 1].height_mm, ErrorCode::Config,
                      "terrain '" + name + "' anchors must be strictly increasing in height");
    }
  }
  GROUSER_REQUIRE(std::isfinite(slip_sigma) && slip_sigma >= 0.0, ErrorCode::Config,
                  "terrain '" + name + "' slip sigma must be >= 0");
  GROUSER_REQUIRE(slip_ceiling > 0.0 && slip_ceiling <= 1.0, ErrorCode::Config,
                  "terrain '" + name + "' slip ceiling must lie in (0, 1]");
  GROUSER_REQUIRE(current.baseline_a >= 0.0 && current.spike_rate_hz >= 0.0 && current.spike_amp_a >= 0.0 &&
                      current.spike_duration_s >= 0.0,
                  ErrorCode::Config, "terrain '" + name + "' current parameters must be non-negative");
  if (packing) packing->validate();
  if (d50_mm) GROUSER_REQUIRE(*d50_mm > 0.0, ErrorCode::Config, "terrain '" + name + "' d50 must be positive");
}

double TerrainModel::slip_mean(double h_mm) const {
  GROUSER_REQUIRE(std::isfinite(h_mm) && h_mm >= 0.0 && h_mm <= kFullDeployHeightMm, ErrorCode::Range,
                  "grouser height " + std::to_string(h_mm) + " mm outside [0, 17.5]");
  if (h_mm <= anchors.front().height_mm) return anchors.front().slip_mean;
  if (h_mm >= anchors.back().height_mm) return anchors.back().slip_mean;
  auto hi = std::lower_bound(anchors.begin(), anchors.end(), h_mm,
                             [](const SlipAnchor& a, double h) { return a.height_mm < h; });
  auto lo = std::prev(hi);
  const double t = (h_mm - lo->height_mm) / (hi->height_mm - lo->height_mm);
  return lo->slip_mean + t * (hi->slip_mean - lo->slip_mean);
}

bool is_immobilizing(const TerrainModel& model, double h_mm) {
  return model.immobilize_below_mm.has_value() && h_mm < *model.immobilize_below_mm;
}

double slip_response(const TerrainModel& model, double h_mm, std::uint64_t seed) {
  const double mean = model.slip_mean(h_mm);
  if (is_immobilizing(model, h_mm)) return 1.0;
  Rng rng(seed);
  return std::clamp(mean + model.slip_sigma * rng.normal(), 0.0, model.slip_ceiling);
}

CurrentTraceParams current_model(const TerrainModel& model, double slip, std::uint64_t seed) {
  GROUSER_REQUIRE(std::isfinite(slip) && slip >= 0.0 && slip <= 1.0, ErrorCode::Range,
                  "slip must lie in [0, 1]");
  return {model.current.baseline_a + model.current.slip_gain_a * slip, model.current.spike_rate_hz,
          model.current.spike_amp_a, model.current.spike_duration_s, seed};
}

CurrentSource::CurrentSource(const CurrentParams& params, std::uint64_t seed) : params_(params), rng_(seed) {}

double CurrentSource::next(double slip, double dt_s) {
  double amps = params_.baseline_a + params_.slip_gain_a * slip;
  if (params_.spike_rate_hz > 0.0) {
    if (spike_remaining_s_ <= 0.0 && rng_.uniform() < params_.spike_rate_hz * dt_s) {
      spike_remaining_s_ = params_.spike_duration_s;
    }
    if (spike_remaining_s_ > 0.0) {
      amps += params_.spike_amp_a;
      spike_remaining_s_ -= dt_s;
    }
  }
  return amps;
}

}  // namespace grouser
