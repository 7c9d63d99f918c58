#pragma once

#include <iosfwd>
#include <span>
#include <vector>

namespace grouser {

struct SieveBin {
  double aperture_mm = 0.0;  // 0 denotes the pan
  double mass_retained = 0.0;
};

/// Raw sieve analysis: mass retained on each aperture. Order of bins is free.
struct SieveDataset {
  std::vector<SieveBin> bins;

  double total_mass() const noexcept;
  void validate() const;

  /// Reads `aperture_mm,mass_retained` rows; a non-numeric first line is
  /// treated as a header.
  static SieveDataset read_csv(std::istream& in);
};

enum class InterpSpace {
  LogDiameter,  // linear in (ln D, percent), the usual gradation-curve convention
  Linear,       // linear in (D, percent)
};

struct PsdPoint {
  double diameter_mm = 0.0;
  double percent_passing = 0.0;
};

/// Cumulative percent-passing curve, diameters strictly increasing and percent
/// non-decreasing within [0, 100].
class PsdCurve {
 public:
  explicit PsdCurve(std::vector<PsdPoint> points);

  std::span<const PsdPoint> points() const noexcept { return points_; }

  /// Percent passing at diameter d. Throws Extrapolation outside the curve.
  double percent_passing(double diameter_mm, InterpSpace space = InterpSpace::LogDiameter) const;

  /// D_p with percent_passing(D_p) = p. Exact at knots; throws Extrapolation
  /// when p is outside the curve's percent span, Domain unless 0 < p < 100.
  double percentile_diameter(double percent, InterpSpace space = InterpSpace::LogDiameter) const;

  void write_csv(std::ostream& out) const;

 private:
  std::vector<PsdPoint> points_;
};

/// Percent passing at each (non-pan) aperture = 100 × mass finer / total.
PsdCurve build_cumulative_curve(const SieveDataset& data);

double percentile_diameter(const PsdCurve& curve, double percent,
                           InterpSpace space = InterpSpace::LogDiameter);

/// Solid volume fraction from densities, ρ_b / ρ_s. Throws Data when bulk
/// exceeds particle density, and when they are equal (a solid block is not a
/// granular packing).
double volume_fraction(double bulk_density, double particle_density);

/// Solid volume fraction from volumes, V_s / V.
double volume_fraction_from_volumes(double solid_volume, double bulk_volume);

}  // namespace grouser
