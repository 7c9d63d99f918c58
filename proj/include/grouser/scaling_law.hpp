#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grouser/terrain_models.hpp"

namespace grouser {

/// Slip-minimizing grouser height of one terrain against its median diameter.
struct OptimumPoint {
  std::string terrain;
  double d50_mm = 0.0;
  double h_star_mm = 0.0;
  Provenance source = Provenance::Measured;
};

enum class FitFamily {
  Power,  // h = a D^b
  Log,    // h = a + b ln D
  Exp,    // h = a e^{b D}
};

enum class FitSpace {
  Linearized,  // OLS in the family's linearizing coordinates
  Original,    // nonlinear least squares on h itself
};

std::string_view to_string(FitFamily f) noexcept;
std::string_view to_string(FitSpace s) noexcept;
FitFamily fit_family_from_string(std::string_view s);

struct ScalingFit {
  FitFamily family = FitFamily::Power;
  FitSpace space = FitSpace::Linearized;
  double a = 0.0;
  double b = 0.0;
  double r_squared_fit = 0.0;       // in the coordinates the regression minimized
  double r_squared_original = 0.0;  // on h, comparable across families
  std::size_t point_count = 0;

  double eval(double d_mm) const;
  /// Human-readable description of the regression coordinates.
  std::string fit_space_descriptor() const;
};

/// Least-squares fit of one family. Power and exp families require h > 0.
/// Throws Fit on fewer than three points, non-positive D, or zero spread in D.
ScalingFit fit_family(std::span<const OptimumPoint> points, FitFamily family,
                      FitSpace space = FitSpace::Linearized);

/// Fits every family in the requested space.
std::vector<ScalingFit> fit_all_families(std::span<const OptimumPoint> points, FitSpace space);

/// Highest original-space R².
const ScalingFit& select_best(std::span<const ScalingFit> fits);

struct HeightPrediction {
  double h_mm = 0.0;    // clamped to the actuation range
  double raw_mm = 0.0;  // before clamping
  bool clamped = false;
};

/// Evaluates the fit at D = d50, clamped to [0, 17.5] mm.
HeightPrediction predict_height(const ScalingFit& fit, double d50_mm);

/// One row of measured slip at a previously tested height and at the
/// model-predicted height (mean ± std over repeated trials).
struct ValidationMeasurement {
  std::string terrain;
  std::optional<double> volume_fraction;
  std::optional<double> d50_mm;
  double previous_height_mm = 0.0;
  double reported_predicted_height_mm = 0.0;
  double previous_slip = 0.0;
  double previous_slip_std = 0.0;
  double measured_slip = 0.0;
  double measured_slip_std = 0.0;
};

struct ValidationRow {
  ValidationMeasurement measurement;
  std::optional<HeightPrediction> model_height;  // present when d50 is known
  double percent_change = 0.0;                   // 100 (prev − new) / prev
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  std::vector<std::string> missing_terrains;
  bool partial() const noexcept { return !missing_terrains.empty(); }

  void write_csv(std::ostream& out) const;
  void write_table(std::ostream& out) const;
};

double percent_change(double previous, double measured);

/// Builds a validation report. Terrains listed in `expected` without a row
/// are reported as missing (the report is then flagged partial).
ValidationReport validate_table(const ScalingFit& fit, std::span<const ValidationMeasurement> measurements,
                                std::span<const std::string> expected = {});

void write_fits_csv(std::ostream& out, std::span<const ScalingFit> fits);

}  // namespace grouser
