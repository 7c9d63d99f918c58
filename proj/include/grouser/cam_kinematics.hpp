#pragma once

#include <cstddef>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

namespace grouser {

/// One cubic piece y(x) = a3 (x−b)³ + a2 (x−b)² + a1 (x−b) + a0, valid on
/// [x_lo, x_hi] with left break b = x_lo. Millimetres throughout.
struct SplineSegment {
  double a3 = 0.0;
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;

  double eval(double x) const noexcept {
    const double u = x - x_lo;
    return ((a3 * u + a2) * u + a1) * u + a0;
  }
  double slope(double x) const noexcept {
    const double u = x - x_lo;
    return (3.0 * a3 * u + 2.0 * a2) * u + a1;
  }
};

/// How a C⁰ mismatch between consecutive segments is treated.
enum class JunctionMode {
  AsPrinted,           // each segment evaluated with its own coefficients
  ContinuityEnforced,  // later a0 replaced by the earlier segment's end value
};

struct JunctionDiagnostic {
  std::size_t left_segment = 0;
  double x_mm = 0.0;
  double left_value_mm = 0.0;   // earlier segment evaluated at the break
  double right_value_mm = 0.0;  // later segment evaluated at the break (as printed)
  double mismatch_mm() const noexcept { return right_value_mm - left_value_mm; }
};

/// Cam slot centreline in the cam's Cartesian frame.
class CamProfile {
 public:
  CamProfile(std::vector<SplineSegment> segments, JunctionMode mode = JunctionMode::AsPrinted,
             double junction_tolerance_mm = 1e-6);

  /// The two-piece slot used on the wheel (break at 17.1 mm, end at 32.94 mm).
  static CamProfile wheel_slot(JunctionMode mode = JunctionMode::AsPrinted);

  /// Evaluates the segment whose interval contains x. A shared break belongs
  /// to the later segment. Throws Range outside [x_min, x_max].
  double eval(double x) const;
  double eval_segment(std::size_t index, double x) const;

  double x_min() const noexcept { return segments_.front().x_lo; }
  double x_max() const noexcept { return segments_.back().x_hi; }
  JunctionMode mode() const noexcept { return mode_; }
  double junction_tolerance_mm() const noexcept { return junction_tolerance_mm_; }
  std::span<const SplineSegment> segments() const noexcept { return segments_; }

  /// Junctions whose printed mismatch exceeds the tolerance. Reported in both
  /// modes; in ContinuityEnforced mode the evaluated profile no longer shows it.
  std::span<const JunctionDiagnostic> junction_mismatches() const noexcept { return mismatches_; }

 private:
  std::vector<SplineSegment> segments_;
  JunctionMode mode_;
  double junction_tolerance_mm_;
  std::vector<JunctionDiagnostic> mismatches_;
};

double eval_spline(const CamProfile& profile, double x);

inline constexpr double kFullDeployOffsetRad = -64.5 * std::numbers::pi / 180.0;
inline constexpr double kFullDeployHeightMm = 17.5;

struct PolarSample {
  double theta_rad = 0.0;   // atan2(y, x) in the cam frame
  double r_mm = 0.0;        // hypot(x, y)
  double offset_rad = 0.0;  // cam–wheel offset, 0 at retracted, negative when deploying
  double h_mm = 0.0;        // grouser height
};

/// An interval of the table bridged across dropped samples (non-advancing
/// polar samples, e.g. a slot discontinuity).
struct PolarGap {
  double offset_hi_rad = 0.0;  // nearer to zero
  double offset_lo_rad = 0.0;
  double h_lo_mm = 0.0;
  double h_hi_mm = 0.0;
  std::size_t dropped = 0;
};

struct PolarDiagnostics {
  std::size_t requested_samples = 0;
  std::size_t dropped_samples = 0;
  double raw_theta_span_rad = 0.0;
  double raw_radius_span_mm = 0.0;
  double max_interp_error_mm = 0.0;
  std::vector<PolarGap> gaps;
  std::vector<JunctionDiagnostic> junctions;
};

/// Densely sampled polar form of the slot, anchored so that zero offset is
/// h = 0 and the full-deploy offset is h = 17.5 mm. Offsets and heights are
/// both strictly monotone along the table, so the mapping is a bijection under
/// piecewise-linear interpolation. Immutable after construction.
class PolarTable {
 public:
  /// Interpolation error budget enforced at construction.
  static constexpr double kMaxInterpErrorMm = 0.01;
  static constexpr int kMinSamples = 64;
  /// Queries this far outside the span are clamped instead of rejected.
  static constexpr double kEdgeToleranceRad = 1e-9;
  static constexpr double kEdgeToleranceMm = 1e-9;

  static PolarTable sample(const CamProfile& profile, int n);

  double height_from_offset(double offset_rad) const;
  double offset_from_height(double h_mm) const;

  double offset_span_rad() const noexcept { return kFullDeployOffsetRad; }
  std::span<const PolarSample> samples() const noexcept { return samples_; }
  const PolarDiagnostics& diagnostics() const noexcept { return diagnostics_; }

  /// theta_rad,r_mm,h_mm,offset_rad rows with a header line.
  void write_csv(std::ostream& out) const;

 private:
  PolarTable() = default;

  std::vector<PolarSample> samples_;  // offset descending, h ascending
  PolarDiagnostics diagnostics_;
};

PolarTable sample_polar(const CamProfile& profile, int n);
double height_from_offset(const PolarTable& table, double delta_theta_rad);
double offset_from_height(const PolarTable& table, double h_mm);

}  // namespace grouser
