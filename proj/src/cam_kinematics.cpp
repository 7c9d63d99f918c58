#include "grouser/cam_kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "grouser/error.hpp"

namespace grouser {

CamProfile::CamProfile(std::vector<SplineSegment> segments, JunctionMode mode,
                       double junction_tolerance_mm)
    : segments_(std::move(segments)), mode_(mode), junction_tolerance_mm_(junction_tolerance_mm) {
  GROUSER_REQUIRE(!segments_.empty(), ErrorCode::Config, "cam profile needs at least one segment");
  GROUSER_REQUIRE(junction_tolerance_mm_ >= 0.0, ErrorCode::Config,
                  "junction tolerance must be non-negative");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    GROUSER_REQUIRE(s.x_hi > s.x_lo, ErrorCode::Config,
                    "segment " + std::to_string(i) + " has an empty interval");
    if (i > 0) {
      GROUSER_REQUIRE(std::abs(s.x_lo - segments_[i - 1].x_hi) <= 1e-12, ErrorCode::Config,
                      "segments are not contiguous at index " + std::to_string(i));
    }
  }

  for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
    auto& next = segments_[i + 1];
    const double left = segments_[i].eval(next.x_lo);
    const double right = next.a0;
    if (std::abs(right - left) > junction_tolerance_mm_) {
      mismatches_.push_back({i, next.x_lo, left, right});
      if (mode_ == JunctionMode::ContinuityEnforced) next.a0 = left;
    }
  }
}

CamProfile CamProfile::wheel_slot(JunctionMode mode) {
  return CamProfile(
      {
          {-1.49455e-4, 5.10785e-3, -1.63208e-2, 19.0, 0.0, 17.1},
          {1.42438e-4, -9.69534e-3, -1.16216e-1, 23.5, 17.1, 32.94},
      },
      mode);
}

double CamProfile::eval(double x) const {
  GROUSER_REQUIRE(std::isfinite(x) && x >= x_min() && x <= x_max(), ErrorCode::Range,
                  "spline abscissa " + std::to_string(x) + " outside [" + std::to_string(x_min()) +
                      ", " + std::to_string(x_max()) + "]");
  auto it = std::upper_bound(segments_.begin(), segments_.end(), x,
                             [](double v, const SplineSegment& s) { return v < s.x_lo; });
  const auto& seg = *std::prev(it);
  return seg.eval(x);
}

double CamProfile::eval_segment(std::size_t index, double x) const {
  GROUSER_REQUIRE(index < segments_.size(), ErrorCode::Range, "segment index out of range");
  const auto& seg = segments_[index];
  GROUSER_REQUIRE(std::isfinite(x) && x >= seg.x_lo && x <= seg.x_hi, ErrorCode::Range,
                  "abscissa outside segment " + std::to_string(index));
  return seg.eval(x);
}

double eval_spline(const CamProfile& profile, double x) { return profile.eval(x); }

namespace {

struct RawSample {
  double x;
  std::size_t segment;
  double theta;
  double r;
};

}  // namespace

PolarTable PolarTable::sample(const CamProfile& profile, int n) {
  GROUSER_REQUIRE(n >= kMinSamples, ErrorCode::Config,
                  "polar table needs at least " + std::to_string(kMinSamples) + " samples");

  const auto segments = profile.segments();
  const double length = profile.x_max() - profile.x_min();

  // Dense Cartesian sampling, endpoints of every segment included.
  std::vector<RawSample> raw;
  raw.reserve(static_cast<std::size_t>(n) + segments.size());
  int remaining = n;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& seg = segments[k];
    int count = (k + 1 == segments.size())
                    ? remaining
                    : static_cast<int>(std::lround(n * (seg.x_hi - seg.x_lo) / length));
    count = std::max(count, 2);
    remaining -= count;
    for (int i = 0; i < count; ++i) {
      const double x = (i + 1 == count) ? seg.x_hi
                                        : seg.x_lo + (seg.x_hi - seg.x_lo) * i / (count - 1);
      const double y = seg.eval(x);
      const RawSample s{x, k, std::atan2(y, x), std::hypot(x, y)};
      if (!raw.empty() && std::abs(raw.back().theta - s.theta) < 1e-15 &&
          std::abs(raw.back().r - s.r) < 1e-12) {
        continue;  // coincident break point
      }
      raw.push_back(s);
    }
  }

  PolarTable table;
  auto& diag = table.diagnostics_;
  diag.requested_samples = static_cast<std::size_t>(n);
  diag.junctions.assign(profile.junction_mismatches().begin(), profile.junction_mismatches().end());

  const double theta0 = raw.front().theta;
  const double r0 = raw.front().r;
  const double theta_end = raw.back().theta;
  const double r_end = raw.back().r;
  diag.raw_theta_span_rad = theta0 - theta_end;
  diag.raw_radius_span_mm = r_end - r0;
  GROUSER_REQUIRE(diag.raw_theta_span_rad > 0.0 && diag.raw_radius_span_mm > 0.0,
                  ErrorCode::Config, "slot must sweep clockwise and outward");

  const auto to_offset = [&](double theta) {
    return kFullDeployOffsetRad * (theta0 - theta) / (theta0 - theta_end);
  };
  const auto to_height = [&](double r) { return kFullDeployHeightMm * (r - r0) / (r_end - r0); };

  // Keep only samples that strictly advance the sweep: θ decreasing and r
  // increasing. Anything else is shadowed by an earlier part of the slot.
  std::vector<std::size_t> kept{0};
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const auto& last = raw[kept.back()];
    if (raw[i].theta < last.theta && raw[i].r > last.r) kept.push_back(i);
  }
  GROUSER_REQUIRE(kept.back() == raw.size() - 1, ErrorCode::Config,
                  "slot end point is shadowed; profile is not a usable cam");
  diag.dropped_samples = raw.size() - kept.size();

  table.samples_.reserve(kept.size());
  for (std::size_t idx : kept) {
    table.samples_.push_back({raw[idx].theta, raw[idx].r, to_offset(raw[idx].theta), to_height(raw[idx].r)});
  }
  table.samples_.front().offset_rad = 0.0;
  table.samples_.front().h_mm = 0.0;
  table.samples_.back().offset_rad = kFullDeployOffsetRad;
  table.samples_.back().h_mm = kFullDeployHeightMm;

  for (std::size_t j = 1; j < kept.size(); ++j) {
    const auto& a = raw[kept[j - 1]];
    const auto& b = raw[kept[j]];
    const std::size_t skipped = kept[j] - kept[j - 1] - 1;
    if (skipped > 0 || a.segment != b.segment) {
      if (skipped > 0) {
        diag.gaps.push_back({table.samples_[j - 1].offset_rad, table.samples_[j].offset_rad,
                             table.samples_[j - 1].h_mm, table.samples_[j].h_mm, skipped});
      }
      continue;
    }
    const double xm = 0.5 * (a.x + b.x);
    const double ym = segments[a.segment].eval(xm);
    const double truth = to_height(std::hypot(xm, ym));
    const double interp = table.height_from_offset(to_offset(std::atan2(ym, xm)));
    diag.max_interp_error_mm = std::max(diag.max_interp_error_mm, std::abs(interp - truth));
  }
  GROUSER_REQUIRE(diag.max_interp_error_mm <= kMaxInterpErrorMm, ErrorCode::Config,
                  "polar table with n=" + std::to_string(n) + " has interpolation error " +
                      std::to_string(diag.max_interp_error_mm) + " mm above the budget");
  return table;
}

double PolarTable::height_from_offset(double offset_rad) const {
  GROUSER_REQUIRE(std::isfinite(offset_rad), ErrorCode::Range, "offset is not finite");
  GROUSER_REQUIRE(offset_rad <= kEdgeToleranceRad && offset_rad >= kFullDeployOffsetRad - kEdgeToleranceRad,
                  ErrorCode::Range,
                  "cam offset " + std::to_string(offset_rad) + " rad outside the deploy span");
  const double q = std::clamp(offset_rad, kFullDeployOffsetRad, 0.0);

  // Offsets are stored in descending order.
  auto it = std::lower_bound(samples_.begin(), samples_.end(), q,
                             [](const PolarSample& s, double v) { return s.offset_rad > v; });
  if (it == samples_.begin()) return samples_.front().h_mm;
  if (it == samples_.end()) return samples_.back().h_mm;
  const auto& hi = *it;
  const auto& lo = *std::prev(it);
  const double t = (q - lo.offset_rad) / (hi.offset_rad - lo.offset_rad);
  return std::clamp(lo.h_mm + t * (hi.h_mm - lo.h_mm), 0.0, kFullDeployHeightMm);
}

double PolarTable::offset_from_height(double h_mm) const {
  GROUSER_REQUIRE(std::isfinite(h_mm) && h_mm >= -kEdgeToleranceMm &&
                      h_mm <= kFullDeployHeightMm + kEdgeToleranceMm,
                  ErrorCode::Range, "grouser height " + std::to_string(h_mm) + " mm outside [0, 17.5]");
  const double q = std::clamp(h_mm, 0.0, kFullDeployHeightMm);

  auto it = std::lower_bound(samples_.begin(), samples_.end(), q,
                             [](const PolarSample& s, double v) { return s.h_mm < v; });
  if (it == samples_.begin()) return samples_.front().offset_rad;
  if (it == samples_.end()) return samples_.back().offset_rad;
  const auto& hi = *it;
  const auto& lo = *std::prev(it);
  const double t = (q - lo.h_mm) / (hi.h_mm - lo.h_mm);
  return std::clamp(lo.offset_rad + t * (hi.offset_rad - lo.offset_rad), kFullDeployOffsetRad, 0.0);
}

void PolarTable::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "theta_rad,r_mm,h_mm,offset_rad\n";
  for (const auto& s : samples_) {
    out << s.theta_rad << ',' << s.r_mm << ',' << s.h_mm << ',' << s.offset_rad << '\n';
  }
  out.precision(old_precision);
}

PolarTable sample_polar(const CamProfile& profile, int n) { return PolarTable::sample(profile, n); }

double height_from_offset(const PolarTable& table, double delta_theta_rad) {
  return table.height_from_offset(delta_theta_rad);
}

double offset_from_height(const PolarTable& table, double h_mm) { return table.offset_from_height(h_mm); }

}  // namespace grouser
