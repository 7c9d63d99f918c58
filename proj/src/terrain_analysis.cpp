#include "grouser/terrain_analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "grouser/error.hpp"

namespace grouser {

double SieveDataset::total_mass() const noexcept {
  double total = 0.0;
  for (const auto& b : bins) total += b.mass_retained;
  return total;
}

void SieveDataset::validate() const {
  GROUSER_REQUIRE(!bins.empty(), ErrorCode::Data, "sieve dataset is empty");
  for (const auto& b : bins) {
    GROUSER_REQUIRE(std::isfinite(b.aperture_mm) && b.aperture_mm >= 0.0, ErrorCode::Data,
                    "sieve aperture must be >= 0");
    GROUSER_REQUIRE(std::isfinite(b.mass_retained) && b.mass_retained >= 0.0, ErrorCode::Data,
                    "retained mass must be >= 0");
  }
  GROUSER_REQUIRE(total_mass() > 0.0, ErrorCode::Data, "sieve dataset has zero total mass");
}

namespace {

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

SieveDataset SieveDataset::read_csv(std::istream& in) {
  SieveDataset data;
  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    const bool header_allowed = first_row;
    first_row = false;
    const auto comma = line.find(',');
    double aperture = 0.0;
    double mass = 0.0;
    const bool ok = comma != std::string::npos &&
                    parse_double(std::string_view(line).substr(0, comma), aperture) &&
                    parse_double(std::string_view(line).substr(comma + 1), mass);
    if (!ok) {
      if (header_allowed) continue;  // header
      throw Error(ErrorCode::Data, "malformed sieve row " + std::to_string(line_no) + ": '" + line + "'");
    }
    data.bins.push_back({aperture, mass});
  }
  data.validate();
  return data;
}

PsdCurve::PsdCurve(std::vector<PsdPoint> points) : points_(std::move(points)) {
  GROUSER_REQUIRE(points_.size() >= 2, ErrorCode::Data, "percent-passing curve needs at least two points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    GROUSER_REQUIRE(std::isfinite(p.diameter_mm) && p.diameter_mm > 0.0, ErrorCode::Data,
                    "curve diameters must be positive");
    GROUSER_REQUIRE(p.percent_passing >= 0.0 && p.percent_passing <= 100.0, ErrorCode::Data,
                    "percent passing outside [0, 100]");
    if (i > 0) {
      GROUSER_REQUIRE(p.diameter_mm > points_[i - 1].diameter_mm, ErrorCode::Data,
                      "curve diameters must be strictly increasing");
      GROUSER_REQUIRE(p.percent_passing >= points_[i - 1].percent_passing, ErrorCode::Data,
                      "percent passing decreases with diameter");
    }
  }
}

namespace {

double axis(double d, InterpSpace space) { return space == InterpSpace::LogDiameter ? std::log(d) : d; }
double unaxis(double v, InterpSpace space) { return space == InterpSpace::LogDiameter ? std::exp(v) : v; }

}  // namespace

double PsdCurve::percent_passing(double diameter_mm, InterpSpace space) const {
  GROUSER_REQUIRE(std::isfinite(diameter_mm) && diameter_mm >= points_.front().diameter_mm &&
                      diameter_mm <= points_.back().diameter_mm,
                  ErrorCode::Extrapolation, "diameter " + std::to_string(diameter_mm) + " mm outside curve");
  auto hi = std::lower_bound(points_.begin(), points_.end(), diameter_mm,
                             [](const PsdPoint& p, double d) { return p.diameter_mm < d; });
  if (hi->diameter_mm == diameter_mm) return hi->percent_passing;
  auto lo = std::prev(hi);
  const double t = (axis(diameter_mm, space) - axis(lo->diameter_mm, space)) /
                   (axis(hi->diameter_mm, space) - axis(lo->diameter_mm, space));
  return lo->percent_passing + t * (hi->percent_passing - lo->percent_passing);
}

double PsdCurve::percentile_diameter(double percent, InterpSpace space) const {
  GROUSER_REQUIRE(std::isfinite(percent) && percent > 0.0 && percent < 100.0, ErrorCode::Domain,
                  "percentile must lie strictly between 0 and 100");
  GROUSER_REQUIRE(percent >= points_.front().percent_passing && percent <= points_.back().percent_passing,
                  ErrorCode::Extrapolation,
                  "percentile " + std::to_string(percent) + " outside the curve's span");
  auto hi = std::lower_bound(points_.begin(), points_.end(), percent,
                             [](const PsdPoint& p, double v) { return p.percent_passing < v; });
  if (hi->percent_passing == percent) return hi->diameter_mm;
  auto lo = std::prev(hi);
  const double t = (percent - lo->percent_passing) / (hi->percent_passing - lo->percent_passing);
  const double a = axis(lo->diameter_mm, space);
  const double b = axis(hi->diameter_mm, space);
  return unaxis(a + t * (b - a), space);
}

void PsdCurve::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "diameter_mm,percent_passing\n";
  for (const auto& p : points_) out << p.diameter_mm << ',' << p.percent_passing << '\n';
  out.precision(old_precision);
}

PsdCurve build_cumulative_curve(const SieveDataset& data) {
  data.validate();
  auto bins = data.bins;
  std::sort(bins.begin(), bins.end(),
            [](const SieveBin& a, const SieveBin& b) { return a.aperture_mm < b.aperture_mm; });
  for (std::size_t i = 1; i < bins.size(); ++i) {
    GROUSER_REQUIRE(bins[i].aperture_mm != bins[i - 1].aperture_mm, ErrorCode::Data,
                    "duplicate sieve aperture " + std::to_string(bins[i].aperture_mm));
  }

  const double total = data.total_mass();
  std::vector<PsdPoint> points;
  double finer = 0.0;
  for (const auto& b : bins) {
    if (b.aperture_mm > 0.0) {
      const double pct = 100.0 * finer / total;
      GROUSER_REQUIRE(points.empty() || pct >= points.back().percent_passing, ErrorCode::Data,
                      "cumulative curve is not monotone");
      points.push_back({b.aperture_mm, std::min(pct, 100.0)});
    }
    finer += b.mass_retained;
  }
  return PsdCurve(std::move(points));
}

double percentile_diameter(const PsdCurve& curve, double percent, InterpSpace space) {
  return curve.percentile_diameter(percent, space);
}

double volume_fraction(double bulk_density, double particle_density) {
  GROUSER_REQUIRE(std::isfinite(bulk_density) && std::isfinite(particle_density) && bulk_density > 0.0 &&
                      particle_density > 0.0,
                  ErrorCode::Domain, "densities must be positive");
  GROUSER_REQUIRE(bulk_density <= particle_density, ErrorCode::Data,
                  "bulk density exceeds particle density (physically invalid)");
  GROUSER_REQUIRE(bulk_density < particle_density, ErrorCode::Data,
                  "volume fraction of 1 describes a solid, not a granular packing");
  return bulk_density / particle_density;
}

double volume_fraction_from_volumes(double solid_volume, double bulk_volume) {
  GROUSER_REQUIRE(std::isfinite(solid_volume) && std::isfinite(bulk_volume) && solid_volume > 0.0 &&
                      bulk_volume > 0.0,
                  ErrorCode::Domain, "volumes must be positive");
  GROUSER_REQUIRE(solid_volume <= bulk_volume, ErrorCode::Data, "solid volume exceeds bulk volume");
  GROUSER_REQUIRE(solid_volume < bulk_volume, ErrorCode::Data,
                  "volume fraction of 1 describes a solid, not a granular packing");
  return solid_volume / bulk_volume;
}

}  // namespace grouser
