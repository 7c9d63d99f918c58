#include "grouser/scaling_law.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "grouser/cam_kinematics.hpp"
#include "grouser/error.hpp"

namespace grouser {

std::string_view to_string(FitFamily f) noexcept {
  switch (f) {
    case FitFamily::Power: return "power";
    case FitFamily::Log: return "log";
    case FitFamily::Exp: return "exp";
  }
  return "power";
}

std::string_view to_string(FitSpace s) noexcept {
  return s == FitSpace::Linearized ? "linearized" : "original";
}

FitFamily fit_family_from_string(std::string_view s) {
  if (s == "power") return FitFamily::Power;
  if (s == "log") return FitFamily::Log;
  if (s == "exp") return FitFamily::Exp;
  throw Error(ErrorCode::Config, "unknown fit family '" + std::string(s) + "'");
}

double ScalingFit::eval(double d_mm) const {
  switch (family) {
    case FitFamily::Power: return a * std::pow(d_mm, b);
    case FitFamily::Log: return a + b * std::log(d_mm);
    case FitFamily::Exp: return a * std::exp(b * d_mm);
  }
  return 0.0;
}

std::string ScalingFit::fit_space_descriptor() const {
  if (space == FitSpace::Original || family == FitFamily::Log) {
    switch (family) {
      case FitFamily::Power: return "nonlinear least squares on h = a*D^b";
      case FitFamily::Log: return "OLS on h vs ln D";
      case FitFamily::Exp: return "nonlinear least squares on h = a*exp(b*D)";
    }
  }
  return family == FitFamily::Power ? "OLS on ln h vs ln D" : "OLS on ln h vs D";
}

namespace {

struct Line {
  double intercept;
  double slope;
  double r_squared;
};

Line ordinary_least_squares(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  GROUSER_REQUIRE(sxx > 1e-300, ErrorCode::Fit, "regression abscissae are degenerate (zero spread)");
  const double slope = sxy / sxx;
  const double r2 = syy > 0.0 ? (slope * sxy) / syy : 1.0;
  return {my - slope * mx, slope, r2};
}

double r_squared(std::span<const double> y, std::span<const double> predicted) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - predicted[i]) * (y[i] - predicted[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
}

// Levenberg–Marquardt on a two-parameter model h(D; a, b).
template <class Model, class Jacobian>
std::array<double, 2> levenberg_marquardt(std::span<const double> d, std::span<const double> h,
                                          std::array<double, 2> p, Model model, Jacobian jac) {
  const auto cost = [&](const std::array<double, 2>& q) {
    double c = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double r = model(d[i], q) - h[i];
      c += r * r;
    }
    return c;
  };
  double lambda = 1e-3;
  double current = cost(p);
  for (int iter = 0; iter < 500; ++iter) {
    double jtj[2][2] = {{0, 0}, {0, 0}};
    double jtr[2] = {0, 0};
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto g = jac(d[i], p);
      const double r = model(d[i], p) - h[i];
      for (int u = 0; u < 2; ++u) {
        jtr[u] += g[u] * r;
        for (int v = 0; v < 2; ++v) jtj[u][v] += g[u] * g[v];
      }
    }
    bool improved = false;
    for (int attempt = 0; attempt < 40 && !improved; ++attempt) {
      const double m00 = jtj[0][0] * (1.0 + lambda);
      const double m11 = jtj[1][1] * (1.0 + lambda);
      const double det = m00 * m11 - jtj[0][1] * jtj[1][0];
      if (det == 0.0 || !std::isfinite(det)) {
        lambda *= 10.0;
        continue;
      }
      const std::array<double, 2> step{-(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det,
                                       -(m00 * jtr[1] - jtj[1][0] * jtr[0]) / det};
      const std::array<double, 2> trial{p[0] + step[0], p[1] + step[1]};
      const double c = cost(trial);
      if (std::isfinite(c) && c < current) {
        const bool converged = current - c <= 1e-15 * (1.0 + current) &&
                               std::abs(step[0]) <= 1e-13 * (1.0 + std::abs(p[0])) &&
                               std::abs(step[1]) <= 1e-13 * (1.0 + std::abs(p[1]));
        p = trial;
        current = c;
        lambda = std::max(lambda * 0.1, 1e-15);
        improved = true;
        if (converged) return p;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return p;
}

}  // namespace

ScalingFit fit_family(std::span<const OptimumPoint> points, FitFamily family, FitSpace space) {
  GROUSER_REQUIRE(points.size() >= 3, ErrorCode::Fit, "scaling fit needs at least three points");
  std::vector<double> d, h, ln_d, ln_h;
  for (const auto& p : points) {
    GROUSER_REQUIRE(std::isfinite(p.d50_mm) && p.d50_mm > 0.0, ErrorCode::Fit,
                    "characteristic diameter must be positive");
    GROUSER_REQUIRE(std::isfinite(p.h_star_mm), ErrorCode::Fit, "optimal height must be finite");
    if (family != FitFamily::Log) {
      GROUSER_REQUIRE(p.h_star_mm > 0.0, ErrorCode::Fit, "power/exp fits need positive heights");
      ln_h.push_back(std::log(p.h_star_mm));
    }
    d.push_back(p.d50_mm);
    h.push_back(p.h_star_mm);
    ln_d.push_back(std::log(p.d50_mm));
  }

  ScalingFit fit;
  fit.family = family;
  fit.space = family == FitFamily::Log ? FitSpace::Linearized : space;
  fit.point_count = points.size();

  switch (family) {
    case FitFamily::Power: {
      const auto line = ordinary_least_squares(ln_d, ln_h);
      fit.a = std::exp(line.intercept);
      fit.b = line.slope;
      fit.r_squared_fit = line.r_squared;
      if (space == FitSpace::Original) {
        const auto p = levenberg_marquardt(
            d, h, {fit.a, fit.b}, [](double x, const std::array<double, 2>& q) { return q[0] * std::pow(x, q[1]); },
            [](double x, const std::array<double, 2>& q) {
              const double xb = std::pow(x, q[1]);
              return std::array<double, 2>{xb, q[0] * xb * std::log(x)};
            });
        fit.a = p[0];
        fit.b = p[1];
      }
      break;
    }
    case FitFamily::Log: {
      const auto line = ordinary_least_squares(ln_d, h);
      fit.a = line.intercept;
      fit.b = line.slope;
      fit.r_squared_fit = line.r_squared;
      break;
    }
    case FitFamily::Exp: {
      const auto line = ordinary_least_squares(d, ln_h);
      fit.a = std::exp(line.intercept);
      fit.b = line.slope;
      fit.r_squared_fit = line.r_squared;
      if (space == FitSpace::Original) {
        const auto p = levenberg_marquardt(
            d, h, {fit.a, fit.b}, [](double x, const std::array<double, 2>& q) { return q[0] * std::exp(q[1] * x); },
            [](double x, const std::array<double, 2>& q) {
              const double e = std::exp(q[1] * x);
              return std::array<double, 2>{e, q[0] * x * e};
            });
        fit.a = p[0];
        fit.b = p[1];
      }
      break;
    }
  }

  std::vector<double> predicted;
  predicted.reserve(d.size());
  for (double x : d) predicted.push_back(fit.eval(x));
  fit.r_squared_original = r_squared(h, predicted);
  if (fit.space == FitSpace::Original) fit.r_squared_fit = fit.r_squared_original;
  GROUSER_REQUIRE(std::isfinite(fit.a) && std::isfinite(fit.b), ErrorCode::Fit, "fit did not converge");
  return fit;
}

std::vector<ScalingFit> fit_all_families(std::span<const OptimumPoint> points, FitSpace space) {
  return {fit_family(points, FitFamily::Power, space), fit_family(points, FitFamily::Log, space),
          fit_family(points, FitFamily::Exp, space)};
}

const ScalingFit& select_best(std::span<const ScalingFit> fits) {
  GROUSER_REQUIRE(!fits.empty(), ErrorCode::Fit, "no fits to select from");
  return *std::max_element(fits.begin(), fits.end(), [](const ScalingFit& x, const ScalingFit& y) {
    return x.r_squared_original < y.r_squared_original;
  });
}

HeightPrediction predict_height(const ScalingFit& fit, double d50_mm) {
  GROUSER_REQUIRE(std::isfinite(d50_mm) && d50_mm > 0.0, ErrorCode::Domain,
                  "characteristic diameter must be positive");
  HeightPrediction p;
  p.raw_mm = fit.eval(d50_mm);
  p.h_mm = std::clamp(p.raw_mm, 0.0, kFullDeployHeightMm);
  p.clamped = p.h_mm != p.raw_mm;
  return p;
}

double percent_change(double previous, double measured) {
  GROUSER_REQUIRE(previous != 0.0 && std::isfinite(previous) && std::isfinite(measured), ErrorCode::Domain,
                  "percent change needs a finite, non-zero baseline");
  return 100.0 * (previous - measured) / previous;
}

ValidationReport validate_table(const ScalingFit& fit, std::span<const ValidationMeasurement> measurements,
                                std::span<const std::string> expected) {
  ValidationReport report;
  for (const auto& m : measurements) {
    ValidationRow row;
    row.measurement = m;
    if (m.d50_mm) row.model_height = predict_height(fit, *m.d50_mm);
    row.percent_change = percent_change(m.previous_slip, m.measured_slip);
    report.rows.push_back(std::move(row));
  }
  for (const auto& name : expected) {
    const bool present = std::any_of(measurements.begin(), measurements.end(),
                                     [&](const ValidationMeasurement& m) { return m.terrain == name; });
    if (!present) report.missing_terrains.push_back(name);
  }
  return report;
}

namespace {

std::string opt(const std::optional<double>& v, int precision) {
  if (!v) return "--";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << *v;
  return s.str();
}

}  // namespace

void ValidationReport::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(10);
  out << "terrain,phi,previous_height_mm,predicted_height_mm,model_height_mm,previous_slip,previous_slip_std,"
         "measured_slip,measured_slip_std,percent_change\n";
  for (const auto& r : rows) {
    const auto& m = r.measurement;
    out << m.terrain << ',' << (m.volume_fraction ? std::to_string(*m.volume_fraction) : std::string{}) << ','
        << m.previous_height_mm << ',' << m.reported_predicted_height_mm << ','
        << (r.model_height ? std::to_string(r.model_height->h_mm) : std::string{}) << ',' << m.previous_slip << ','
        << m.previous_slip_std << ',' << m.measured_slip << ',' << m.measured_slip_std << ',' << r.percent_change
        << '\n';
  }
  for (const auto& t : missing_terrains) out << "# missing terrain: " << t << '\n';
  out.precision(old_precision);
}

void ValidationReport::write_table(std::ostream& out) const {
  out << std::left << std::setw(14) << "Terrain" << std::setw(7) << "phi" << std::setw(11) << "Prev h"
      << std::setw(11) << "Pred h" << std::setw(11) << "Model h" << std::setw(20) << "Previous slip"
      << std::setw(20) << "Measured slip" << "Change\n";
  for (const auto& r : rows) {
    const auto& m = r.measurement;
    std::ostringstream prev, meas, change;
    prev << std::fixed << std::setprecision(4) << m.previous_slip << " +/- " << m.previous_slip_std;
    meas << std::fixed << std::setprecision(4) << m.measured_slip << " +/- " << m.measured_slip_std;
    change << std::fixed << std::setprecision(2) << r.percent_change << " %";
    out << std::left << std::setw(14) << m.terrain << std::setw(7) << opt(m.volume_fraction, 3) << std::setw(11)
        << opt(m.previous_height_mm, 2) << std::setw(11) << opt(m.reported_predicted_height_mm, 2) << std::setw(11)
        << (r.model_height ? opt(r.model_height->h_mm, 2) : std::string("--")) << std::setw(20) << prev.str()
        << std::setw(20) << meas.str() << change.str() << '\n';
  }
  if (partial()) {
    out << "PARTIAL REPORT, missing:";
    for (const auto& t : missing_terrains) out << ' ' << t;
    out << '\n';
  }
}

void write_fits_csv(std::ostream& out, std::span<const ScalingFit> fits) {
  const auto old_precision = out.precision(12);
  out << "family,fit_space,a,b,r_squared_fit,r_squared_original,points\n";
  for (const auto& f : fits) {
    out << to_string(f.family) << ',' << to_string(f.space) << ',' << f.a << ',' << f.b << ',' << f.r_squared_fit
        << ',' << f.r_squared_original << ',' << f.point_count << '\n';
  }
  out.precision(old_precision);
}

}  // namespace grouser
