#include <doctest.h>

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "grouser/config.hpp"
#include "grouser/estimators.hpp"
#include "support.hpp"

using namespace grouser;

namespace {

std::vector<double> sample(double ts, std::size_t intervals, auto f) {
  std::vector<double> out;
  for (std::size_t k = 0; k <= intervals; ++k) out.push_back(f(static_cast<double>(k) * ts));
  return out;
}

}  // namespace

TEST_CASE("slip ratio") {
  CHECK(slip_ratio(0.25, 0.0625, 8.0).value == doctest::Approx(0.5));
  CHECK_FALSE(slip_ratio(0.25, 0.0625, 8.0).negative);
  const auto over = slip_ratio(0.6, 0.0625, 8.0);
  CHECK(over.value == doctest::Approx(-0.2));
  CHECK(over.negative);
  CHECK(slip_ratio(0.0, 0.0625, 8.0).value == 1.0);
  CHECK(testing::error_code([] { slip_ratio(0.1, 0.0625, 0.0); }) == ErrorCode::Domain);
  CHECK(testing::error_code([] { slip_ratio(0.1, 0.0, 8.0); }) == ErrorCode::Domain);
}

TEST_CASE("constant current over one second is 12 J") {
  EnergyAccumulator acc(0.01);
  for (int k = 0; k <= 100; ++k) acc.add(1.0);
  const auto e = energy_simpson(acc);
  CHECK(e.joules == doctest::Approx(12.0).epsilon(1e-14));
  CHECK(e.intervals == 100);
  CHECK_FALSE(e.composite);
}

TEST_CASE("Simpson is exact for polynomials up to cubic") {
  const auto sq = sample(0.01, 100, [](double t) { return t * t; });
  CHECK(energy_simpson(sq, 0.01).joules == doctest::Approx(4.0).epsilon(1e-13));
  const auto cube = sample(0.05, 20, [](double t) { return 2.0 * t * t * t - t + 0.5; });
  // 12 × ∫₀¹ (2t³ − t + 0.5) dt = 12 × 0.5
  CHECK(energy_simpson(cube, 0.05).joules == doctest::Approx(6.0).epsilon(1e-13));
  // Three samples, a single panel.
  CHECK(energy_simpson(std::vector<double>{0.0, 1.0, 4.0}, 1.0, 1.0).joules == doctest::Approx(8.0 / 3.0));
}

TEST_CASE("smooth random integrands agree with adaptive quadrature") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> amp(0.1, 1.0), freq(0.5, 6.0), phase(0.0, 6.28);
  for (int trial = 0; trial < 20; ++trial) {
    const double a0 = amp(gen), a1 = amp(gen), a2 = amp(gen);
    const double f1 = freq(gen), f2 = freq(gen), p1 = phase(gen), p2 = phase(gen);
    auto f = [=](double t) { return 1.0 + a0 * t + a1 * std::sin(f1 * t + p1) + a2 * std::cos(f2 * t * t + p2); };
    const double ts = 0.001;
    const std::size_t n = 2000;
    const double reference =
        12.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, ts * static_cast<double>(n), 15, 1e-14);
    const double simpson = energy_simpson(sample(ts, n, f), ts).joules;
    CAPTURE(trial);
    CHECK(std::abs(simpson - reference) <= 1e-6 * std::abs(reference));
  }
}

TEST_CASE("odd interval counts close with a trapezoid and are flagged") {
  const auto lin = sample(0.1, 5, [](double t) { return 3.0 * t + 1.0; });
  const auto e = energy_simpson(lin, 0.1);
  CHECK(e.composite);
  CHECK(e.intervals == 5);
  CHECK(e.joules == doctest::Approx(12.0 * (1.5 * 0.25 + 0.5)).epsilon(1e-13));
  CHECK(energy_trapezoid(lin, 0.1) == doctest::Approx(e.joules).epsilon(1e-13));
}

TEST_CASE("too few samples") {
  EnergyAccumulator acc(0.01);
  acc.add(1.0);
  acc.add(1.0);
  CHECK(testing::error_code([&] { energy_simpson(acc); }) == ErrorCode::Data);
  CHECK(testing::error_code([] { EnergyAccumulator bad(0.0); }) == ErrorCode::Domain);
  CHECK(testing::error_code([&] { acc.add(std::nan("")); }) == ErrorCode::Data);
}

TEST_CASE("travel time is interpolated at the stroke") {
  TrialRecord r;
  r.outcome = TrialOutcome::Completed;
  for (int k = 0; k <= 90; ++k) {
    SensorFrame f;
    f.t_us = static_cast<std::uint64_t>(k) * 10'000;
    f.linear_counts = static_cast<std::int64_t>(k) * 1000;
    r.frames.push_back(f);
  }
  REQUIRE(stroke_frame(r) == 87u);
  CHECK(*travel_time(r) == doctest::Approx(0.865).epsilon(1e-12));
  r.outcome = TrialOutcome::Immobilized;
  CHECK_FALSE(travel_time(r).has_value());
}

TEST_CASE("summary statistics") {
  const auto s = summarize({0.3, 0.5});
  REQUIRE(s);
  CHECK(s->mean == doctest::Approx(0.4));
  CHECK(*s->std == doctest::Approx(std::sqrt(0.02)));
  CHECK_FALSE(summarize({0.7})->std.has_value());
  CHECK_FALSE(summarize({}).has_value());

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(257);
  for (auto& x : v) x = u(gen) * std::pow(10.0, 8.0 * u(gen) - 4.0);
  const auto ref = summarize(v);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(v.begin(), v.end(), gen);
    const auto s2 = summarize(v);
    CHECK(s2->mean == ref->mean);
    CHECK(*s2->std == *ref->std);
  }
}

TEST_CASE("aggregate skips incomplete trials") {
  TrialRecord a, b, c;
  a.outcome = b.outcome = TrialOutcome::Completed;
  c.outcome = TrialOutcome::Immobilized;
  a.metrics = TrialMetrics{0.3, 10.0, false, 5.0};
  b.metrics = TrialMetrics{0.5, 14.0, false, 7.0};
  c.metrics = TrialMetrics{1.0, 2.0, false, std::nullopt};
  const std::vector<TrialRecord> v{a, b, c};
  const auto g = aggregate(v);
  CHECK(g.trials == 3);
  CHECK(g.completed == 2);
  CHECK(g.completion_rate() == doctest::Approx(2.0 / 3.0));
  CHECK(g.slip->mean == doctest::Approx(0.4));
  CHECK(*g.slip->std == doctest::Approx(0.1414213562));
  CHECK(g.energy_J->mean == doctest::Approx(12.0));

  const std::vector<TrialRecord> none{c};
  const auto empty = aggregate(none);
  CHECK(empty.empty());
  CHECK_FALSE(empty.slip.has_value());
  std::ostringstream csv;
  write_aggregate_row(csv, {"rock", "", 0.0, empty});
  CHECK(csv.str() == "rock,,0,,,,,0\n");
}

TEST_CASE("estimated slip matches the plant") {
  const auto cal = load_terrain_calibration(testing::config_path("terrain_calibration.json"));
  for (const char* name : {"vinyl", "rock", "gravel", "loose_sand", "dense_sand"}) {
    CAPTURE(name);
    SimConfig c;
    c.terrain = find_terrain(cal, name);
    c.initial_height_mm = c.commanded_height_mm = 10.5;
    c.seed = 3;
    auto rec = run_trial(c);
    REQUIRE(rec.completed());
    process_trial(rec);
    CHECK(std::abs(rec.metrics->slip_est - rec.true_slip_mean) <= 0.001);
    CHECK(*rec.metrics->energy_J > 0.0);
  }
}

TEST_CASE("slip estimate does not depend on wheel size or speed") {
  TerrainModel t;
  t.name = "constant";
  t.anchors = {{0.0, 0.3, Provenance::Free, ""}};
  for (double radius : {0.05, 0.0625, 0.1}) {
    for (double speed : {0.25, 0.5}) {
      CAPTURE(radius);
      CAPTURE(speed);
      SimConfig c;
      c.terrain = t;
      c.wheel.radius_m = radius;
      c.surface_speed_mps = speed;
      auto rec = run_trial(c);
      REQUIRE(rec.completed());
      CHECK(compute_metrics(rec).slip_est == doctest::Approx(0.3).epsilon(0.002));
    }
  }
}

TEST_CASE("slip series") {
  TerrainModel t;
  t.name = "constant";
  t.anchors = {{0.0, 0.2, Provenance::Free, ""}};
  SimConfig c;
  c.terrain = t;
  c.stroke_m = 0.1;
  const auto rec = run_trial(c);
  const auto s = slip_series(rec.frames, c);
  REQUIRE(s.size() == rec.frames.size() - 2);
  for (double v : s) CHECK(v == doctest::Approx(0.2).epsilon(0.03));
}
