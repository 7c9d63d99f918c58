#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "grouser/controller.hpp"
#include "grouser/error.hpp"
#include "grouser/testbed.hpp"

using namespace grouser;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const PolarTable& table() {
  static const PolarTable t = PolarTable::sample(CamProfile::wheel_slot(JunctionMode::AsPrinted), 4096);
  return t;
}

PidGains p_only(double kp) {
  PidGains g;
  g.kp = kp;
  g.ki = 0.0;
  g.kd = 0.0;
  g.alpha_s = 0.0;
  return g;
}

}  // namespace

TEST_CASE("zero error stays at zero") {
  PidState s;
  const PidGains g;
  for (int k = 0; k < 100; ++k) {
    const auto r = pid_update(s, g, 0.0);
    CHECK(r.command == 0.0);
    CHECK_FALSE(r.saturated);
    s = r.state;
  }
}

TEST_CASE("pure proportional") {
  PidState s;
  for (int k = 0; k < 10; ++k) {
    const auto r = pid_update(s, p_only(1.0), 1.0);
    CHECK(r.command == 1.0);
    s = r.state;
  }
  const auto big = pid_update({}, p_only(1.0), 3.0);
  CHECK(big.command == 1.0);
  CHECK(big.saturated);
}

TEST_CASE("PI integral matches a cumulative trapezoid") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  PidGains g = p_only(0.3);
  g.ki = 1e-3;  // clamp far away
  for (int trial = 0; trial < 20; ++trial) {
    PidState s;
    double prev = 0.0;
    double oracle = 0.0;
    for (int k = 0; k < 500; ++k) {
      const double e = dist(gen);
      oracle += (e + prev) * g.ts_s / 2.0;
      prev = e;
      s = pid_update(s, g, e).state;
      CHECK(s.integral == doctest::Approx(oracle).epsilon(1e-12).scale(1e-12));
    }
  }
}

TEST_CASE("derivative smoothing reduces the step kick") {
  PidGains raw;
  raw.alpha_s = 0.0;
  PidGains smooth;
  smooth.alpha_s = 0.001;
  const auto a = pid_update({}, raw, 1.0);
  const auto b = pid_update({}, smooth, 1.0);
  CHECK(a.derivative == doctest::Approx(1.0 / raw.ts_s));
  CHECK(std::abs(b.derivative) < std::abs(a.derivative));
  CHECK(b.derivative == doctest::Approx(1.0 / (smooth.ts_s + smooth.alpha_s)));
}

TEST_CASE("integral bounded under indefinite saturation") {
  const PidGains g;
  PidState s;
  for (int k = 0; k < 100000; ++k) {
    const auto r = pid_update(s, g, 10.0);
    CHECK(r.saturated);
    s = r.state;
  }
  CHECK(s.integral == doctest::Approx(g.integral_limit()));
  CHECK(g.ki * s.integral <= g.u_max + 1e-12);
  for (int k = 0; k < 100000; ++k) s = pid_update(s, g, -10.0).state;
  CHECK(s.integral == doctest::Approx(-g.integral_limit()));
}

TEST_CASE("controller input guards") {
  CHECK_THROWS_AS(pid_update({}, PidGains{}, std::nan("")), Error);
  try {
    (void)pid_update({}, PidGains{}, INFINITY);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Fault);
  }
  CHECK_THROWS_AS(pid_step({}, PidGains{}, 18.0, 1.0), Error);
  CHECK_THROWS_AS(pid_step({}, PidGains{}, 1.0, -0.5), Error);
  PidGains bad;
  bad.ts_s = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = PidGains{};
  bad.alpha_s = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("encoder chain") {
  const EncoderConfig e;
  CHECK(e.wheel_counts_per_rev() == doctest::Approx(4646.4));
  CHECK(e.cam_rad_per_count() == doctest::Approx(2.0 * std::numbers::pi / 4096.0));
  CHECK(wrap_angle(3.0 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-0.5) == doctest::Approx(-0.5));
}

TEST_CASE("height measurement") {
  const EncoderConfig enc;
  CHECK(measure_height(0, 0, table(), enc).derived_height_mm == 0.0);
  // Same angle after many wheel turns.
  const auto turns = static_cast<std::int64_t>(std::llround(10 * enc.wheel_counts_per_rev()));
  CHECK(std::abs(measure_height(0, turns, table(), enc).derived_height_mm) <= 0.01);

  const double tol = enc.desync_tolerance_rad();
  CHECK(measure_height_from_angles(kFullDeployOffsetRad, 0.0, table(), tol).derived_height_mm ==
        doctest::Approx(17.5).epsilon(1e-9));

  // One 12-bit count short of full deploy. Oracle δ from root-finding on the
  // continuous curve: 0.042831 mm.
  const double one_count = kFullDeployOffsetRad + enc.cam_rad_per_count();
  const double delta = 17.5 - measure_height_from_angles(one_count, 0.0, table(), tol).derived_height_mm;
  CHECK(delta == doctest::Approx(0.042831).epsilon(0.02));

  const auto clamped = measure_height_from_angles(kFullDeployOffsetRad - 0.5 * tol, 0.0, table(), tol);
  CHECK(clamped.clamped);
  CHECK(clamped.derived_height_mm == doctest::Approx(17.5));
}

TEST_CASE("desync and range faults") {
  const EncoderConfig enc;
  const double tol = enc.desync_tolerance_rad();
  try {
    (void)measure_height_from_angles(0.3, 0.0, table(), tol);
    FAIL("expected a fault");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Fault);
  }
  CHECK_THROWS_AS(measure_height_from_angles(-70.0 * kDeg, 0.0, table(), tol), Error);
  try {
    (void)measure_height(4096, 0, table(), enc);
    FAIL("expected a range error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Range);
  }
}

TEST_CASE("trace csv") {
  std::vector<ControllerTraceRow> rows{{0, 1.0, 0.005, 99.0, 1.0, true}, {1, 0.5, 0.0125, -50.0, 0.6, false}};
  std::ostringstream out;
  write_controller_trace(out, rows);
  CHECK(out.str() == "k,e,I,D,u,saturated\n0,1,0.0050000000000000001,99,1,1\n1,0.5,0.012500000000000001,-50,0.59999999999999998,0\n");
}

namespace {

struct Closed {
  std::vector<double> truth;
  std::vector<std::uint8_t> flags;
};

Closed run_closed_loop(double initial, double target, std::vector<std::pair<double, double>> backdrives = {}) {
  SimConfig c;
  c.terrain.name = "flat";
  c.terrain.anchors = {{0.0, 0.2, Provenance::Free, ""}};
  c.initial_height_mm = initial;
  c.commanded_height_mm = target;
  c.stroke_m = 50.0;
  c.trial_timeout_s = 10.0;
  c.stall_window_s = 100.0;
  TrialHooks hooks;
  Closed out;
  hooks.true_heights = &out.truth;
  hooks.backdrives = std::move(backdrives);
  const auto rec = run_trial(c, make_polar_table(c), hooks);
  for (const auto& f : rec.frames) out.flags.push_back(f.flags);
  return out;
}

double max_error(const std::vector<double>& h, double target, double from_s, double to_s) {
  double worst = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double t = static_cast<double>(k) * 0.01;
    if (t >= from_s && t <= to_s) worst = std::max(worst, std::abs(h[k] - target));
  }
  return worst;
}

}  // namespace

TEST_CASE("closed loop step settles within 0.1 mm and holds") {
  for (double target : {17.5, 14.0, 7.0, 3.5}) {
    CAPTURE(target);
    const auto run = run_closed_loop(0.0, target);
    CHECK(max_error(run.truth, target, 3.0, 10.0) <= 0.1);
  }
  const auto down = run_closed_loop(17.5, 3.5);
  CHECK(max_error(down.truth, 3.5, 3.0, 10.0) <= 0.1);
}

TEST_CASE("backdrive is corrected") {
  for (double target : {17.5, 10.5}) {
    const auto run = run_closed_loop(target, target, {{4.0, 5.0 * kDeg}});
    CHECK(max_error(run.truth, target, 0.0, 3.99) <= 0.1);
    CHECK(max_error(run.truth, target, 4.0, 4.05) > 0.5);   // the disturbance is visible
    CHECK(max_error(run.truth, target, 6.0, 10.0) <= 0.1);  // and removed
    CHECK((run.flags[400] & kFlagBackdrive) != 0);
  }
}

TEST_CASE("zero backdrive changes nothing, opposite ones cancel") {
  const auto base = run_closed_loop(7.0, 7.0);
  const auto zero = run_closed_loop(7.0, 7.0, {{4.0, 0.0}});
  CHECK(base.truth == zero.truth);
  const auto pair = run_closed_loop(7.0, 7.0, {{3.0, 5.0 * kDeg}, {3.0, -5.0 * kDeg}});
  CHECK(std::abs(pair.truth.back() - base.truth.back()) <= 0.02);
  const auto apart = run_closed_loop(7.0, 7.0, {{3.0, 5.0 * kDeg}, {5.0, -5.0 * kDeg}});
  CHECK(std::abs(apart.truth.back() - 7.0) <= 0.1);
}
