#include "grouser/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "grouser/error.hpp"

namespace grouser {

namespace {

// Strict object reader: records which keys were consumed and rejects the rest.
class Reader {
 public:
  Reader(const Json& j, std::string_view path) : j_(j), path_(path) {
    GROUSER_REQUIRE(j.is_object(), ErrorCode::Config, path_ + ": expected an object");
  }

  template <class T>
  bool get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return false;
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Config, path_ + "." + key + ": " + e.what());
    }
    return true;
  }

  template <class T>
  void require(const char* key, T& out) {
    GROUSER_REQUIRE(get(key, out), ErrorCode::Config, path_ + "." + key + ": required");
  }

  template <class T>
  bool get(const char* key, std::optional<T>& out) {
    T v{};
    if (!get(key, v)) {
      out.reset();
      return false;
    }
    out = v;
    return true;
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string sub(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      GROUSER_REQUIRE(seen_.count(k) != 0, ErrorCode::Config, path_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto wrap_config(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    throw Error(ErrorCode::Config, what + ": " + e.what());
  }
}

Json to_json(const SlipAnchor& a) {
  Json j{{"height_mm", a.height_mm}, {"slip_mean", a.slip_mean}, {"provenance", to_string(a.provenance)}};
  if (!a.note.empty()) j["note"] = a.note;
  return j;
}

Json to_json(const CurrentParams& c) {
  return {{"baseline_a", c.baseline_a},
          {"slip_gain_a", c.slip_gain_a},
          {"spike_rate_hz", c.spike_rate_hz},
          {"spike_amp_a", c.spike_amp_a},
          {"spike_duration_s", c.spike_duration_s}};
}

Json to_json(const PackingState& p) {
  return {{"label", p.label},
          {"bulk_density", p.bulk_density},
          {"particle_density", p.particle_density},
          {"volume_fraction", p.volume_fraction}};
}

}  // namespace

Json to_json(const WheelGeometry& v) {
  return {{"radius_m", v.radius_m},
          {"width_mm", v.width_mm},
          {"grouser_count", v.grouser_count},
          {"grouser_height_max_mm", v.grouser_height_max_mm},
          {"main_grouser_width_mm", v.main_grouser_width_mm},
          {"top_grouser_width_mm", v.top_grouser_width_mm},
          {"chamfer_rad", v.chamfer_rad}};
}

Json to_json(const EncoderConfig& v) {
  return {{"cam_counts_per_rev", v.cam_counts_per_rev},
          {"motor_cpr", v.motor_cpr},
          {"gearbox_ratio", v.gearbox_ratio},
          {"drive_reduction", v.drive_reduction}};
}

Json to_json(const PidGains& v) {
  return {{"kp", v.kp},       {"ki", v.ki},       {"kd", v.kd},      {"alpha_s", v.alpha_s},
          {"ts_s", v.ts_s},   {"u_min", v.u_min}, {"u_max", v.u_max}};
}

Json to_json(const ServoLimits& v) { return {{"max_rate_rad_s", v.max_rate_rad_s}, {"slew_per_s", v.slew_per_s}}; }

Json to_json(const TerrainModel& v) {
  Json anchors = Json::array();
  for (const auto& a : v.anchors) anchors.push_back(to_json(a));
  Json j{{"name", v.name},
         {"anchors", anchors},
         {"slip_sigma", v.slip_sigma},
         {"sigma_provenance", to_string(v.sigma_provenance)},
         {"slip_ceiling", v.slip_ceiling},
         {"current", to_json(v.current)}};
  j["immobilize_below_mm"] = v.immobilize_below_mm ? Json(*v.immobilize_below_mm) : Json();
  j["packing"] = v.packing ? to_json(*v.packing) : Json();
  j["d50_mm"] = v.d50_mm ? Json(*v.d50_mm) : Json();
  return j;
}

Json to_json(const SimConfig& v) {
  return {{"wheel", to_json(v.wheel)},
          {"encoders", to_json(v.encoders)},
          {"gains", to_json(v.gains)},
          {"servo", to_json(v.servo)},
          {"terrain", to_json(v.terrain)},
          {"stroke_m", v.stroke_m},
          {"surface_speed_mps", v.surface_speed_mps},
          {"dt_us", v.dt_us},
          {"seed", v.seed},
          {"initial_height_mm", v.initial_height_mm},
          {"commanded_height_mm", v.commanded_height_mm},
          {"trial_timeout_s", v.trial_timeout_s},
          {"stall_window_s", v.stall_window_s},
          {"bus_voltage_v", v.bus_voltage_v},
          {"linear_resolution_nm", v.linear_resolution_nm},
          {"per_step_slip_noise", v.per_step_slip_noise},
          {"cam_mode", to_string(v.cam_mode)},
          {"polar_samples", v.polar_samples}};
}

Json to_json(const ScalingFit& v) {
  return {{"family", to_string(v.family)},
          {"space", to_string(v.space)},
          {"a", v.a},
          {"b", v.b},
          {"r_squared_fit", v.r_squared_fit},
          {"r_squared_original", v.r_squared_original},
          {"point_count", v.point_count}};
}

void from_json(const Json& j, WheelGeometry& v, std::string_view path) {
  Reader r(j, path);
  r.get("radius_m", v.radius_m);
  r.get("width_mm", v.width_mm);
  r.get("grouser_count", v.grouser_count);
  r.get("grouser_height_max_mm", v.grouser_height_max_mm);
  r.get("main_grouser_width_mm", v.main_grouser_width_mm);
  r.get("top_grouser_width_mm", v.top_grouser_width_mm);
  r.get("chamfer_rad", v.chamfer_rad);
  r.finish();
}

void from_json(const Json& j, EncoderConfig& v, std::string_view path) {
  Reader r(j, path);
  r.get("cam_counts_per_rev", v.cam_counts_per_rev);
  r.get("motor_cpr", v.motor_cpr);
  r.get("gearbox_ratio", v.gearbox_ratio);
  r.get("drive_reduction", v.drive_reduction);
  r.finish();
}

void from_json(const Json& j, PidGains& v, std::string_view path) {
  Reader r(j, path);
  r.get("kp", v.kp);
  r.get("ki", v.ki);
  r.get("kd", v.kd);
  r.get("alpha_s", v.alpha_s);
  r.get("ts_s", v.ts_s);
  r.get("u_min", v.u_min);
  r.get("u_max", v.u_max);
  r.finish();
}

void from_json(const Json& j, ServoLimits& v, std::string_view path) {
  Reader r(j, path);
  r.get("max_rate_rad_s", v.max_rate_rad_s);
  r.get("slew_per_s", v.slew_per_s);
  r.finish();
}

void from_json(const Json& j, TerrainModel& v, std::string_view path) {
  Reader r(j, path);
  r.require("name", v.name);
  const std::string here = std::string(path) + "[" + v.name + "]";

  const Json* anchors = r.child("anchors");
  GROUSER_REQUIRE(anchors && anchors->is_array(), ErrorCode::Config, here + ".anchors: required array");
  v.anchors.clear();
  for (std::size_t i = 0; i < anchors->size(); ++i) {
    Reader a((*anchors)[i], here + ".anchors[" + std::to_string(i) + "]");
    SlipAnchor anchor;
    std::string prov = "free";
    a.require("height_mm", anchor.height_mm);
    a.require("slip_mean", anchor.slip_mean);
    a.get("provenance", prov);
    a.get("note", anchor.note);
    a.finish();
    anchor.provenance = wrap_config(here, [&] { return provenance_from_string(prov); });
    v.anchors.push_back(std::move(anchor));
  }

  r.require("slip_sigma", v.slip_sigma);
  std::string sigma_prov = "measured";
  r.get("sigma_provenance", sigma_prov);
  v.sigma_provenance = wrap_config(here, [&] { return provenance_from_string(sigma_prov); });
  r.get("immobilize_below_mm", v.immobilize_below_mm);
  r.get("slip_ceiling", v.slip_ceiling);
  r.get("d50_mm", v.d50_mm);

  if (const Json* c = r.child("current")) {
    Reader cr(*c, here + ".current");
    cr.get("baseline_a", v.current.baseline_a);
    cr.get("slip_gain_a", v.current.slip_gain_a);
    cr.get("spike_rate_hz", v.current.spike_rate_hz);
    cr.get("spike_amp_a", v.current.spike_amp_a);
    cr.get("spike_duration_s", v.current.spike_duration_s);
    cr.finish();
  }

  v.packing.reset();
  if (const Json* p = r.child("packing")) {
    Reader pr(*p, here + ".packing");
    std::string label;
    double bulk = 0.0;
    double particle = 2650.0;
    std::optional<double> phi;
    pr.require("label", label);
    pr.require("bulk_density", bulk);
    pr.get("particle_density", particle);
    pr.get("volume_fraction", phi);
    pr.finish();
    PackingState ps = wrap_config(here, [&] { return PackingState::from_densities(label, bulk, particle); });
    if (phi) ps.volume_fraction = *phi;
    v.packing = ps;
  }
  r.finish();
  wrap_config(here, [&] {
    v.validate();
    return 0;
  });
}

void from_json(const Json& j, ScalingFit& v, std::string_view path) {
  Reader r(j, path);
  std::string family = "power";
  std::string space = "linearized";
  r.get("family", family);
  r.get("space", space);
  r.require("a", v.a);
  r.require("b", v.b);
  r.get("r_squared_fit", v.r_squared_fit);
  r.get("r_squared_original", v.r_squared_original);
  r.get("point_count", v.point_count);
  r.finish();
  v.family = wrap_config(std::string(path), [&] { return fit_family_from_string(family); });
  if (space == "linearized") {
    v.space = FitSpace::Linearized;
  } else if (space == "original") {
    v.space = FitSpace::Original;
  } else {
    throw Error(ErrorCode::Config, std::string(path) + ".space: unknown fit space '" + space + "'");
  }
}

std::string_view to_string(JunctionMode m) noexcept {
  return m == JunctionMode::AsPrinted ? "as_printed" : "continuity";
}

JunctionMode junction_mode_from_string(std::string_view s) {
  if (s == "as_printed") return JunctionMode::AsPrinted;
  if (s == "continuity") return JunctionMode::ContinuityEnforced;
  throw Error(ErrorCode::Config, "unknown cam mode '" + std::string(s) + "'");
}

SimConfig sim_config_from_json(const Json& j, const std::vector<TerrainModel>& terrains) {
  SimConfig v;
  Reader r(j, "sim");
  if (const Json* w = r.child("wheel")) from_json(*w, v.wheel, "sim.wheel");
  if (const Json* e = r.child("encoders")) from_json(*e, v.encoders, "sim.encoders");
  if (const Json* g = r.child("gains")) from_json(*g, v.gains, "sim.gains");
  if (const Json* s = r.child("servo")) from_json(*s, v.servo, "sim.servo");
  const Json* t = r.child("terrain");
  GROUSER_REQUIRE(t != nullptr, ErrorCode::Config, "sim.terrain: required");
  if (t->is_string()) {
    v.terrain = find_terrain(terrains, t->get<std::string>());
  } else {
    from_json(*t, v.terrain, "sim.terrain");
  }
  r.get("stroke_m", v.stroke_m);
  r.get("surface_speed_mps", v.surface_speed_mps);
  r.get("dt_us", v.dt_us);
  r.get("seed", v.seed);
  r.get("initial_height_mm", v.initial_height_mm);
  r.get("commanded_height_mm", v.commanded_height_mm);
  r.get("trial_timeout_s", v.trial_timeout_s);
  r.get("stall_window_s", v.stall_window_s);
  r.get("bus_voltage_v", v.bus_voltage_v);
  r.get("linear_resolution_nm", v.linear_resolution_nm);
  r.get("per_step_slip_noise", v.per_step_slip_noise);
  std::string mode = std::string(to_string(v.cam_mode));
  r.get("cam_mode", mode);
  v.cam_mode = junction_mode_from_string(mode);
  r.get("polar_samples", v.polar_samples);
  r.finish();
  v.validate();
  return v;
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  GROUSER_REQUIRE(in.good(), ErrorCode::Io, "cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Config, path.string() + ": " + e.what());
  }
}

void save_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  GROUSER_REQUIRE(out.good(), ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  GROUSER_REQUIRE(out.good(), ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::vector<TerrainModel> terrain_calibration_from_json(const Json& j) {
  Reader r(j, "calibration");
  int schema = 0;
  r.require("schema", schema);
  GROUSER_REQUIRE(schema == 1, ErrorCode::Config, "calibration: unsupported schema " + std::to_string(schema));
  std::string description;
  r.get("description", description);
  const Json* list = r.child("terrains");
  GROUSER_REQUIRE(list && list->is_array() && !list->empty(), ErrorCode::Config,
                  "calibration.terrains: required non-empty array");
  r.finish();
  std::vector<TerrainModel> out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    TerrainModel m;
    from_json((*list)[i], m, "calibration.terrains[" + std::to_string(i) + "]");
    GROUSER_REQUIRE(std::none_of(out.begin(), out.end(), [&](const TerrainModel& o) { return o.name == m.name; }),
                    ErrorCode::Config, "calibration: duplicate terrain '" + m.name + "'");
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<TerrainModel> load_terrain_calibration(const std::filesystem::path& path) {
  try {
    return terrain_calibration_from_json(load_json_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw Error(ErrorCode::Config, std::string("terrain calibration: ") + e.what());
    throw;
  }
}

const TerrainModel& find_terrain(const std::vector<TerrainModel>& terrains, std::string_view name) {
  const auto it = std::find_if(terrains.begin(), terrains.end(), [&](const TerrainModel& m) { return m.name == name; });
  GROUSER_REQUIRE(it != terrains.end(), ErrorCode::Config, "no calibration for terrain '" + std::string(name) + "'");
  return *it;
}

PidGains load_controller_gains(const std::filesystem::path& path, ServoLimits* servo) {
  Json j;
  try {
    j = load_json_file(path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw Error(ErrorCode::Config, std::string("controller: ") + e.what());
    throw;
  }
  PidGains g;
  if (j.contains("gains")) {
    Reader r(j, "controller");
    if (const Json* gj = r.child("gains")) from_json(*gj, g, "controller.gains");
    ServoLimits s;
    if (const Json* sj = r.child("servo")) from_json(*sj, s, "controller.servo");
    std::string description;
    r.get("description", description);
    r.finish();
    if (servo) *servo = s;
  } else {
    from_json(j, g, "gains");
  }
  wrap_config("controller", [&] {
    g.validate();
    return 0;
  });
  return g;
}

std::vector<OptimumPoint> optimum_points_from_json(const Json& j) {
  const Json& list = j.is_object() && j.contains("points") ? j.at("points") : j;
  GROUSER_REQUIRE(list.is_array(), ErrorCode::Config, "points: expected an array");
  std::vector<OptimumPoint> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    Reader r(list[i], "points[" + std::to_string(i) + "]");
    OptimumPoint p;
    std::string src = "measured";
    r.require("terrain", p.terrain);
    r.require("d50_mm", p.d50_mm);
    r.require("h_star_mm", p.h_star_mm);
    r.get("source", src);
    r.finish();
    p.source = wrap_config("points", [&] { return provenance_from_string(src); });
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ValidationMeasurement> validation_measurements_from_json(const Json& j) {
  const Json& list = j.is_object() && j.contains("measurements") ? j.at("measurements") : j;
  GROUSER_REQUIRE(list.is_array(), ErrorCode::Config, "measurements: expected an array");
  std::vector<ValidationMeasurement> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    Reader r(list[i], "measurements[" + std::to_string(i) + "]");
    ValidationMeasurement m;
    std::string note;
    r.require("terrain", m.terrain);
    r.get("volume_fraction", m.volume_fraction);
    r.get("d50_mm", m.d50_mm);
    r.require("previous_height_mm", m.previous_height_mm);
    r.require("reported_predicted_height_mm", m.reported_predicted_height_mm);
    r.require("previous_slip", m.previous_slip);
    r.get("previous_slip_std", m.previous_slip_std);
    r.require("measured_slip", m.measured_slip);
    r.get("measured_slip_std", m.measured_slip_std);
    r.get("note", note);
    r.finish();
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace grouser
