#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "grouser/controller.hpp"
#include "grouser/scaling_law.hpp"
#include "grouser/terrain_models.hpp"
#include "grouser/testbed.hpp"
#include "grouser/wheel_geometry.hpp"

namespace grouser {

using Json = nlohmann::json;

// JSON mapping for configuration types. Readers are strict: unknown keys and
// wrong types raise Config with the offending path; missing keys keep defaults.

Json to_json(const WheelGeometry& v);
Json to_json(const EncoderConfig& v);
Json to_json(const PidGains& v);
Json to_json(const ServoLimits& v);
Json to_json(const TerrainModel& v);
Json to_json(const SimConfig& v);
Json to_json(const ScalingFit& v);

void from_json(const Json& j, WheelGeometry& v, std::string_view path = "wheel");
void from_json(const Json& j, EncoderConfig& v, std::string_view path = "encoders");
void from_json(const Json& j, PidGains& v, std::string_view path = "gains");
void from_json(const Json& j, ServoLimits& v, std::string_view path = "servo");
void from_json(const Json& j, TerrainModel& v, std::string_view path = "terrain");
void from_json(const Json& j, ScalingFit& v, std::string_view path = "fit");

/// Reads a SimConfig. A string-valued "terrain" is looked up in `terrains`.
SimConfig sim_config_from_json(const Json& j, const std::vector<TerrainModel>& terrains = {});

std::string_view to_string(JunctionMode m) noexcept;
JunctionMode junction_mode_from_string(std::string_view s);

/// Parses a JSON file; Io if unreadable, Config if malformed.
Json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const Json& j);

/// {"schema": 1, "terrains": [...]}; every model is validated.
std::vector<TerrainModel> load_terrain_calibration(const std::filesystem::path& path);
std::vector<TerrainModel> terrain_calibration_from_json(const Json& j);
const TerrainModel& find_terrain(const std::vector<TerrainModel>& terrains, std::string_view name);

/// {"gains": {...}, "servo": {...}} or a bare gains object.
PidGains load_controller_gains(const std::filesystem::path& path, ServoLimits* servo = nullptr);

std::vector<OptimumPoint> optimum_points_from_json(const Json& j);
std::vector<ValidationMeasurement> validation_measurements_from_json(const Json& j);

}  // namespace grouser
