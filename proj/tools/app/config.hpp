#pragma once

#include "turnkit/actions.hpp"
#include "turnkit/fixture.hpp"
#include "turnkit/geometry.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace turnkit::app {

inline constexpr int kSchemaVersion = 1;

/// Bad or missing config value; `field` is a JSON path such as "chuck.jaw_count".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct AxisOptions {
  int n_dirs = 64;
  int n_offsets = 1;
  int shortlist = 16;
  int refine_top = 2;
  int refine_budget = 60;
  int plan_axes = 1;  ///< best distinct axes carried into planning
  std::vector<Axis> user;
  std::optional<Axis> fixed;  ///< skips the search in `plan`
};

struct GripOptions {
  double z_step = 0.0;
  double phi_step = 0.0;  ///< radians
  int per_flip = 1;       ///< passing grips kept for each flip state
};

struct ToolSpec {
  std::string name;
  std::filesystem::path insert_path;
  int insert_origin[2] = {0, 0};
  std::filesystem::path holder_path;  ///< empty: no holder
  int holder_origin[2] = {0, 0};
  ToolOrientation orientation;
  std::string setup;
  double cost_per_second = 0.0;
  double removal_rate = 0.0;
};

struct JobConfig {
  std::filesystem::path source;  ///< the config file itself
  std::filesystem::path part_path;
  double unit_scale = 1.0;
  double voxel = 0.0;  ///< voxel edge
  double pixel = 0.0;  ///< section pixel
  AxisOptions axis;
  ChuckModel chuck;  ///< body filled in by load_config
  double chuck_body_radius = 0.0;
  double chuck_body_depth = 0.0;
  GripOptions grips;
  double env_z_min = 0.0, env_z_max = 0.0, env_x_min = 0.0, env_x_max = 0.0;
  std::vector<std::pair<Vec2, Vec2>> env_exclusions;
  std::filesystem::path tool_catalog;
  std::vector<ToolSpec> tools;
  double radial_allowance = 0.0;
  double axial_allowance = 0.0;
  double tol = 0.0;
  double setup_cost = 0.0;
  int top_k = 1;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  nlohmann::json canonical;  ///< parsed config, as hashed
};

/// Parses and validates; relative paths resolve against the config's
/// directory. Throws ConfigError.
JobConfig load_config(const std::filesystem::path& path);
JobConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Tool catalog document: {"schema": 1, "tools": [...]}.
std::vector<ToolSpec> parse_tool_catalog(const nlohmann::json& doc, const std::filesystem::path& base_dir);

std::vector<TurningTool> load_tools(const std::vector<ToolSpec>& specs, double pixel);
MachineEnvelope make_envelope(const JobConfig& cfg);

/// Hex SHA-256 of the canonical config plus the bytes of every file it
/// references.
std::string config_digest(const JobConfig& cfg);

}  // namespace turnkit::app
