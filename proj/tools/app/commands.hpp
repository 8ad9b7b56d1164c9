#pragma once

#include "config.hpp"

#include "turnkit/axes.hpp"
#include "turnkit/planner.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace turnkit::app {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitInfeasible = 2;

/// Everything up to action generation, in the aligned part frame.
struct Setup {
  VoxelGrid part;
  AxisCandidate axis;
  double gamma_raw = 0.0;
  VoxelGrid part_init;
  RigidTransform mu_init;
  HalfSection tc;
  StockModel stock;
  std::vector<FixtureConfig> fixtures;
  std::vector<TurningTool> tools;
  MachineEnvelope envelope;
};

VoxelGrid load_part(const JobConfig& cfg);
/// Fixed axis, or the best `axis.plan_axes` distinct lines from the search.
std::vector<AxisCandidate> planning_axes(const JobConfig& cfg, const VoxelGrid& part);
Setup prepare_for_axis(const JobConfig& cfg, const VoxelGrid& part, const AxisCandidate& axis);
/// prepare_for_axis on the first planning axis.
Setup prepare(const JobConfig& cfg);

/// Output directory for a config: <out>/<first 16 hex digits of its digest>.
std::filesystem::path run_directory(const JobConfig& cfg, const std::filesystem::path& out_override = {});

int cmd_axes(const JobConfig& cfg, const std::filesystem::path& run_dir, std::ostream& log);
int cmd_mtv(const JobConfig& cfg, const std::filesystem::path& run_dir, int fixture_id, const std::string& tool,
            std::ostream& log);
int cmd_plan(const JobConfig& cfg, const std::filesystem::path& run_dir, std::ostream& log);

/// Full command line: `axes|mtv|plan --config <path> [--workers N] [--out DIR]`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace turnkit::app
