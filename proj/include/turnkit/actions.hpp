#pragma once

#include "turnkit/fixture.hpp"
#include "turnkit/raster.hpp"
#include "turnkit/revolve.hpp"

#include <span>
#include <string>
#include <vector>

namespace turnkit {

/// Top face of a cutting insert as an offset raster; lattice pixel (0, 0) is
/// the cutting reference point.
struct ToolInsert {
  std::string name;
  Raster2D profile;
};

/// In-plane orientation: optional mirror across the radial direction (u -> -u),
/// then `quarter_turns` counter-clockwise quarter turns. The eight values form
/// the pixel lattice's symmetry group, so reorienting is exact.
struct ToolOrientation {
  int quarter_turns = 0;
  bool mirrored = false;
};

Raster2D orient(const Raster2D& offsets, ToolOrientation o);

/// Insert plus holder silhouette H in the tool plane (z along the spindle,
/// x radial, both sides of the axis). Orientation is baked in at creation
/// and never changes afterwards.
class ToolAssembly {
 public:
  /// Throws Error if the profiles overlap, the insert is empty or the pixel
  /// sizes differ.
  static ToolAssembly make(ToolInsert insert, Raster2D holder, std::string setup,
                           ToolOrientation orientation = {});

  const ToolInsert& insert() const { return insert_; }
  const Raster2D& holder() const { return holder_; }
  const std::string& setup() const { return setup_; }
  ToolOrientation orientation() const { return orientation_; }
  double pixel() const { return insert_.profile.pixel(); }
  /// H u C.
  Raster2D silhouette() const;

 private:
  ToolAssembly() = default;
  ToolInsert insert_;
  Raster2D holder_;
  std::string setup_;
  ToolOrientation orientation_;
};

/// Tool assembly with its economics: cost rate c (currency/s) and volumetric
/// removal rate f (mm^3/s).
struct TurningTool {
  ToolAssembly assembly;
  double cost_per_second = 0.0;
  double removal_rate = 0.0;
};

/// Reachable tool-reference translations in the (z, x) plane.
struct MachineEnvelope {
  Raster2D reach;

  /// Carriage range [z_min, z_max] times cross-slide range [x_min, x_max].
  static MachineEnvelope rectangle(double pixel, double z_min, double z_max, double x_min, double x_max);
  /// Removes a rectangle of translations (e.g. the tailstock zone).
  MachineEnvelope excluding(const Vec2& min, const Vec2& max) const;
};

/// Revolution of part u chuck body about the spindle, as a half-section.
HalfSection chuck_closure(const VoxelGrid& part_fix, const ChuckModel& chuck, double pixel);
/// Same, from already computed closures: Θ(A u B) = Θ(A) u Θ(B).
HalfSection chuck_closure(const HalfSection& part_closure, const HalfSection& body_closure);

/// Tool placements that collide with the scene: plane (+) reflect(H u C).
Raster2D c_obstacle(const Raster2D& scene_plane, const ToolAssembly& tool);
/// Mirrors the closure onto the full plane first.
Raster2D c_obstacle(const HalfSection& p_star2, const ToolAssembly& tool);

/// W minus obs.
Raster2D free_space(const Raster2D& obs, const MachineEnvelope& env);

/// Region swept by the insert over free placements, revolved: the fold of
/// free (+) C onto r >= 0.
HalfSection mtv(const Raster2D& free, const ToolInsert& insert, const Axis& axis);

struct TurnAction {
  int id = 0;
  int fixture_index = 0;
  int tool_index = 0;
  FixtureConfig fixture;
  HalfSection mtv;       ///< in the fixture's spindle frame
  HalfSection mtv_init;  ///< the same region in the aligned part frame
  double cost_per_second = 0.0;
  double removal_rate = 0.0;

  double cost_per_volume() const { return cost_per_second / removal_rate; }
};

/// Every (fixture, tool) pair, in parallel. `part_closure` is the part's
/// turnable closure in the aligned frame; each fixture maps it into its own
/// frame by a pixel relabeling, adds the chuck body's closure, and the tool's
/// MTV is computed there. Ids are fixture_index * tools.size() + tool_index;
/// pairs with an empty MTV are dropped.
std::vector<TurnAction> generate_actions(const HalfSection& part_closure,
                                         std::span<const FixtureConfig> fixtures,
                                         std::span<const TurningTool> tools, const ChuckModel& chuck,
                                         const MachineEnvelope& env, double pixel);

}  // namespace turnkit
