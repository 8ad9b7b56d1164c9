#include "turnkit/actions.hpp"

#include "turnkit/error.hpp"
#include "turnkit/parallel.hpp"

#include <optional>

namespace turnkit {

Raster2D orient(const Raster2D& offsets, ToolOrientation o) {
  const int turns = ((o.quarter_turns % 4) + 4) % 4;
  std::vector<Pixel> px;
  for (Pixel p : offsets.pixels()) {
    if (o.mirrored) p.u = -p.u;
    for (int t = 0; t < turns; ++t) p = {-p.v, p.u};
    px.push_back(p);
  }
  return Raster2D::from_pixels(offsets.pixel(), offsets.origin(), px);
}

ToolAssembly ToolAssembly::make(ToolInsert insert, Raster2D holder, std::string setup,
                                ToolOrientation orientation) {
  if (insert.profile.is_empty()) throw Error("tool '" + insert.name + "': insert profile is empty");
  if (holder.is_empty()) holder = Raster2D::empty(insert.profile.pixel(), insert.profile.origin());
  if (!holder.same_lattice(insert.profile)) {
    throw FrameMismatch("tool '" + insert.name + "': holder and insert rasters use different lattices");
  }
  if (raster_boolean(insert.profile, holder, BooleanOp::Intersect).count() != 0) {
    throw Error("tool '" + insert.name + "': holder overlaps the insert");
  }
  ToolAssembly t;
  t.insert_ = ToolInsert{std::move(insert.name), orient(insert.profile, orientation)};
  t.holder_ = orient(holder, orientation);
  t.setup_ = std::move(setup);
  t.orientation_ = orientation;
  return t;
}

Raster2D ToolAssembly::silhouette() const {
  return raster_boolean(insert_.profile, holder_, BooleanOp::Union);
}

MachineEnvelope MachineEnvelope::rectangle(double pixel, double z_min, double z_max, double x_min,
                                           double x_max) {
  MachineEnvelope env{Raster2D::rectangle(pixel, Vec2::Zero(), Vec2(z_min, x_min), Vec2(z_max, x_max))};
  if (env.reach.is_empty()) throw Error("machine envelope is empty");
  return env;
}

MachineEnvelope MachineEnvelope::excluding(const Vec2& min, const Vec2& max) const {
  const Raster2D cut = Raster2D::rectangle(reach.pixel(), reach.origin(), min, max);
  return MachineEnvelope{raster_boolean(reach, cut, BooleanOp::Difference)};
}

HalfSection chuck_closure(const VoxelGrid& part_fix, const ChuckModel& chuck, double pixel) {
  const Axis z = Axis::spindle();
  HalfSection part = tc_implicit(part_fix, z, pixel);
  if (chuck.body.is_empty()) return part;
  return chuck_closure(part, tc_implicit(chuck.body, z, pixel));
}

HalfSection chuck_closure(const HalfSection& part_closure, const HalfSection& body_closure) {
  return make_half_section(part_closure.axis,
                           raster_boolean(part_closure.raster, body_closure.raster, BooleanOp::Union));
}

Raster2D c_obstacle(const Raster2D& scene_plane, const ToolAssembly& tool) {
  if (std::abs(scene_plane.pixel() - tool.pixel()) > 1e-12 * tool.pixel()) {
    throw FrameMismatch("c_obstacle: scene and tool pixel sizes differ");
  }
  return dilate2d(scene_plane, reflect2d(tool.silhouette()));
}

Raster2D c_obstacle(const HalfSection& p_star2, const ToolAssembly& tool) {
  return c_obstacle(mirror_to_plane(p_star2), tool);
}

Raster2D free_space(const Raster2D& obs, const MachineEnvelope& env) {
  return raster_boolean(env.reach, obs, BooleanOp::Difference);
}

HalfSection mtv(const Raster2D& free, const ToolInsert& insert, const Axis& axis) {
  if (!free.same_lattice(Raster2D::empty(free.pixel())) ||
      std::abs(free.pixel() - insert.profile.pixel()) > 1e-12 * free.pixel()) {
    throw FrameMismatch("mtv: free space must sit on the section lattice with the insert's pixel size");
  }
  return fold_to_half(dilate2d(free, insert.profile), axis);
}

std::vector<TurnAction> generate_actions(const HalfSection& part_closure,
                                         std::span<const FixtureConfig> fixtures,
                                         std::span<const TurningTool> tools, const ChuckModel& chuck,
                                         const MachineEnvelope& env, double pixel) {
  if (tools.empty()) throw Error("generate_actions: no tools");
  for (const TurningTool& t : tools) {
    if (!(t.cost_per_second > 0) || !(t.removal_rate > 0)) {
      throw Error("tool '" + t.assembly.insert().name + "': cost and removal rate must be positive");
    }
  }
  const Axis z = Axis::spindle();
  const HalfSection body = chuck.body.is_empty() ? empty_half_section(z, pixel)
                                                 : tc_implicit(chuck.body, z, pixel);
  const std::size_t n_tools = tools.size();
  std::vector<std::optional<TurnAction>> slots(fixtures.size() * n_tools);
  parallel_for(0, static_cast<std::ptrdiff_t>(slots.size()), [&](std::ptrdiff_t s) {
    const std::size_t fi = static_cast<std::size_t>(s) / n_tools;
    const std::size_t ti = static_cast<std::size_t>(s) % n_tools;
    const GripConfig& grip = fixtures[fi].grip;
    const HalfSection scene = chuck_closure(section_to_fixture(part_closure, grip), body);
    const TurningTool& tool = tools[ti];
    const Raster2D open = free_space(c_obstacle(scene, tool.assembly), env);
    HalfSection q = mtv(open, tool.assembly.insert(), z);
    if (q.raster.is_empty()) return;
    TurnAction a;
    a.id = static_cast<int>(s);
    a.fixture_index = static_cast<int>(fi);
    a.tool_index = static_cast<int>(ti);
    a.fixture = fixtures[fi];
    a.mtv_init = section_to_init(q, grip);
    a.mtv = std::move(q);
    a.cost_per_second = tool.cost_per_second;
    a.removal_rate = tool.removal_rate;
    slots[s] = std::move(a);
  });
  std::vector<TurnAction> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  return out;
}

}  // namespace turnkit
