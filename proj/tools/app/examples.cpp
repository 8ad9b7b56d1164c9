#include "examples.hpp"

#include "turnkit/error.hpp"
#include "turnkit/mesh.hpp"
#include "turnkit/raster.hpp"

#include "json.hpp"

#include <fstream>

namespace turnkit::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kPixel = 0.25;

// Rectangle of offset pixels written as a PGM; returns the image pixel that
// holds lattice pixel (0, 0).
json write_block(const fs::path& dir, const std::string& name, int u0, int u1, int v0, int v1) {
  std::vector<Pixel> px;
  for (int u = u0; u <= u1; ++u)
    for (int v = v0; v <= v1; ++v) px.push_back({u, v});
  // Pad so (0, 0) is inside the image.
  const Raster2D r = Raster2D::from_pixels(kPixel, Vec2::Zero(), px)
                         .windowed({std::min(0, u0), std::min(0, v0)},
                                   {std::max(u1, 0) - std::min(0, u0) + 1, std::max(v1, 0) - std::min(0, v0) + 1});
  write_pgm(r, dir / name);
  return {{"image", name}, {"origin", json::array({-r.lo().u, r.hi().v - 1})}};
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

}  // namespace

void write_example_job(const fs::path& dir) {
  fs::create_directories(dir);
  // (z, r) outline, counter-clockwise: r 6 over z in [0, 12], r 4 over
  // [12, 24] with a groove down to r 3 at [17, 18], r 2.5 over [24, 30].
  const std::vector<Vec2> outline = {{0, 0},  {30, 0}, {30, 2.5}, {24, 2.5}, {24, 4}, {18, 4}, {18, 3},
                                     {17, 3}, {17, 4}, {12, 4},   {12, 6},   {0, 6}};
  write_stl_binary(make_revolved(outline, 128), dir / "stepped_shaft.stl");

  json tools = json::array();
  tools.push_back({{"name", "turn"},
                   {"insert", write_block(dir, "turn_insert.pgm", 0, 4, 0, 2)},
                   {"holder", write_block(dir, "turn_holder.pgm", 0, 4, 3, 40)},
                   {"setup", "radial, holder up"},
                   {"cost_per_second", 2.0},
                   {"removal_rate", 20.0}});
  tools.push_back({{"name", "groove"},
                   {"insert", write_block(dir, "groove_insert.pgm", 0, 2, 0, 5)},
                   {"holder", write_block(dir, "groove_holder.pgm", 0, 2, 6, 40)},
                   {"setup", "radial, holder up"},
                   {"cost_per_second", 2.0},
                   {"removal_rate", 4.0}});
  write_json(dir / "tools.json", {{"schema", 1}, {"tools", tools}});
  write_json(dir / "tools_empty.json", {{"schema", 1}, {"tools", json::array()}});

  json cfg = {
      {"schema", 1},
      {"part", {{"path", "stepped_shaft.stl"}, {"unit_scale", 1.0}}},
      {"resolution", {{"voxel", kPixel}, {"pixel", kPixel}}},
      {"axis", {{"n_dirs", 16}, {"n_offsets", 1}, {"shortlist", 4}, {"refine_top", 1}, {"refine_budget", 12}, {"plan_axes", 1}}},
      {"chuck",
       {{"jaw_count", 3},
        {"jaw_axial_length", 4.0},
        {"grip_radius_min", 2.0},
        {"grip_radius_max", 8.0},
        {"min_contact_length", 2.0},
        {"min_angular_coverage_deg", 5.0},
        {"jaw_angular_width_deg", 30.0},
        {"body_radius", 10.0},
        {"body_depth", 2.0}}},
      {"grips", {{"z_step", kPixel}, {"phi_step_deg", 10.0}, {"per_flip", 1}}},
      {"envelope", {{"z_min", -5.0}, {"z_max", 40.0}, {"x_min", -10.0}, {"x_max", 10.0}}},
      {"tools", "tools.json"},
      {"stock", {{"radial_allowance", 0.5}, {"axial_allowance", 1.0}}},
      {"plan", {{"tol", 0.5}, {"setup_cost", 5.0}, {"top_k", 3}}},
      {"out", "runs"},
      {"seed", 7}};
  write_json(dir / "stepped_shaft.json", cfg);
  cfg["tools"] = "tools_empty.json";
  write_json(dir / "stepped_shaft_no_tools.json", cfg);
}

}  // namespace turnkit::app
