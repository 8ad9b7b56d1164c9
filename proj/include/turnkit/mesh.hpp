#pragma once

#include "turnkit/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace turnkit {

using Triangle = std::array<std::uint32_t, 3>;

/// Indexed triangle soup in mm. Loaders merge coincident positions and drop
/// degenerate facets, so a watertight STL yields a closed indexed mesh.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  double unit_scale = 1.0;

  bool empty() const { return triangles.empty(); }
  Eigen::AlignedBox3d bounds() const;
};

/// Facets below this area (mm^2) are considered degenerate.
inline constexpr double kDegenerateArea = 1e-12;

/// Builds an indexed mesh from raw facet corners (three per facet), merging
/// bit-identical positions and dropping degenerate facets.
TriangleMesh mesh_from_facets(const std::vector<Vec3>& corners, double unit_scale = 1.0);

/// Reads ASCII or binary (little-endian) STL. Coordinates are multiplied by
/// `unit_scale`; 1.0 means the file is in mm.
TriangleMesh load_mesh(const std::filesystem::path& path, double unit_scale = 1.0);
TriangleMesh parse_stl(std::string_view bytes, double unit_scale = 1.0);

void write_stl_ascii(const TriangleMesh& mesh, const std::filesystem::path& path,
                     std::string_view solid_name = "turnkit");
void write_stl_binary(const TriangleMesh& mesh, const std::filesystem::path& path);

/// Exact vertex map.
TriangleMesh transform_solid(const TriangleMesh& mesh, const RigidTransform& t);

// Closed, outward-oriented primitives used for fixtures and examples.
TriangleMesh make_box(const Vec3& min, const Vec3& max);
/// Cylinder along +z from z0 to z1 with side quads and fan caps
/// (4 * segments triangles).
TriangleMesh make_cylinder(double radius, double z0, double z1, int segments);
TriangleMesh make_sphere(const Vec3& center, double radius, int stacks, int slices);
/// Revolves a closed polygon given as (z, r) pairs, r >= 0, counter-clockwise
/// in the (z, r) plane, about the z-axis.
TriangleMesh make_revolved(const std::vector<Vec2>& profile_zr, int segments);

}  // namespace turnkit
