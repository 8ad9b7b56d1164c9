#include "test_support.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace turnkit::test {

GridFrame frame_around(const Vec3& min, const Vec3& max, double cell, int pad) {
  GridFrame f;
  f.cell = cell;
  f.origin = min - Vec3::Constant(pad * cell);
  for (int a = 0; a < 3; ++a) {
    f.dims[a] = std::max(1, static_cast<int>(std::ceil((max[a] - min[a]) / cell - 1e-9))) + 2 * pad;
  }
  return f;
}

VoxelGrid sample_solid(const GridFrame& frame, const std::function<bool(const Vec3&)>& inside) {
  return VoxelGrid::from_predicate(frame, [&](int i, int j, int k) { return inside(frame.center(i, j, k)); });
}

VoxelGrid box_grid(const Vec3& min, const Vec3& max, double cell, int pad) {
  return sample_solid(frame_around(min, max, cell, pad), [&](const Vec3& p) {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  });
}

VoxelGrid cylinder_grid(double r, double z0, double z1, double cell, int pad) {
  return sample_solid(frame_around(Vec3(-r, -r, z0), Vec3(r, r, z1), cell, pad), [&](const Vec3& p) {
    return p.head<2>().norm() <= r && p.z() >= z0 && p.z() <= z1;
  });
}

Raster2D random_raster(std::mt19937_64& rng, int max_w, int max_h, double density, double pixel,
                       Pixel lo_min, Pixel lo_max) {
  std::uniform_int_distribution<int> w(1, max_w), h(1, max_h);
  std::uniform_int_distribution<int> lu(lo_min.u, lo_max.u), lv(lo_min.v, lo_max.v);
  std::bernoulli_distribution on(density);
  const std::array<int, 2> dims{w(rng), h(rng)};
  const Pixel lo{lu(rng), lv(rng)};
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(dims[0]) * dims[1]);
  for (auto& b : bits) b = on(rng);
  return Raster2D(pixel, Vec2::Zero(), lo, dims, std::move(bits));
}

Raster2D minkowski_by_definition(const Raster2D& a, const Raster2D& b) {
  std::set<Pixel> out;
  for (const Pixel& p : a.pixels())
    for (const Pixel& q : b.pixels()) out.insert(p + q);
  const std::vector<Pixel> v(out.begin(), out.end());
  return Raster2D::from_pixels(a.pixel(), a.origin(), v);
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("turnkit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace turnkit::test
