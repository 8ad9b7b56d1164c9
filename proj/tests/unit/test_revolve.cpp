#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "test_support.hpp"
#include "turnkit/error.hpp"
#include "turnkit/mesh.hpp"
#include "turnkit/revolve.hpp"

#include <cmath>
#include <random>

using namespace turnkit;

namespace {

const Axis kZ = Axis::spindle();

bool set_at(const HalfSection& s, double z, double r) {
  return s.raster.test(s.raster.locate(Vec2(z, r)));
}

bool near_set(const Raster2D& r, Pixel p) {
  for (int du = -1; du <= 1; ++du)
    for (int dv = -1; dv <= 1; ++dv)
      if (r.test({p.u + du, p.v + dv})) return true;
  return false;
}

/// Every pixel of the symmetric difference touches the other set.
bool within_one_pixel(const Raster2D& a, const Raster2D& b) {
  for (const Pixel& p : a.pixels())
    if (!b.test(p) && !near_set(b, p)) return false;
  for (const Pixel& p : b.pixels())
    if (!a.test(p) && !near_set(a, p)) return false;
  return true;
}

/// Half-section of a cylinder r <= R, z in [z0, z1], by pixel centers.
Raster2D cylinder_section(double R, double z0, double z1, double pixel) {
  return Raster2D::rectangle(pixel, Vec2::Zero(), Vec2(z0, 0), Vec2(z1, R));
}

}  // namespace

TEST_CASE("tc_implicit: unit cube about z") {
  const double d = 0.05;
  const VoxelGrid cube = test::box_grid(Vec3::Constant(-0.5), Vec3::Constant(0.5), d);
  const HalfSection tc = tc_implicit(cube, kZ, d);
  CHECK(set_at(tc, 0.0, 0.5 - d));
  CHECK_FALSE(set_at(tc, 0.0, 0.8));
  double r_top = 0;
  for (const Pixel& p : tc.raster.pixels()) r_top = std::max(r_top, (p.v + 0.5) * d);
  CHECK(std::abs(r_top - std::sqrt(0.5)) <= d);
}

TEST_CASE("tc of an axis-aligned cylinder is its rectangle") {
  const double R = 1.0, d = R / 20;
  const VoxelGrid cyl = test::cylinder_grid(R, 0.0, 2.0, d);
  const Raster2D expect = cylinder_section(R, 0.0, 2.0, d);
  const HalfSection imp = tc_implicit(cyl, kZ, d);
  const HalfSection exp1 = tc_explicit(cyl, kZ, 1, d);
  CHECK(within_one_pixel(imp.raster, expect));
  CHECK(within_one_pixel(exp1.raster, expect));
  CHECK(within_one_pixel(imp.raster, exp1.raster));
}

TEST_CASE("tc_explicit: corner radius and monotonicity in the section count") {
  const double d = 0.05;
  const VoxelGrid cube = test::box_grid(Vec3::Constant(-0.5), Vec3::Constant(0.5), d);
  const int n = explicit_section_count(max_radius(cube, kZ), d);
  const HalfSection fine = tc_explicit(cube, kZ, n, d);
  double r_top = 0;
  for (const Pixel& p : fine.raster.pixels()) r_top = std::max(r_top, (p.v + 0.5) * d);
  CHECK(std::abs(r_top - std::sqrt(0.5)) <= d);

  const Axis skew = Axis::make(Vec3(0.05, -0.1, 0), Vec3(0.3, 0.2, 1.0));
  for (int k : {1, 2, 3, 5}) {
    const Raster2D a = tc_explicit(cube, skew, k, d).raster;
    const Raster2D b = tc_explicit(cube, skew, 2 * k, d).raster;
    CHECK(raster_boolean(a, b, BooleanOp::Difference).count() == 0);
  }
}

TEST_CASE("tc_implicit and tc_explicit agree up to a one-pixel band") {
  const double d = 0.1;
  const VoxelGrid part = voxelize(make_box(Vec3(-1, -0.6, -0.4), Vec3(1.2, 0.5, 0.9)), d);
  for (const Axis& a : {kZ, Axis::make(Vec3(0.1, 0, 0), Vec3(1, 1, 0)),
                        Axis::make(Vec3(0, 0.2, 0.1), Vec3(0.2, -0.5, 1))}) {
    const int n = explicit_section_count(max_radius(part, a), d);
    CHECK(within_one_pixel(tc_implicit(part, a, d).raster, tc_explicit(part, a, n, d).raster));
  }
}

TEST_CASE("the turnable closure contains the part") {
  const double d = 0.1;
  const VoxelGrid part = voxelize(make_box(Vec3(-1, -0.6, -0.4), Vec3(1.2, 0.5, 0.9)), d);
  const Axis a = Axis::make(Vec3(0.1, 0, 0), Vec3(0.3, 1, 0.2));
  const HalfSection tc = tc_implicit(part, a, d);
  for (const Vec3& c : part.occupied_centers()) {
    const Vec2 zr = to_section_coords(a, c);
    CHECK(near_set(tc.raster, tc.raster.locate(zr)));
  }
  CHECK(revolve_volume(tc) >= part.volume());
}

TEST_CASE("revolve_volume") {
  SUBCASE("annulus z in [0,1], r in [1,2]") {
    const HalfSection s = make_half_section(kZ, Raster2D::rectangle(0.01, Vec2::Zero(), Vec2(0, 1), Vec2(1, 2)));
    CHECK(std::abs(revolve_volume(s) - 3 * M_PI) <= 0.005 * 3 * M_PI);
  }
  SUBCASE("empty section") { CHECK(revolve_volume(empty_half_section(kZ, 0.1)) == 0.0); }
  SUBCASE("closure of a side-2 cube") {
    // At 0.01 the nearest representable radius is 1.41 (-0.6%); 0.005 resolves it.
    const double d = 0.005;
    const int rows = static_cast<int>(std::round(std::sqrt(2.0) / d));
    const Raster2D r = Raster2D::from_predicate(d, Vec2::Zero(), {0, 0}, {400, rows + 2}, [&](Pixel p) {
      return (p.v + 0.5) * d <= std::sqrt(2.0);
    });
    CHECK(std::abs(revolve_volume(make_half_section(kZ, r)) - 4 * M_PI) <= 0.005 * 4 * M_PI);
  }
  SUBCASE("moments add over disjoint sections") {
    std::mt19937_64 rng(2);
    const Raster2D a = test::random_raster(rng, 20, 20, 0.4, 1.0, {0, 0}, {5, 5});
    const Raster2D b = test::random_raster(rng, 20, 20, 0.4, 1.0, {0, 0}, {5, 5});
    const auto u = raster_boolean(a, b, BooleanOp::Union);
    const auto i = raster_boolean(a, b, BooleanOp::Intersect);
    CHECK(revolve_moment(u) + revolve_moment(i) == revolve_moment(a) + revolve_moment(b));
  }
}

TEST_CASE("revolve_volume on rasterized annuli") {
  SUBCASE("lattice-aligned annulus is exact") {
    for (int n : {25, 50, 100, 200}) {
      const double d = 1.0 / n;
      const Raster2D r = Raster2D::rectangle(d, Vec2::Zero(), Vec2(0, 1), Vec2(1, 2));
      CHECK(std::abs(revolve_volume(make_half_section(kZ, r)) - 3 * M_PI) <= 1e-12 * 3 * M_PI);
    }
  }
  SUBCASE("off-lattice annulus stays inside the half-pixel envelope") {
    const double r1 = 1.013, r2 = 2.017, h = 0.991;
    const double exact = M_PI * (r2 * r2 - r1 * r1) * h;
    for (double d : {0.04, 0.02, 0.01, 0.005}) {
      const Raster2D r = Raster2D::rectangle(d, Vec2::Zero(), Vec2(0, r1), Vec2(h, r2));
      const double outer = M_PI * (std::pow(r2 + d / 2, 2) - std::pow(r1 - d / 2, 2)) * (h + d);
      const double inner = M_PI * (std::pow(r2 - d / 2, 2) - std::pow(r1 + d / 2, 2)) * (h - d);
      const double v = revolve_volume(make_half_section(kZ, r));
      CHECK(v <= outer);
      CHECK(v >= inner);
      CHECK(std::abs(v - exact) <= std::max(outer - exact, exact - inner));
    }
  }
}

TEST_CASE("turnability ratio") {
  SUBCASE("aligned cylinder") {
    const double R = 2.0, d = R / 50;
    const VoxelGrid cyl = test::cylinder_grid(R, 0.0, 3.0, d);
    const TurnabilityReport rep = turnability_ratio(cyl, kZ, d);
    CHECK(std::abs(rep.gamma - 1.0) <= 0.02);
    CHECK(rep.gamma <= 1.0);
    CHECK(rep.gamma_raw == doctest::Approx(rep.part_volume / rep.tc_volume));
  }
  SUBCASE("cube about a face axis, then about an edge-midpoint axis") {
    const double d = 0.05;
    const VoxelGrid cube = test::box_grid(Vec3::Constant(-1), Vec3::Constant(1), d);
    const TurnabilityReport face = turnability_ratio(cube, kZ, d);
    // The closure radius is sqrt(2) up to one pixel of rounding.
    const double h = 2.0 + 2 * d;
    CHECK(face.gamma >= 8.0 / (M_PI * std::pow(std::sqrt(2.0) + d, 2) * h));
    CHECK(face.gamma <= 8.0 / (M_PI * std::pow(std::sqrt(2.0) - d, 2) * (2.0 - 2 * d)));
    CHECK(face.part_volume == doctest::Approx(8.0));
    const TurnabilityReport edge = turnability_ratio(cube, Axis::make(Vec3::Zero(), Vec3(1, 1, 0)), d);
    CHECK(edge.gamma < 2 / M_PI);
  }
  SUBCASE("empty part") {
    const VoxelGrid none = VoxelGrid::empty(test::frame_around(Vec3::Zero(), Vec3::Ones(), 0.1));
    CHECK_THROWS_AS(turnability_ratio(none, kZ, 0.1), Error);
    CHECK(tc_implicit(none, kZ, 0.1).raster.count() == 0);
  }
}

TEST_CASE("mirror and fold round-trip") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const Raster2D r = test::random_raster(rng, 12, 9, 0.5, 0.5, {-4, 0}, {4, 3});
    const HalfSection s = make_half_section(kZ, r);
    const Raster2D plane = mirror_to_plane(s);
    CHECK(plane.count() == 2 * r.count());
    CHECK(fold_to_half(plane, kZ).raster.same_set(r));
  }
  CHECK_THROWS_AS(make_half_section(kZ, Raster2D::from_pixels(1.0, Vec2::Zero(), std::vector<Pixel>{{0, -1}})),
                  Error);
}

TEST_CASE("half-section files round-trip") {
  const auto dir = test::scratch_dir("revolve_io");
  const Axis a = Axis::make(Vec3(1, 2, 3), Vec3(0, 0.6, 0.8));
  const Raster2D r = Raster2D::from_pixels(0.25, Vec2::Zero(), std::vector<Pixel>{{-3, 0}, {2, 5}, {0, 1}});
  const HalfSection s = make_half_section(a, r);
  write_half_section(s, dir / "sec");
  const HalfSection back = read_half_section(dir / "sec");
  CHECK(back.raster.same_set(r));
  CHECK(back.pixel() == 0.25);
  CHECK((back.axis.point - a.point).norm() < 1e-12);
  CHECK((back.axis.direction - a.direction).norm() < 1e-12);
  CHECK(encode_section_header(back) == encode_section_header(s));
}
