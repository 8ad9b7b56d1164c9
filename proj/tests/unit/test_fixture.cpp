#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "test_support.hpp"
#include "turnkit/error.hpp"
#include "turnkit/fixture.hpp"

#include <cmath>

using namespace turnkit;

namespace {

constexpr double kDeg = M_PI / 180.0;

ChuckModel test_chuck(double jaw_length = 1.5) {
  ChuckModel c;
  c.jaw_count = 3;
  c.jaw_axial_length = jaw_length;
  c.grip_radius_min = 1.0;
  c.grip_radius_max = 5.0;
  c.min_contact_length = 0.5;
  c.min_angular_coverage = 10 * kDeg;
  c.jaw_angular_width = 40 * kDeg;
  c.body = make_chuck_body(6.0, 1.0, 0.25);
  return c;
}

bool same_occupancy(const VoxelGrid& a, const VoxelGrid& b) {
  return a.frame().matches(b.frame()) &&
         std::equal(a.occupancy().begin(), a.occupancy().end(), b.occupancy().begin());
}

std::size_t boundary_cells(const VoxelGrid& g) {
  std::size_t n = 0;
  const auto& f = g.frame();
  for (int k = 0; k < f.dims[2]; ++k)
    for (int j = 0; j < f.dims[1]; ++j)
      for (int i = 0; i < f.dims[0]; ++i)
        n += g.occupied(i, j, k) &&
             !(g.occupied(i - 1, j, k) && g.occupied(i + 1, j, k) && g.occupied(i, j - 1, k) &&
               g.occupied(i, j + 1, k) && g.occupied(i, j, k - 1) && g.occupied(i, j, k + 1));
  return n;
}

}  // namespace

TEST_CASE("align_to_spindle") {
  const VoxelGrid part = test::box_grid(Vec3(-0.5, -0.3, 0), Vec3(0.7, 0.4, 2), 0.1);
  SUBCASE("machine axis is the identity") {
    const auto [init, mu] = align_to_spindle(part, Axis::spindle());
    CHECK(mu.is_approx(RigidTransform::identity(), 0.0));
    CHECK(same_occupancy(init, part));
  }
  SUBCASE("x axis is turned onto z exactly") {
    const auto [init, mu] = align_to_spindle(part, Axis::make(Vec3::Zero(), Vec3::UnitX()));
    CHECK((mu.apply_direction(Vec3::UnitX()) - Vec3::UnitZ()).norm() < 1e-12);
    CHECK(init.occupied_count() == part.occupied_count());
  }
  SUBCASE("axis point lands on the origin") {
    const Axis a = Axis::make(Vec3(0.1, 0.2, 0.3), Vec3(1, 1, 1));
    const auto [init, mu] = align_to_spindle(part, a);
    CHECK(mu.apply(a.point).norm() < 1e-12);
    CHECK((mu.apply_direction(a.direction) - Vec3::UnitZ()).norm() < 1e-12);
  }
}

TEST_CASE("mu_fix composes mu_grip with mu_init") {
  const VoxelGrid part = test::box_grid(Vec3(-0.5, -0.3, 0), Vec3(0.7, 0.4, 2), 0.1);
  const auto [init, mu_init] = align_to_spindle(part, Axis::make(Vec3(0.2, 0, 0), Vec3::UnitY()));
  const GripConfig grip{0.3, M_PI / 2, true, 0.15};
  const FixtureConfig fc = FixtureConfig::make(mu_init, grip);
  CHECK(fc.mu_fix.rotation() == (grip.transform() * mu_init).rotation());
  CHECK(fc.mu_fix.translation() == (grip.transform() * mu_init).translation());

  const VoxelGrid two_step = place_part(init, grip);
  const VoxelGrid one_shot = transform_solid(part, fc.mu_fix);
  const auto diff = static_cast<long>(two_step.occupied_count()) - static_cast<long>(one_shot.occupied_count());
  CHECK(std::labs(diff) <= static_cast<long>(boundary_cells(part)));
  CHECK(two_step.occupied_count() == part.occupied_count());
}

TEST_CASE("flipping twice is the identity") {
  for (double pivot : {0.0, 0.35, -2.5}) {
    const GripConfig g{0.0, 0.0, true, pivot};
    CHECK((g.flip() * g.flip()).is_approx(RigidTransform::identity(), 1e-9));
    CHECK((g.flip().apply_direction(Vec3::UnitZ()) + Vec3::UnitZ()).norm() < 1e-12);
  }
}

TEST_CASE("enumerate_grips") {
  const ChuckModel chuck = test_chuck(2.0);
  SUBCASE("short part in a long jaw window: both flip states") {
    const VoxelGrid cyl = test::cylinder_grid(2.0, 0.0, 1.0, 0.1);
    const auto grips = enumerate_grips(cyl, chuck, 0.5, 15 * kDeg);
    CHECK(std::count_if(grips.begin(), grips.end(), [](auto& g) { return !g.flipped; }) >= 1);
    CHECK(std::count_if(grips.begin(), grips.end(), [](auto& g) { return g.flipped; }) >= 1);
    for (const GripConfig& g : grips) CHECK(g.phi == 0.0);
    for (const GripConfig& g : grips) {
      const auto box = occupied_bounds(place_part(cyl, g));
      CHECK(box.min().z() >= -1e-9);
      CHECK(box.min().z() < chuck.jaw_axial_length);
    }
  }
  SUBCASE("a prism keeps its spin lattice") {
    const VoxelGrid prism = test::box_grid(Vec3(-1.5, -1.5, 0), Vec3(1.5, 1.5, 1), 0.1);
    const auto grips = enumerate_grips(prism, chuck, 0.5, 30 * kDeg);
    CHECK(std::any_of(grips.begin(), grips.end(), [](auto& g) { return g.phi > 0; }));
    for (const GripConfig& g : grips) CHECK(g.phi < 2 * M_PI / 3);
  }
  SUBCASE("too large to grip") {
    const VoxelGrid fat = test::cylinder_grid(8.0, 0.0, 1.0, 0.25);
    CHECK(enumerate_grips(fat, chuck, 0.5, 15 * kDeg).empty());
  }
  SUBCASE("rejects bad steps") {
    const VoxelGrid cyl = test::cylinder_grid(2.0, 0.0, 1.0, 0.1);
    CHECK_THROWS_AS(enumerate_grips(cyl, chuck, 0.0, 0.1), Error);
  }
}

TEST_CASE("validate_grip") {
  const double d = 0.1;
  const ChuckModel chuck = test_chuck();

  SUBCASE("plain cylinder passes at every spin") {
    const VoxelGrid cyl = test::cylinder_grid(2.0, 0.0, 3.0, d);
    for (double phi : {0.0, 17 * kDeg, 60 * kDeg, 95 * kDeg}) {
      const GripReport rep = validate_grip(place_part(cyl, GripConfig{0.0, phi, false, 0.0}), chuck);
      CHECK(rep.pass);
      REQUIRE(rep.jaws.size() == 3);
      for (const JawContact& j : rep.jaws) {
        // Off-lattice spins resample, so the surface moves by up to a cell.
        CHECK(std::abs(j.contact_radius - 2.0) <= d);
        CHECK(j.contact_length == doctest::Approx(1.5));
      }
    }
  }
  SUBCASE("grooved cylinder: short lands add up") {
    const GridFrame f = test::frame_around(Vec3(-2, -2, 0), Vec3(2, 2, 3), d);
    const VoxelGrid part = test::sample_solid(f, [](const Vec3& p) {
      const double r = std::hypot(p.x(), p.y());
      const bool groove = p.z() > 0.3 && p.z() < 1.2;
      return p.z() > 0 && p.z() < 3 && r <= (groove ? 1.5 : 2.0);
    });
    const GripReport rep = validate_grip(part, chuck);
    CHECK(rep.pass);
    for (const JawContact& j : rep.jaws) {
      // Segment-sum oracle: two lands of 0.3 each inside the 1.5 window.
      REQUIRE(j.segments.size() == 2);
      double sum = 0;
      for (const auto& s : j.segments) {
        CHECK(s.z_end - s.z_begin < chuck.min_contact_length);
        sum += s.z_end - s.z_begin;
      }
      CHECK(sum == doctest::Approx(0.6));
      CHECK(j.contact_length == doctest::Approx(sum));
    }
  }
  SUBCASE("square prism fails at every jaw angle") {
    const VoxelGrid prism = test::box_grid(Vec3(-5, -5, 0), Vec3(5, 5, 1.2), d, 1);
    ChuckModel c = chuck;
    c.grip_radius_max = 10.0;
    c.jaw_axial_length = 1.0;
    for (int deg = 0; deg < 120; deg += 5) {
      const GripReport rep = validate_grip(place_part(prism, GripConfig{0.0, deg * kDeg, false, 0.0}), c);
      CHECK_FALSE(rep.pass);
      for (const JawContact& j : rep.jaws) CHECK(j.angular_coverage < c.min_angular_coverage);
    }
  }
  SUBCASE("reports are spin-equivariant for a 4-fold part") {
    ChuckModel c = chuck;
    c.jaw_count = 4;
    const GridFrame f = test::frame_around(Vec3(-2, -2, 0), Vec3(2, 2, 2), d);
    const VoxelGrid part = test::sample_solid(f, [](const Vec3& p) {
      return std::hypot(p.x(), p.y()) <= 2.0 && std::abs(p.x()) <= 1.8 && std::abs(p.y()) <= 1.8;
    });
    const GripReport a = validate_grip(part, c);
    const GripReport b = validate_grip(place_part(part, GripConfig{0.0, M_PI / 2, false, 0.0}), c);
    CHECK(a.pass == b.pass);
    for (int j = 0; j < 4; ++j) {
      const JawContact& x = a.jaws[j];
      const JawContact& y = b.jaws[(j + 1) % 4];
      CHECK(x.contact_radius == doctest::Approx(y.contact_radius));
      CHECK(x.contact_length == doctest::Approx(y.contact_length));
      CHECK(x.angular_coverage == doctest::Approx(y.angular_coverage));
    }
  }
  SUBCASE("supersets that keep the band still pass") {
    const VoxelGrid cyl = test::cylinder_grid(2.0, 0.0, 3.0, d);
    const VoxelGrid lug = VoxelGrid::from_predicate(cyl.frame(), [&](int i, int j, int k) {
      const Vec3 c = cyl.frame().center(i, j, k);
      return c.z() > 2.0 && c.x() > 0 && c.x() < 2.1 && std::abs(c.y()) < 0.3;
    });
    const VoxelGrid bigger = grid_boolean(cyl, lug, BooleanOp::Union);
    CHECK(validate_grip(cyl, chuck).pass);
    CHECK(validate_grip(bigger, chuck).pass);
  }
  SUBCASE("out of range radius fails") {
    const VoxelGrid thin = test::cylinder_grid(0.5, 0.0, 3.0, d);
    CHECK_FALSE(validate_grip(thin, chuck).pass);
  }
}

TEST_CASE("chuck parameters are checked") {
  ChuckModel c = test_chuck();
  c.grip_radius_min = 6.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = test_chuck();
  c.min_contact_length = 2.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = test_chuck();
  c.jaw_count = 1;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("half-section maps follow the grip") {
  const double d = 0.1;
  const GridFrame f = test::frame_around(Vec3(-1, -1, 0), Vec3(1, 1, 2), d);
  const VoxelGrid part = test::sample_solid(f, [](const Vec3& p) {
    return std::hypot(p.x(), p.y()) <= (p.z() < 0.7 ? 1.0 : 0.6) && p.z() > 0 && p.z() < 2;
  });
  const HalfSection init = tc_implicit(part, Axis::spindle(), d);
  for (const GripConfig& g : {GripConfig{0.5, 0.0, false, 1.0}, GripConfig{0.3, 0.0, true, 1.0},
                              GripConfig{0.0, 0.0, true, 0.95}}) {
    const HalfSection mapped = section_to_fixture(init, g);
    const HalfSection direct = tc_implicit(place_part(part, g), Axis::spindle(), d);
    CHECK(mapped.raster.same_set(direct.raster));
    CHECK(section_to_init(mapped, g).raster.same_set(init.raster));
  }
  CHECK_THROWS_AS(section_to_fixture(init, GripConfig{0.05, 0.0, false, 0.0}), FrameMismatch);
}
