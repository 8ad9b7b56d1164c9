// Acceptance run: one PASS/FAIL line per criterion. Tolerances are fixed here.

#include "commands.hpp"
#include "examples.hpp"
#include "test_support.hpp"

#include "turnkit/actions.hpp"
#include "turnkit/mesh.hpp"
#include "turnkit/planner.hpp"
#include "turnkit/revolve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>

using namespace turnkit;
namespace fs = std::filesystem;

namespace {

constexpr double kGammaRelTol = 0.02;        // criterion 1
constexpr double kDualityBandFraction = 0.01;  // criterion 2
constexpr int kMorphologyPairs = 200;          // criterion 3
constexpr int kObstacleScenes = 20;            // criterion 4
constexpr int kObstaclePlacements = 500;
constexpr double kCostRelTol = 1e-12;  // criterion 6: equal up to summation order
constexpr double kAnnulusFinalTol = 0.005;  // criterion 8
constexpr double kHalvingRatio = 0.5;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const Axis kZ = Axis::spindle();

// ---------------------------------------------------------------- parts

struct FixturePart {
  std::string name;
  TriangleMesh mesh;
  Axis axis;
  double cell;
};

TriangleMesh annulus_mesh() { return make_revolved({{0, 1}, {1, 1}, {1, 2}, {0, 2}}, 256); }

std::vector<FixturePart> fixture_parts(const fs::path& example_dir) {
  return {
      {"cube", make_box(Vec3(-1, -1, -1), Vec3(1, 1, 1)), kZ, 0.05},
      {"cylinder", make_cylinder(1.0, -1.0, 1.0, 256), kZ, 0.05},
      {"annulus", annulus_mesh(), kZ, 0.05},
      {"sphere", make_sphere(Vec3::Zero(), 1.0, 96, 192), kZ, 0.05},
      {"stepped shaft", load_mesh(example_dir / "stepped_shaft.stl"), kZ, 0.25},
  };
}

// ---------------------------------------------------------------- 1

Verdict criterion_1() {
  const double d = 0.02;
  const VoxelGrid cube = voxelize(make_box(Vec3(-1, -1, -1), Vec3(1, 1, 1)), d);
  const VoxelGrid cyl = voxelize(make_cylinder(1.0, -1.0, 1.0, 512), d);
  const double g_cube = turnability_ratio(cube, kZ, d).gamma_raw;
  const double g_cyl = turnability_ratio(cyl, kZ, d).gamma_raw;
  const double e_cube = std::abs(g_cube - 2 / M_PI) / (2 / M_PI);
  const double e_cyl = std::abs(g_cyl - 1.0);
  return {e_cube <= kGammaRelTol && e_cyl <= kGammaRelTol,
          fmt("cube gamma %.5f vs 2/pi %.5f (rel err %.2f%%), cylinder gamma %.5f (rel err %.2f%%), limit %.0f%%",
              g_cube, 2 / M_PI, 100 * e_cube, g_cyl, 100 * e_cyl, 100 * kGammaRelTol)};
}

// ---------------------------------------------------------------- 2

// Pixel whose 3x3 neighbourhood straddles the boundary of `r`.
bool near_boundary(const Raster2D& r, Pixel p) {
  const bool in = r.test(p);
  for (int du = -1; du <= 1; ++du)
    for (int dv = -1; dv <= 1; ++dv) {
      const Pixel q{p.u + du, p.v + dv};
      if (q.v >= 0 && r.test(q) != in) return true;
    }
  return false;
}

Verdict criterion_2(const std::vector<FixturePart>& parts) {
  bool pass = true;
  std::string detail;
  for (const FixturePart& fp : parts) {
    const VoxelGrid g = voxelize(fp.mesh, fp.cell);
    const double d = fp.cell;
    const HalfSection imp = tc_implicit(g, fp.axis, d);
    const int n = explicit_section_count(max_radius(g, fp.axis), d);
    const HalfSection exp = tc_explicit(g, fp.axis, n, d);
    const Raster2D diff = raster_boolean(raster_boolean(imp.raster, exp.raster, BooleanOp::Difference),
                                         raster_boolean(exp.raster, imp.raster, BooleanOp::Difference), BooleanOp::Union);
    std::size_t off_band = 0;
    for (const Pixel& p : diff.pixels())
      if (!near_boundary(imp.raster, p)) ++off_band;
    const double frac = static_cast<double>(diff.count()) / static_cast<double>(imp.raster.count());
    const bool ok = off_band == 0 && frac <= kDualityBandFraction;
    pass = pass && ok;
    detail += fmt("%s%s: %zu/%zu differ (%.3f%%), %zu off band", detail.empty() ? "" : "; ", fp.name.c_str(),
                  diff.count(), imp.raster.count(), 100 * frac, off_band);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 3

Verdict criterion_3() {
  std::mt19937_64 rng(20240603);
  int mismatches = 0;
  for (int i = 0; i < kMorphologyPairs; ++i) {
    const double density = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    const Raster2D a = test::random_raster(rng, 64, 64, density, 1.0, {-32, -32}, {32, 32});
    const Raster2D b = test::random_raster(rng, 64, 64, density, 1.0, {-32, -32}, {32, 32});
    const Raster2D f = dilate2d_fft(a, b).trimmed();
    const Raster2D s = dilate2d_direct(a, b).trimmed();
    const bool same = f.lo() == s.lo() && f.dims() == s.dims() &&
                      std::equal(f.bits().begin(), f.bits().end(), s.bits().begin(), s.bits().end());
    if (!same) ++mismatches;
  }
  return {mismatches == 0, fmt("%d of %d random pairs up to 64x64 differ", mismatches, kMorphologyPairs)};
}

// ---------------------------------------------------------------- 4

Verdict criterion_4() {
  std::mt19937_64 rng(77);
  const double d = 0.5;
  long mismatches = 0, inside = 0;
  for (int s = 0; s < kObstacleScenes; ++s) {
    const HalfSection scene =
        make_half_section(kZ, test::random_raster(rng, 40, 16, 0.4, d, {-20, 0}, {10, 4}));
    Raster2D insert = test::random_raster(rng, 4, 4, 0.6, d, {-2, -2}, {0, 0});
    if (insert.is_empty()) insert = Raster2D::from_pixels(d, Vec2::Zero(), std::vector<Pixel>{{0, 0}});
    const Raster2D holder = raster_boolean(test::random_raster(rng, 6, 14, 0.5, d, {-3, 0}, {1, 3}), insert,
                                           BooleanOp::Difference);
    const ToolAssembly tool = ToolAssembly::make({"t", insert}, holder, "random");
    const Raster2D obs = c_obstacle(scene, tool);
    const Raster2D plane = mirror_to_plane(scene);
    const std::vector<Pixel> sil = tool.silhouette().pixels();
    const Raster2D box = obs.trimmed();
    std::uniform_int_distribution<int> pu(box.lo().u - 3, box.hi().u + 2), pv(box.lo().v - 3, box.hi().v + 2);
    for (int k = 0; k < kObstaclePlacements; ++k) {
      const Pixel t{pu(rng), pv(rng)};
      bool overlap = false;
      for (const Pixel& p : sil)
        if (plane.test(p + t)) {
          overlap = true;
          break;
        }
      inside += overlap;
      if (overlap != obs.test(t)) ++mismatches;
    }
  }
  return {mismatches == 0, fmt("%ld mismatches over %d scenes x %d placements (%ld colliding)", mismatches,
                               kObstacleScenes, kObstaclePlacements, inside)};
}

// ---------------------------------------------------------------- 5, 7

struct ActionSuite {
  std::string name;
  app::Setup setup;
  ChuckModel chuck;
  std::vector<TurnAction> actions;
};

std::vector<ActionSuite> action_suites(const fs::path& example_dir) {
  std::vector<ActionSuite> out;
  const app::JobConfig base = app::load_config(example_dir / "stepped_shaft.json");
  auto add = [&](const std::string& name, const app::JobConfig& cfg) {
    ActionSuite s{name, app::prepare(cfg), cfg.chuck, {}};
    s.actions = generate_actions(s.setup.tc, s.setup.fixtures, s.setup.tools, cfg.chuck, s.setup.envelope, cfg.pixel);
    out.push_back(std::move(s));
  };
  add("stepped shaft", base);
  // Same job with several grips per flip state and a tailstock zone.
  app::JobConfig more = base;
  more.grips.per_flip = 3;
  more.env_exclusions.push_back({Vec2(36, -3), Vec2(40, 3)});
  add("stepped shaft, 3 grips per side", more);
  // A tube held on its outside.
  const fs::path tube = example_dir / "tube.stl";
  write_stl_binary(make_revolved({{0, 1.5}, {20, 1.5}, {20, 5}, {0, 5}}, 128), tube);
  app::JobConfig t = base;
  t.part_path = tube;
  add("tube", t);
  return out;
}

Verdict criterion_5(const std::vector<ActionSuite>& suites) {
  bool pass = true;
  std::string detail;
  for (const ActionSuite& s : suites) {
    const HalfSection body = tc_implicit(s.chuck.body, kZ, s.setup.tc.pixel());
    long in_band = 0, off_band = 0;
    for (const TurnAction& a : s.actions) {
      const HalfSection scene = chuck_closure(section_to_fixture(s.setup.tc, a.fixture.grip), body);
      const Raster2D hit = raster_boolean(a.mtv.raster, scene.raster, BooleanOp::Intersect);
      for (const Pixel& p : hit.pixels()) (near_boundary(scene.raster, p) ? in_band : off_band)++;
    }
    const Raster2D p_dagger = as_turned(s.setup.stock, s.actions).raster;
    const std::size_t lost = raster_boolean(s.setup.tc.raster, p_dagger, BooleanOp::Difference).count();
    const bool ok = off_band == 0 && lost == 0 && !s.actions.empty();
    pass = pass && ok;
    detail += fmt("%s%s: %zu actions, MTV^P** %ld in band / %ld off band, TC pixels lost %zu",
                  detail.empty() ? "" : "; ", s.name.c_str(), s.actions.size(), in_band, off_band, lost);
  }
  return {pass, detail};
}

Verdict criterion_7(const std::vector<ActionSuite>& suites) {
  std::mt19937_64 rng(7);
  int differing = 0, runs = 0;
  for (const ActionSuite& s : suites) {
    std::vector<TurnAction> acts = s.actions;
    const Raster2D ref = as_turned(s.setup.stock, acts).raster;
    for (int k = 0; k < 10; ++k) {
      std::shuffle(acts.begin(), acts.end(), rng);
      const Raster2D r = as_turned(s.setup.stock, acts).raster;
      ++runs;
      const bool same = r.lo() == ref.lo() && r.dims() == ref.dims() &&
                        std::equal(r.bits().begin(), r.bits().end(), ref.bits().begin(), ref.bits().end());
      if (!same) ++differing;
    }
  }
  return {differing == 0, fmt("%d of %d shuffled orders differ from the reference", differing, runs)};
}

// ---------------------------------------------------------------- 6

TurnAction make_action(int id, Raster2D q, double c, double f, int fixture) {
  TurnAction a;
  a.id = id;
  a.fixture_index = fixture;
  a.mtv = make_half_section(kZ, q);
  a.mtv_init = a.mtv;
  a.cost_per_second = c;
  a.removal_rate = f;
  return a;
}

double pappus(const Raster2D& r) {
  double v = 0;
  for (const Pixel& p : r.pixels()) v += 2 * M_PI * (p.v + 0.5) * r.pixel() * r.pixel() * r.pixel();
  return v;
}

// Cheapest feasible sequence over every subset and every ordering.
std::optional<double> exhaustive(const StockModel& stock, const HalfSection& tc, const std::vector<TurnAction>& acts,
                                 double tol, double setup) {
  std::optional<double> best;
  const std::size_t n = acts.size();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) order.push_back(i);
    do {
      Raster2D wp = stock.section.raster;
      double cost = 0;
      for (std::size_t k = 0; k < order.size(); ++k) {
        const TurnAction& a = acts[order[k]];
        cost += a.cost_per_second / a.removal_rate * pappus(raster_boolean(a.mtv_init.raster, wp, BooleanOp::Intersect));
        if (k > 0 && acts[order[k - 1]].fixture_index != a.fixture_index) cost += setup;
        wp = raster_boolean(wp, a.mtv_init.raster, BooleanOp::Difference);
      }
      if (pappus(raster_boolean(wp, tc.raster, BooleanOp::Difference)) <= tol && (!best || cost < *best)) best = cost;
    } while (std::next_permutation(order.begin(), order.end()));
  }
  return best;
}

Raster2D block(double d, int u0, int u1, int v0, int v1) {
  return Raster2D::rectangle(d, Vec2::Zero(), Vec2((u0 + 0.5) * d, (v0 + 0.5) * d), Vec2((u1 - 0.5) * d, (v1 - 0.5) * d));
}

Verdict criterion_6() {
  // Worked example: unit moment is 1 mm^3, nested MTVs of 10 and 30 mm^3.
  const double d0 = std::cbrt(1.0 / M_PI);
  StockModel s0;
  s0.section = make_half_section(kZ, block(d0, 0, 30, 0, 2));
  const HalfSection tc0 = make_half_section(kZ, block(d0, 0, 30, 1, 2));
  const std::vector<TurnAction> worked = {make_action(1, block(d0, 0, 10, 0, 1), 1, 1, 0),
                                          make_action(2, block(d0, 0, 30, 0, 1), 2, 1, 0)};
  const PlanSearchResult w = search_plans(worked, s0, tc0, SearchOptions{0.0, 0.0, 1});
  const bool worked_ok = !w.plans.empty() && std::abs(w.plans[0].total_cost - 50) <= 1e-9 &&
                         w.plans[0].action_ids == std::vector<int>{1, 2};

  std::mt19937_64 rng(31337);
  const double d = 0.5;
  int instances = 0, feasible = 0, wrong = 0;
  double worst = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 5;
    StockModel stock;
    stock.section = make_half_section(kZ, block(d, 0, 24, 0, 8));
    std::vector<Pixel> tcp;
    std::uniform_int_distribution<int> height(0, 6), zu(0, 23), rate(1, 5), fix(0, 2);
    int h = height(rng);
    for (int u = 0; u < 24; ++u) {
      if (u % 4 == 0) h = height(rng);
      for (int v = 0; v < h; ++v) tcp.push_back({u, v});
    }
    const HalfSection tc = make_half_section(kZ, Raster2D::from_pixels(d, Vec2::Zero(), tcp));
    const Raster2D outside = raster_boolean(stock.section.raster, tc.raster, BooleanOp::Difference);
    std::vector<TurnAction> acts;
    for (int i = 0; i < n; ++i) {
      int a = zu(rng), b = zu(rng);
      if (a > b) std::swap(a, b);
      const int v0 = std::uniform_int_distribution<int>(0, 7)(rng);
      const Raster2D q = raster_boolean(block(d, a, b + 1, v0, 8), outside, BooleanOp::Intersect);
      acts.push_back(make_action(i + 1, q.is_empty() ? outside : q, rate(rng), rate(rng), fix(rng)));
    }
    if (trial % 3 == 0) acts.back().mtv_init = acts.back().mtv = make_half_section(kZ, outside);
    const double tol = trial % 4 == 0 ? 4.0 : 0.0;
    const double setup = (trial % 2) * 6.0;
    const auto oracle = exhaustive(stock, tc, acts, tol, setup);
    const PlanSearchResult r = search_plans(acts, stock, tc, SearchOptions{tol, setup, 1});
    ++instances;
    if (!oracle) {
      if (!r.plans.empty()) ++wrong;
      continue;
    }
    ++feasible;
    if (r.plans.empty()) {
      ++wrong;
      continue;
    }
    const double rel = std::abs(r.plans[0].total_cost - *oracle) / std::max(1.0, std::abs(*oracle));
    worst = std::max(worst, rel);
    if (rel > kCostRelTol) ++wrong;
  }
  return {worked_ok && wrong == 0,
          fmt("worked example cost %.6g order [%s]; %d instances (n<=5, %d feasible), %d disagree, worst rel diff %.1e",
              w.plans.empty() ? NAN : w.plans[0].total_cost,
              w.plans.empty() ? "" : (std::to_string(w.plans[0].action_ids[0]) + "," + std::to_string(w.plans[0].action_ids[1])).c_str(),
              instances, feasible, wrong, worst)};
}

// ---------------------------------------------------------------- 8

Verdict criterion_8() {
  const double exact = 3 * M_PI;
  const TriangleMesh mesh = annulus_mesh();
  std::vector<double> errs;
  std::string detail;
  for (double d : {0.08, 0.04, 0.02, 0.01}) {
    const VoxelGrid g = voxelize(mesh, d);
    const double v = revolve_volume(tc_implicit(g, kZ, d));
    errs.push_back(std::abs(v - exact) / exact);
    detail += fmt("%sd=%.2f err %.3f%%", detail.empty() ? "" : ", ", d, 100 * errs.back());
  }
  bool halving = true;
  for (std::size_t i = 1; i < errs.size(); ++i) halving = halving && errs[i] <= kHalvingRatio * errs[i - 1] + 1e-12;
  const bool final_ok = errs.back() <= kAnnulusFinalTol;
  detail += halving ? "; error at least halves each step" : "; error does not halve every step";
  return {halving && final_ok, detail};
}

// ---------------------------------------------------------------- 9

Verdict criterion_9(const fs::path& example_dir) {
  const fs::path a = example_dir / "det_a", b = example_dir / "det_b";
  std::ostringstream sink;
  const std::string cfg = (example_dir / "stepped_shaft.json").string();
  const int ca = app::run({"plan", "--config", cfg, "--out", a.string()}, sink, sink);
  const int cb = app::run({"plan", "--config", cfg, "--out", b.string()}, sink, sink);
  std::map<std::string, std::string> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa[fs::relative(e.path(), a).string()] = test::read_bytes(e.path());
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb[fs::relative(e.path(), b).string()] = test::read_bytes(e.path());
  std::size_t pgm = 0;
  for (const auto& [name, _] : fa) pgm += name.ends_with(".pgm");
  const bool has_json = std::any_of(fa.begin(), fa.end(), [](const auto& kv) { return kv.first.ends_with("plan.json"); });
  return {ca == 0 && cb == 0 && has_json && pgm > 0 && fa == fb,
          fmt("exit codes %d/%d, %zu files (%zu PGM), %s", ca, cb, fa.size(), pgm,
              fa == fb ? "byte-identical" : "outputs differ")};
}

}  // namespace

int main() {
  const fs::path dir = test::scratch_dir("acceptance");
  app::write_example_job(dir);
  const auto parts = fixture_parts(dir);

  std::vector<std::pair<int, std::function<Verdict()>>> criteria;
  std::vector<ActionSuite> suites;
  criteria.push_back({1, [] { return criterion_1(); }});
  criteria.push_back({2, [&] { return criterion_2(parts); }});
  criteria.push_back({3, [] { return criterion_3(); }});
  criteria.push_back({4, [] { return criterion_4(); }});
  criteria.push_back({5, [&] {
                        suites = action_suites(dir);
                        return criterion_5(suites);
                      }});
  criteria.push_back({6, [] { return criterion_6(); }});
  criteria.push_back({7, [&] { return criterion_7(suites); }});
  criteria.push_back({8, [] { return criterion_8(); }});
  criteria.push_back({9, [&] { return criterion_9(dir); }});

  int failed = 0;
  for (const auto& [n, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s  %s  [%.1fs]\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
