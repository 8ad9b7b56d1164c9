#include "turnkit/planner.hpp"

#include "turnkit/error.hpp"
#include "turnkit/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <queue>
#include <set>

namespace turnkit {
namespace {

void require_lattice(const Raster2D& a, const Raster2D& b, const char* what) {
  if (!a.same_lattice(b)) throw FrameMismatch(std::string(what) + ": sections use different lattices");
}

// Bit rows over a fixed (z, r) window; row v carries Pappus weight 2v + 1.
class SectionMask {
 public:
  SectionMask() = default;
  SectionMask(Pixel lo, std::array<int, 2> dims)
      : lo_(lo), dims_(dims), stride_((dims[0] + 63) / 64),
        words_(static_cast<std::size_t>(stride_) * dims[1], 0) {}

  static SectionMask from(const Raster2D& r, Pixel lo, std::array<int, 2> dims) {
    SectionMask m(lo, dims);
    for (const Pixel& p : r.pixels()) {
      const int x = p.u - lo.u, y = p.v - lo.v;
      if (x < 0 || y < 0 || x >= dims[0] || y >= dims[1]) continue;
      m.words_[static_cast<std::size_t>(y) * m.stride_ + x / 64] |= std::uint64_t{1} << (x % 64);
    }
    return m;
  }

  SectionMask& operator|=(const SectionMask& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }

  // Moment of (this & ~minus & ~minus2).
  std::int64_t moment_without(const SectionMask& minus, const SectionMask* minus2 = nullptr) const {
    std::int64_t total = 0;
    for (int y = 0; y < dims_[1]; ++y) {
      std::int64_t n = 0;
      for (int w = 0; w < stride_; ++w) {
        const std::size_t i = static_cast<std::size_t>(y) * stride_ + w;
        std::uint64_t bits = words_[i] & ~minus.words_[i];
        if (minus2) bits &= ~minus2->words_[i];
        n += std::popcount(bits);
      }
      total += n * (2 * static_cast<std::int64_t>(lo_.v + y) + 1);
    }
    return total;
  }

  // Moment of (this & keep & ~minus).
  std::int64_t moment_within(const SectionMask& keep, const SectionMask& minus) const {
    std::int64_t total = 0;
    for (int y = 0; y < dims_[1]; ++y) {
      std::int64_t n = 0;
      for (int w = 0; w < stride_; ++w) {
        const std::size_t i = static_cast<std::size_t>(y) * stride_ + w;
        n += std::popcount(words_[i] & keep.words_[i] & ~minus.words_[i]);
      }
      total += n * (2 * static_cast<std::int64_t>(lo_.v + y) + 1);
    }
    return total;
  }

 private:
  Pixel lo_{};
  std::array<int, 2> dims_{0, 0};
  int stride_ = 0;
  std::vector<std::uint64_t> words_;
};

// Precomputed masks over the stock window.
struct PlanningSpace {
  double pixel;
  SectionMask stock, tc, outside, none;  // outside = stock minus closure
  std::vector<SectionMask> mtv;
  std::vector<double> rate;  // c / f
  std::vector<int> fixture;

  PlanningSpace(std::span<const TurnAction> actions, const StockModel& stock_model, const HalfSection& tc_section)
      : pixel(stock_model.section.pixel()) {
    const Raster2D& s = stock_model.section.raster;
    require_lattice(s, tc_section.raster, "planner");
    stock = SectionMask::from(s, s.lo(), s.dims());
    tc = SectionMask::from(tc_section.raster, s.lo(), s.dims());
    outside = SectionMask::from(raster_boolean(s, tc_section.raster, BooleanOp::Difference), s.lo(), s.dims());
    none = SectionMask(s.lo(), s.dims());
    for (const TurnAction& a : actions) {
      require_lattice(s, a.mtv_init.raster, "planner");
      mtv.push_back(SectionMask::from(a.mtv_init.raster, s.lo(), s.dims()));
      rate.push_back(a.cost_per_volume());
      fixture.push_back(a.fixture_index);
    }
  }

  SectionMask removed(std::uint64_t applied) const {
    SectionMask m = none;
    for (std::size_t i = 0; i < mtv.size(); ++i)
      if (applied >> i & 1) m |= mtv[i];
    return m;
  }
  // Residual moment of the workpiece outside the closure.
  std::int64_t residual(const SectionMask& removed_union) const {
    return stock.moment_without(removed_union, &tc);
  }
  // Moment turned by action i on the workpiece stock - removed.
  std::int64_t gain(std::size_t i, const SectionMask& removed_union) const {
    return mtv[i].moment_within(stock, removed_union);
  }
  // Part of that gain lying outside the closure.
  std::int64_t residual_drop(std::size_t i, const SectionMask& removed_union) const {
    return mtv[i].moment_within(outside, removed_union);
  }
};

std::optional<ResidualBox> residual_box(const Raster2D& residual) {
  if (residual.is_empty()) return std::nullopt;
  const Raster2D t = residual.trimmed();
  const double d = t.pixel();
  return ResidualBox{t.lo().u * d, t.hi().u * d, t.lo().v * d, t.hi().v * d};
}

}  // namespace

StockModel infer_stock(const HalfSection& tc, double radial_allowance, double axial_allowance) {
  if (radial_allowance < 0 || axial_allowance < 0) throw Error("infer_stock: allowances must be non-negative");
  if (tc.raster.is_empty()) throw Error("infer_stock: turnable closure is empty");
  const Raster2D t = tc.raster.trimmed();
  const double d = t.pixel();
  const int grow_r = static_cast<int>(std::ceil(radial_allowance / d - 1e-9));
  const int grow_z = static_cast<int>(std::ceil(axial_allowance / d - 1e-9));
  const Pixel lo{t.lo().u - grow_z, 0};
  const std::array<int, 2> dims{t.dims()[0] + 2 * grow_z, t.hi().v + grow_r};
  StockModel s;
  s.radius = dims[1] * d;
  s.z_min = lo.u * d;
  s.z_max = (lo.u + dims[0]) * d;
  s.section = make_half_section(
      tc.axis, Raster2D(d, Vec2::Zero(), lo, dims,
                        std::vector<std::uint8_t>(static_cast<std::size_t>(dims[0]) * dims[1], 1)));
  return s;
}

HalfSection as_turned(const StockModel& stock, std::span<const TurnAction> actions) {
  Raster2D removed = Raster2D::empty(stock.section.pixel());
  for (const TurnAction& a : actions) {
    require_lattice(stock.section.raster, a.mtv_init.raster, "as_turned");
    removed = raster_boolean(removed, a.mtv_init.raster, BooleanOp::Union);
  }
  return make_half_section(stock.section.axis,
                           raster_boolean(stock.section.raster, removed, BooleanOp::Difference));
}

TurnabilityVerdict turnability_test(const HalfSection& p_dagger, const HalfSection& tc, double tol) {
  require_lattice(p_dagger.raster, tc.raster, "turnability_test");
  // Closure pixels missing from the as-turned shape must all lie on the
  // closure's one-pixel boundary band.
  const Raster2D missing = raster_boolean(tc.raster, p_dagger.raster, BooleanOp::Difference);
  for (const Pixel& p : missing.pixels()) {
    bool interior = true;
    for (int du = -1; du <= 1 && interior; ++du)
      for (int dv = -1; dv <= 1 && interior; ++dv) {
        const Pixel q{p.u + du, p.v + dv};
        if (q.v >= 0 && !tc.raster.test(q)) interior = false;
      }
    if (interior) {
      throw IntegrityError("as-turned shape cuts into the turnable closure at pixel (" + std::to_string(p.u) +
                           ", " + std::to_string(p.v) + ")");
    }
  }
  const Raster2D residual = raster_boolean(p_dagger.raster, tc.raster, BooleanOp::Difference);
  TurnabilityVerdict v;
  v.residual_volume = moment_to_volume(revolve_moment(residual), residual.pixel());
  v.pass = v.residual_volume <= tol;
  v.residual = residual_box(residual);
  return v;
}

PlanState initial_state(const StockModel& stock) { return PlanState{0, stock.section, 0.0}; }

double step_removed_volume(const PlanState& state, std::span<const TurnAction> actions, std::size_t index) {
  if (index >= actions.size()) throw Error("step_removed_volume: no such action");
  if (state.applied >> index & 1) {
    throw Error("step_removed_volume: action " + std::to_string(actions[index].id) + " already applied");
  }
  const Raster2D cut =
      raster_boolean(actions[index].mtv_init.raster, state.workpiece.raster, BooleanOp::Intersect);
  return moment_to_volume(revolve_moment(cut), cut.pixel());
}

PlanState apply_action(const PlanState& state, std::span<const TurnAction> actions, std::size_t index) {
  if (index >= 64) throw Error("planner supports at most 64 actions");
  const double v = step_removed_volume(state, actions, index);
  PlanState next;
  next.applied = state.applied | (std::uint64_t{1} << index);
  next.workpiece = make_half_section(
      state.workpiece.axis,
      raster_boolean(state.workpiece.raster, actions[index].mtv_init.raster, BooleanOp::Difference));
  next.cost = state.cost + actions[index].cost_per_volume() * v;
  return next;
}

Plan plan_cost(std::span<const std::size_t> order, std::span<const TurnAction> actions, const StockModel& stock,
               const HalfSection& tc, double tol, double setup_cost) {
  Plan plan;
  PlanState state = initial_state(stock);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    const double v = step_removed_volume(state, actions, i);
    plan.action_ids.push_back(actions[i].id);
    plan.action_indices.push_back(i);
    plan.step_volumes.push_back(v);
    plan.step_costs.push_back(actions[i].cost_per_volume() * v);
    if (k > 0 && actions[order[k - 1]].fixture_index != actions[i].fixture_index) ++plan.fixture_changes;
    state = apply_action(state, actions, i);
  }
  const TurnabilityVerdict verdict = turnability_test(state.workpiece, tc, tol);
  if (!verdict.pass) {
    throw Error("plan leaves " + std::to_string(verdict.residual_volume) + " mm^3 outside the closure (tol " +
                std::to_string(tol) + ")");
  }
  plan.setup_cost_total = setup_cost * plan.fixture_changes;
  plan.total_cost = plan.setup_cost_total;
  for (double c : plan.step_costs) plan.total_cost += c;
  plan.residual_volume = verdict.residual_volume;
  return plan;
}

PlanSearchResult search_plans(std::span<const TurnAction> actions, const StockModel& stock, const HalfSection& tc,
                              const SearchOptions& options) {
  if (actions.size() > 64) throw Error("search_plans: at most 64 actions are supported");
  if (options.k < 1) throw Error("search_plans: k must be at least 1");
  for (const TurnAction& a : actions) {
    if (!(a.cost_per_second > 0) || !(a.removal_rate > 0)) {
      throw Error("search_plans: action " + std::to_string(a.id) + " has non-positive c or f");
    }
  }
  PlanSearchResult result;
  {
    const TurnabilityVerdict full = turnability_test(as_turned(stock, actions), tc, options.tol);
    if (!full.pass) {
      result.infeasible = full;
      return result;
    }
  }

  const PlanningSpace space(actions, stock, tc);
  const double d = space.pixel;
  const double unit = moment_to_volume(1, d);  // mm^3 per unit moment
  const std::int64_t stock_moment = space.stock.moment_without(space.none);
  const double max_rate = space.rate.empty() ? 1.0 : *std::max_element(space.rate.begin(), space.rate.end());

  // Costs are compared on an integer grid fine enough to only merge values
  // that differ by round-off; that keeps the queue order a strict weak order.
  const double quantum =
      1e-12 * std::max(1.0, max_rate * unit * static_cast<double>(stock_moment) + options.setup_cost * 64);
  auto key = [&](double x) { return static_cast<std::int64_t>(std::llround(x / quantum)); };

  struct Node {
    std::uint64_t applied = 0;
    std::vector<int> fixtures;  // fixture sequence without repeats
    std::vector<std::size_t> order;
    std::vector<int> ids;
    double g = 0.0;
    std::int64_t f_key = 0;
  };
  auto heuristic = [&](std::uint64_t applied, std::int64_t residual) {
    const double excess = std::max(0.0, residual * unit - options.tol);
    if (excess <= 0) return 0.0;
    double m = INFINITY;
    for (std::size_t i = 0; i < actions.size(); ++i)
      if (!(applied >> i & 1)) m = std::min(m, space.rate[i]);
    return std::isfinite(m) ? excess * m : 0.0;
  };
  auto worse = [](const Node& a, const Node& b) {
    if (a.f_key != b.f_key) return a.f_key > b.f_key;
    return a.ids > b.ids;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
  std::set<std::pair<std::uint64_t, std::vector<int>>> closed;

  {
    Node start;
    start.f_key = key(heuristic(0, space.residual(space.none)));
    open.push(std::move(start));
  }
  while (!open.empty() && result.plans.size() < options.k) {
    Node node = open.top();
    open.pop();
    if (!closed.emplace(node.applied, node.fixtures).second) continue;
    if (++result.expansions > options.max_expansions) {
      result.truncated = true;
      break;
    }
    const SectionMask removed = space.removed(node.applied);
    const std::int64_t residual = space.residual(removed);
    if (residual * unit <= options.tol) {
      result.plans.push_back(plan_cost(node.order, actions, stock, tc, options.tol, options.setup_cost));
      continue;
    }
    std::vector<std::int64_t> gains(actions.size(), 0), drops(actions.size(), 0);
    parallel_for(0, static_cast<std::ptrdiff_t>(actions.size()), [&](std::ptrdiff_t i) {
      if (node.applied >> i & 1) return;
      gains[i] = space.gain(static_cast<std::size_t>(i), removed);
      drops[i] = space.residual_drop(static_cast<std::size_t>(i), removed);
    });
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (gains[i] == 0) continue;
      Node next;
      next.applied = node.applied | (std::uint64_t{1} << i);
      next.fixtures = node.fixtures;
      const bool change = !node.fixtures.empty() && node.fixtures.back() != space.fixture[i];
      if (node.fixtures.empty() || change) next.fixtures.push_back(space.fixture[i]);
      if (closed.count({next.applied, next.fixtures})) continue;
      next.order = node.order;
      next.order.push_back(i);
      next.ids = node.ids;
      next.ids.push_back(actions[i].id);
      next.g = node.g + space.rate[i] * gains[i] * unit + (change ? options.setup_cost : 0.0);
      next.f_key = key(next.g + heuristic(next.applied, residual - drops[i]));
      open.push(std::move(next));
    }
  }
  return result;
}

}  // namespace turnkit
