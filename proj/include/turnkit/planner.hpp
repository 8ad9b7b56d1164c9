#pragma once

#include "turnkit/actions.hpp"
#include "turnkit/revolve.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace turnkit {

/// Bar stock: a solid cylinder about the spindle in the aligned frame.
struct StockModel {
  double radius = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
  HalfSection section;
};

/// Smallest pixel-aligned cylinder holding the closure, grown by the
/// allowances (rounded up to whole pixels). Throws on an empty closure.
StockModel infer_stock(const HalfSection& tc, double radial_allowance, double axial_allowance);

/// Stock minus the union of the actions' MTVs (aligned frame). Order-free.
HalfSection as_turned(const StockModel& stock, std::span<const TurnAction> actions);

struct ResidualBox {
  double z_min = 0.0, z_max = 0.0, r_min = 0.0, r_max = 0.0;
};

struct TurnabilityVerdict {
  bool pass = false;
  double residual_volume = 0.0;        ///< revolve_volume(P_dagger - P*)
  std::optional<ResidualBox> residual;  ///< extent of P_dagger - P*, if any
};

/// Residual test. Throws IntegrityError if the closure sticks out of the
/// as-turned shape by more than one pixel (an MTV cut into the target).
TurnabilityVerdict turnability_test(const HalfSection& p_dagger, const HalfSection& tc, double tol);

/// Intermediate workpiece: stock minus the MTVs of the applied actions.
/// Bit i of `applied` refers to actions[i] of the catalog in use.
struct PlanState {
  std::uint64_t applied = 0;
  HalfSection workpiece;
  double cost = 0.0;
};

PlanState initial_state(const StockModel& stock);
/// Applies catalog entry `index`; cost grows by the step cost only.
PlanState apply_action(const PlanState& state, std::span<const TurnAction> actions, std::size_t index);

/// Volume actually turned: revolve_volume(Q ∩ workpiece). Throws if the
/// action is already applied.
double step_removed_volume(const PlanState& state, std::span<const TurnAction> actions,
                           std::size_t index);

struct Plan {
  std::vector<int> action_ids;
  std::vector<std::size_t> action_indices;  ///< positions in the catalog
  std::vector<double> step_volumes;         ///< mm^3
  std::vector<double> step_costs;
  int fixture_changes = 0;
  double setup_cost_total = 0.0;
  double total_cost = 0.0;
  double residual_volume = 0.0;
};

/// Prices an ordered sequence of catalog indices: sum of (c/f) * v_i plus
/// `setup_cost` per adjacent pair on different fixtures. Throws Error if the
/// resulting shape fails the turnability test.
Plan plan_cost(std::span<const std::size_t> order, std::span<const TurnAction> actions,
               const StockModel& stock, const HalfSection& tc, double tol, double setup_cost);

struct SearchOptions {
  double tol = 0.0;         ///< residual volume allowed at a goal (mm^3)
  double setup_cost = 0.0;  ///< charge per fixture change
  std::size_t k = 1;        ///< number of distinct plans wanted
  std::size_t max_expansions = 2'000'000;
};

struct PlanSearchResult {
  std::vector<Plan> plans;                  ///< ascending cost
  std::optional<TurnabilityVerdict> infeasible;  ///< set when no subset reaches the goal
  std::size_t expansions = 0;
  bool truncated = false;  ///< hit max_expansions before finding k plans
};

/// A* over (applied set, fixture sequence). Goals are states whose residual
/// is within tol and are not expanded further. The heuristic is
/// max(0, residual - tol) times the cheapest remaining c/f, which is
/// consistent because every step removes only material outside the closure.
/// Plans are distinct by action set or fixture sequence; orderings that
/// differ by transpositions inside one fixture count once. Equal costs are
/// broken by the lexicographic order of the action ids. Actions that would
/// remove nothing are never expanded.
PlanSearchResult search_plans(std::span<const TurnAction> actions, const StockModel& stock,
                              const HalfSection& tc, const SearchOptions& options);

}  // namespace turnkit
