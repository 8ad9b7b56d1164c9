#pragma once

#include "turnkit/geometry.hpp"
#include "turnkit/voxel_grid.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace turnkit {

enum class AxisProvenance { Principal, Sampled, Refined, User };

std::string_view to_string(AxisProvenance p);

struct AxisCandidate {
  Axis axis;
  std::optional<double> gamma;  ///< unset until evaluated
  AxisProvenance provenance = AxisProvenance::Sampled;
};

/// Inertia frame of the occupied cells. Axes pass through the centroid and
/// are ordered by ascending eigenvalue, so for a box the longest edge comes
/// first.
struct PrincipalAxes {
  Vec3 centroid = Vec3::Zero();
  std::array<Axis, 3> axes;
  Vec3 eigenvalues = Vec3::Zero();
  bool degenerate = false;  ///< some pair of eigenvalues equal within 1e-6 relative
  bool isotropic = false;   ///< all three equal

  /// Axis of the one distinct eigenvalue when the other two coincide.
  std::optional<Axis> unique_axis() const;
};

inline constexpr double kEigenTolerance = 1e-6;

/// Throws on an empty grid.
PrincipalAxes principal_axes(const VoxelGrid& part);

/// First `n` lines of the golden-spiral sequence over the upper hemisphere,
/// rotated by a seeded random rotation (seed 0 leaves it unrotated).
std::vector<Vec3> sphere_directions(int n, std::uint64_t seed = 0);

/// Directions times axis-point offsets. The centroid is the first offset;
/// the rest lie on a square lattice in the plane through the centroid normal
/// to the direction, inside the part's projected bounding box. Lines that
/// coincide are emitted once.
std::vector<Axis> sample_axes(const VoxelGrid& part, int n_dirs, int n_offsets,
                              std::uint64_t seed = 0);

/// Sorts by smallest angle to any principal axis (ties: distance of the
/// candidate point from that axis, then input order) and keeps the first k.
std::vector<AxisCandidate> rank_candidates(std::vector<AxisCandidate> cands,
                                           std::span<const Axis> principal, std::size_t k);

/// Fills in gamma for every candidate, in parallel.
void evaluate_candidates(const VoxelGrid& part, std::span<AxisCandidate> cands, double pixel);

struct RefineResult {
  AxisCandidate best;
  int evaluations = 0;
};

/// Nelder-Mead over two direction tilts and two point offsets normal to the
/// seed, maximizing gamma with at most `budget` evaluations. The seed is the
/// first evaluation, so the result is never worse than it.
RefineResult refine_axis(const VoxelGrid& part, const Axis& seed, int budget, double pixel);

struct AxisSearchOptions {
  double pixel = 0.0;
  int n_dirs = 64;
  int n_offsets = 1;
  std::size_t shortlist = 16;
  std::size_t refine_top = 2;
  int refine_budget = 60;
  std::uint64_t seed = 0;
};

/// Principal, sampled and user axes, shortlisted, evaluated, the best few
/// refined; returned by descending gamma.
std::vector<AxisCandidate> search_axes(const VoxelGrid& part, const AxisSearchOptions& options,
                                       std::span<const Axis> user_axes = {});

}  // namespace turnkit
