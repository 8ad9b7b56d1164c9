#pragma once

#include "turnkit/geometry.hpp"
#include "turnkit/mesh.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace turnkit {

/// Uniform cell lattice. `origin` is the min corner of cell (0, 0, 0).
struct GridFrame {
  Vec3 origin = Vec3::Zero();
  double cell = 1.0;
  std::array<int, 3> dims{0, 0, 0};

  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  Vec3 center(int i, int j, int k) const {
    return origin + cell * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
  bool in_range(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  Eigen::AlignedBox3d box() const {
    return {origin, origin + cell * Vec3(dims[0], dims[1], dims[2])};
  }

  /// Same lattice and extent (origin compared to 1e-9 cells).
  bool matches(const GridFrame& other) const;
};

/// Sampled solid: a cell is occupied iff its center is inside the solid.
/// Immutable after construction.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(GridFrame frame, std::vector<std::uint8_t> occupancy);

  static VoxelGrid empty(GridFrame frame);
  /// Fills cells in parallel from a predicate on (i, j, k).
  static VoxelGrid from_predicate(GridFrame frame,
                                  const std::function<bool(int, int, int)>& inside);

  const GridFrame& frame() const { return frame_; }
  double cell() const { return frame_.cell; }
  const std::array<int, 3>& dims() const { return frame_.dims; }

  bool occupied(int i, int j, int k) const {
    return frame_.in_range(i, j, k) && occupancy_[frame_.index(i, j, k)] != 0;
  }
  std::span<const std::uint8_t> occupancy() const { return occupancy_; }

  std::size_t occupied_count() const { return count_; }
  bool is_empty() const { return count_ == 0; }
  /// (#occupied) * cell^3.
  double volume() const;

  /// Nearest-cell classification: the cell containing `p` decides.
  bool contains_nearest(const Vec3& p) const;
  /// Trilinear reconstruction of the occupancy field at `p`, in [0, 1].
  double sample(const Vec3& p) const;
  /// Point membership against the reconstructed solid (sample >= 0.5).
  bool contains(const Vec3& p) const { return sample(p) >= 0.5; }

  /// Centers of all occupied cells, in index order.
  std::vector<Vec3> occupied_centers() const;

 private:
  GridFrame frame_;
  std::vector<std::uint8_t> occupancy_;
  std::size_t count_ = 0;
};

enum class BooleanOp { Union, Intersect, Difference };

/// Cellwise set algebra. Throws FrameMismatch unless both grids share a frame.
VoxelGrid grid_boolean(const VoxelGrid& a, const VoxelGrid& b, BooleanOp op);
/// Cellwise complement within the grid's own box.
VoxelGrid grid_complement(const VoxelGrid& a);

/// Center-sampling voxelization with ray parity along +x. Bounds are the mesh
/// AABB inflated by `padding` cells on every side.
VoxelGrid voxelize(const TriangleMesh& mesh, double cell, int padding = 1);

/// Resamples `grid` under `t`: every output cell center is mapped back by the
/// inverse transform and takes the state of the input cell containing it.
/// The output lattice keeps the cell size and is anchored so that the image
/// of input cell (0,0,0)'s center is a cell center; lattice motions (integer
/// shifts, quarter turns) are therefore exact.
VoxelGrid transform_solid(const VoxelGrid& grid, const RigidTransform& t);
/// Same inverse-mapping resampler into an explicitly chosen frame.
VoxelGrid resample(const VoxelGrid& grid, const RigidTransform& t, const GridFrame& target);

/// Tight index box of occupied cells as (min corner, max corner) in mm.
Eigen::AlignedBox3d occupied_bounds(const VoxelGrid& grid);

/// Legacy VTK STRUCTURED_POINTS, ASCII, one unsigned char per cell.
std::string encode_vtk(const VoxelGrid& grid);
void write_vtk(const VoxelGrid& grid, const std::filesystem::path& path);

}  // namespace turnkit
