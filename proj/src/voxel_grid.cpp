#include "turnkit/voxel_grid.hpp"

#include "turnkit/error.hpp"
#include "turnkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace turnkit {

bool GridFrame::matches(const GridFrame& other) const {
  return dims == other.dims && std::abs(cell - other.cell) <= 1e-12 * cell &&
         (origin - other.origin).cwiseAbs().maxCoeff() <= 1e-9 * cell;
}

VoxelGrid::VoxelGrid(GridFrame frame, std::vector<std::uint8_t> occupancy)
    : frame_(std::move(frame)), occupancy_(std::move(occupancy)) {
  if (!(frame_.cell > 0)) throw Error("voxel cell size must be positive");
  if (frame_.dims[0] < 0 || frame_.dims[1] < 0 || frame_.dims[2] < 0) {
    throw Error("voxel grid dimensions must be non-negative");
  }
  if (occupancy_.size() != frame_.cell_count()) {
    throw Error("voxel occupancy length does not match grid dimensions");
  }
  for (auto& b : occupancy_) b = b ? 1 : 0;
  count_ = static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), 1));
}

VoxelGrid VoxelGrid::empty(GridFrame frame) {
  std::vector<std::uint8_t> occ(frame.cell_count(), 0);
  return VoxelGrid(std::move(frame), std::move(occ));
}

VoxelGrid VoxelGrid::from_predicate(GridFrame frame,
                                    const std::function<bool(int, int, int)>& inside) {
  std::vector<std::uint8_t> occ(frame.cell_count(), 0);
  const int nx = frame.dims[0], ny = frame.dims[1], nz = frame.dims[2];
  parallel_for(0, static_cast<std::ptrdiff_t>(ny) * nz, [&](std::ptrdiff_t col) {
    const int j = static_cast<int>(col % ny);
    const int k = static_cast<int>(col / ny);
    for (int i = 0; i < nx; ++i) occ[frame.index(i, j, k)] = inside(i, j, k) ? 1 : 0;
  });
  return VoxelGrid(std::move(frame), std::move(occ));
}

double VoxelGrid::volume() const {
  return static_cast<double>(count_) * frame_.cell * frame_.cell * frame_.cell;
}

bool VoxelGrid::contains_nearest(const Vec3& p) const {
  const Vec3 q = (p - frame_.origin) / frame_.cell;
  return occupied(static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
                  static_cast<int>(std::floor(q.z())));
}

double VoxelGrid::sample(const Vec3& p) const {
  const Vec3 q = (p - frame_.origin) / frame_.cell - Vec3::Constant(0.5);
  const int i0 = static_cast<int>(std::floor(q.x()));
  const int j0 = static_cast<int>(std::floor(q.y()));
  const int k0 = static_cast<int>(std::floor(q.z()));
  const double fx = q.x() - i0, fy = q.y() - j0, fz = q.z() - k0;
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
    if (!occupied(i0 + di, j0 + dj, k0 + dk)) continue;
    acc += (di ? fx : 1 - fx) * (dj ? fy : 1 - fy) * (dk ? fz : 1 - fz);
  }
  return acc;
}

std::vector<Vec3> VoxelGrid::occupied_centers() const {
  std::vector<Vec3> out;
  out.reserve(count_);
  for (int k = 0; k < frame_.dims[2]; ++k)
    for (int j = 0; j < frame_.dims[1]; ++j)
      for (int i = 0; i < frame_.dims[0]; ++i)
        if (occupancy_[frame_.index(i, j, k)]) out.push_back(frame_.center(i, j, k));
  return out;
}

VoxelGrid grid_boolean(const VoxelGrid& a, const VoxelGrid& b, BooleanOp op) {
  if (!a.frame().matches(b.frame())) {
    throw FrameMismatch("grid_boolean: operands do not share a frame; resample explicitly");
  }
  const auto x = a.occupancy();
  const auto y = b.occupancy();
  std::vector<std::uint8_t> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    switch (op) {
      case BooleanOp::Union: out[i] = x[i] | y[i]; break;
      case BooleanOp::Intersect: out[i] = x[i] & y[i]; break;
      case BooleanOp::Difference: out[i] = x[i] & !y[i]; break;
    }
  }
  return VoxelGrid(a.frame(), std::move(out));
}

VoxelGrid grid_complement(const VoxelGrid& a) {
  std::vector<std::uint8_t> out(a.occupancy().begin(), a.occupancy().end());
  for (auto& v : out) v = !v;
  return VoxelGrid(a.frame(), std::move(out));
}

namespace {

struct Column {
  double y;
  double z;
};

enum class Hit { Miss, Proper, Degenerate };

// Crossing of the +x ray through (y, z) with a triangle, classified in the
// yz projection with edge functions.
Hit ray_hit(const Vec3& a, const Vec3& b, const Vec3& c, double y, double z, double eps,
            double& x_out) {
  auto edge = [&](const Vec3& p, const Vec3& q) {
    return (q.y() - p.y()) * (z - p.z()) - (q.z() - p.z()) * (y - p.y());
  };
  const double wa = edge(b, c);
  const double wb = edge(c, a);
  const double wc = edge(a, b);
  const double sum = wa + wb + wc;
  const bool all_pos = wa > eps && wb > eps && wc > eps;
  const bool all_neg = wa < -eps && wb < -eps && wc < -eps;
  if (all_pos || all_neg) {
    x_out = (wa * a.x() + wb * b.x() + wc * c.x()) / sum;
    return Hit::Proper;
  }
  const bool any_pos = wa > eps || wb > eps || wc > eps;
  const bool any_neg = wa < -eps || wb < -eps || wc < -eps;
  if (any_pos && any_neg) return Hit::Miss;
  return Hit::Degenerate;
}

}  // namespace

VoxelGrid voxelize(const TriangleMesh& mesh, double cell, int padding) {
  if (!(cell > 0)) throw Error("voxelize: cell size must be positive");
  if (padding < 0) throw Error("voxelize: padding must be non-negative");
  if (mesh.empty()) return VoxelGrid::empty(GridFrame{Vec3::Zero(), cell, {0, 0, 0}});

  const Eigen::AlignedBox3d box = mesh.bounds();
  GridFrame frame;
  frame.cell = cell;
  frame.origin = box.min() - Vec3::Constant(padding * cell);
  for (int a = 0; a < 3; ++a) {
    const double extent = (box.max()[a] - box.min()[a]) / cell;
    frame.dims[a] = std::max(1, static_cast<int>(std::ceil(extent - 1e-9))) + 2 * padding;
  }
  const int nx = frame.dims[0], ny = frame.dims[1], nz = frame.dims[2];

  // Bin triangles by the yz columns their projection can touch.
  std::vector<std::vector<std::uint32_t>> bins(static_cast<std::size_t>(ny) * nz);
  for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) {
    Eigen::AlignedBox3d tb;
    for (auto v : mesh.triangles[t]) tb.extend(mesh.vertices[v]);
    auto lo_idx = [&](double v, int a) {
      return std::max(0, static_cast<int>(std::floor((v - frame.origin[a]) / cell - 0.5 - 1e-6)));
    };
    auto hi_idx = [&](double v, int a, int n) {
      return std::min(n - 1, static_cast<int>(std::ceil((v - frame.origin[a]) / cell - 0.5 + 1e-6)));
    };
    for (int k = lo_idx(tb.min().z(), 2); k <= hi_idx(tb.max().z(), 2, nz); ++k)
      for (int j = lo_idx(tb.min().y(), 1); j <= hi_idx(tb.max().y(), 1, ny); ++j)
        bins[static_cast<std::size_t>(k) * ny + j].push_back(t);
  }

  const double scale = std::max(box.sizes().maxCoeff(), cell);
  const double eps = 1e-13 * scale * scale;
  std::vector<std::uint8_t> occ(frame.cell_count(), 0);
  std::vector<std::optional<Column>> failures(bins.size());

  parallel_for(0, static_cast<std::ptrdiff_t>(bins.size()), [&](std::ptrdiff_t col) {
    const int j = static_cast<int>(col % ny);
    const int k = static_cast<int>(col / ny);
    const auto& tris = bins[col];
    if (tris.empty()) return;
    const double y0 = frame.origin.y() + (j + 0.5) * cell;
    const double z0 = frame.origin.z() + (k + 0.5) * cell;
    std::vector<double> xs;
    bool resolved = false;
    double y = y0, z = z0;
    for (int attempt = 0; attempt < 16 && !resolved; ++attempt) {
      // Deterministic irrational-ratio nudges off edges and vertices.
      y = y0 + attempt * cell * 1.4142135623730951e-6;
      z = z0 + attempt * cell * 1.7320508075688772e-6;
      xs.clear();
      resolved = true;
      for (auto t : tris) {
        const auto& tri = mesh.triangles[t];
        double x = 0;
        const Hit h = ray_hit(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]],
                              y, z, eps, x);
        if (h == Hit::Degenerate) {
          resolved = false;
          break;
        }
        if (h == Hit::Proper) xs.push_back(x);
      }
    }
    if (!resolved || xs.size() % 2 != 0) {
      failures[col] = Column{y, z};
      return;
    }
    std::sort(xs.begin(), xs.end());
    std::size_t crossed = 0;
    for (int i = 0; i < nx; ++i) {
      const double x = frame.origin.x() + (i + 0.5) * cell;
      while (crossed < xs.size() && xs[crossed] < x) ++crossed;
      if (crossed % 2 == 1) occ[frame.index(i, j, k)] = 1;
    }
  });

  for (const auto& f : failures) {
    if (f) {
      std::ostringstream msg;
      msg.precision(10);
      msg << "voxelize: mesh is not watertight; inconsistent parity along the +x ray at y=" << f->y
          << " z=" << f->z;
      throw VoxelizationError(msg.str());
    }
  }
  return VoxelGrid(frame, std::move(occ));
}

VoxelGrid resample(const VoxelGrid& grid, const RigidTransform& t, const GridFrame& target) {
  const RigidTransform inv = t.inverse();
  const GridFrame& src = grid.frame();
  return VoxelGrid::from_predicate(target, [&](int i, int j, int k) {
    const Vec3 q = (inv.apply(target.center(i, j, k)) - src.origin) / src.cell;
    // Inverse-mapped centers of lattice motions land on source centers; the
    // tiny bias keeps floor() stable against round-off.
    return grid.occupied(static_cast<int>(std::floor(q.x() + 1e-9)),
                         static_cast<int>(std::floor(q.y() + 1e-9)),
                         static_cast<int>(std::floor(q.z() + 1e-9)));
  });
}

VoxelGrid transform_solid(const VoxelGrid& grid, const RigidTransform& t) {
  const GridFrame& src = grid.frame();
  if (grid.frame().cell_count() == 0) return grid;
  Eigen::AlignedBox3d image;
  const Eigen::AlignedBox3d box = src.box();
  for (int c = 0; c < 8; ++c) {
    image.extend(t.apply(box.corner(static_cast<Eigen::AlignedBox3d::CornerType>(c))));
  }
  const double h = src.cell;
  const Vec3 anchor = t.apply(src.center(0, 0, 0)) - Vec3::Constant(0.5 * h);
  GridFrame out;
  out.cell = h;
  for (int a = 0; a < 3; ++a) {
    const double lo = std::floor((image.min()[a] - anchor[a]) / h + 1e-9);
    const double hi = std::ceil((image.max()[a] - anchor[a]) / h - 1e-9);
    out.origin[a] = anchor[a] + lo * h;
    out.dims[a] = std::max(0, static_cast<int>(hi - lo));
  }
  return resample(grid, t, out);
}

Eigen::AlignedBox3d occupied_bounds(const VoxelGrid& grid) {
  Eigen::AlignedBox3d box;
  const auto& f = grid.frame();
  for (int k = 0; k < f.dims[2]; ++k)
    for (int j = 0; j < f.dims[1]; ++j)
      for (int i = 0; i < f.dims[0]; ++i)
        if (grid.occupied(i, j, k)) {
          box.extend(f.origin + f.cell * Vec3(i, j, k));
          box.extend(f.origin + f.cell * Vec3(i + 1, j + 1, k + 1));
        }
  return box;
}

std::string encode_vtk(const VoxelGrid& grid) {
  const auto& f = grid.frame();
  std::ostringstream out;
  out.precision(17);
  const Vec3 first = f.origin + Vec3::Constant(0.5 * f.cell);
  out << "# vtk DataFile Version 3.0\nturnkit voxel grid\nASCII\nDATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << f.dims[0] << ' ' << f.dims[1] << ' ' << f.dims[2] << '\n'
      << "ORIGIN " << first.x() << ' ' << first.y() << ' ' << first.z() << '\n'
      << "SPACING " << f.cell << ' ' << f.cell << ' ' << f.cell << '\n'
      << "POINT_DATA " << f.cell_count() << '\n'
      << "SCALARS occupancy unsigned_char 1\nLOOKUP_TABLE default\n";
  const auto occ = grid.occupancy();
  for (std::size_t i = 0; i < occ.size(); ++i) {
    out << static_cast<int>(occ[i]);
    out << ((f.dims[0] > 0 && (i + 1) % f.dims[0] == 0) ? '\n' : ' ');
  }
  return std::move(out).str();
}

void write_vtk(const VoxelGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << encode_vtk(grid);
}

}  // namespace turnkit
