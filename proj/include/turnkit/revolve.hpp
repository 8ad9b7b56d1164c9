#pragma once

#include "turnkit/geometry.hpp"
#include "turnkit/raster.hpp"
#include "turnkit/voxel_grid.hpp"

#include <cstdint>
#include <filesystem>

namespace turnkit {

/// Longitudinal half-section of an axisymmetric solid.
///
/// The raster lives on the (z, r) lattice with origin (0, 0): pixel (u, v) is
/// centered at z = (u + 1/2) * pixel along the axis (measured from
/// axis.point) and r = (v + 1/2) * pixel from the axis. Only v >= 0 is
/// populated. The solid it stands for is the revolution of that set.
struct HalfSection {
  Axis axis;
  Raster2D raster;

  double pixel() const { return raster.pixel(); }
};

/// Validating constructor: origin must be (0, 0) and no pixel may have v < 0.
HalfSection make_half_section(const Axis& axis, Raster2D raster);
/// Empty section with the given pixel size.
HalfSection empty_half_section(const Axis& axis, double pixel);

/// (z, r) coordinates of `p` relative to `axis`.
Vec2 to_section_coords(const Axis& axis, const Vec3& p);

/// Turnable closure by orbit point-membership: pixel (z, r) is set iff one of
/// max(8, ceil(2 pi r / pixel)) equally spaced points on its orbit lies in the
/// part. The part is queried through its trilinear reconstruction.
HalfSection tc_implicit(const VoxelGrid& part, const Axis& axis, double pixel);

/// Turnable closure by slicing: the part is cut by `n_sections` planes through
/// the axis (2n half-planes at angles k pi / n), each half-plane is rasterized
/// and the rasters are united.
HalfSection tc_explicit(const VoxelGrid& part, const Axis& axis, int n_sections, double pixel);

/// Plane count whose angular spacing pi / n is at most pixel / r_max.
int explicit_section_count(double r_max, double pixel);
/// Largest distance from `axis` reached by the part's occupied cells (mm).
double max_radius(const VoxelGrid& part, const Axis& axis);

/// Pappus sum with pixel-center radii: sum over pixels of 2 pi r_c pixel^2.
/// Exposed as the exact integer sum(2v + 1) so volumes add without round-off;
/// volume = pi * pixel^3 * moment.
std::int64_t revolve_moment(const Raster2D& half_plane);
double revolve_volume(const HalfSection& section);
double moment_to_volume(std::int64_t moment, double pixel);

/// Full longitudinal plane (z, x): the half-section and its mirror image,
/// pixel v mapping to -1 - v.
Raster2D mirror_to_plane(const HalfSection& section);
/// Revolution of a full-plane set, as a half-section: (z, r) is set iff
/// (z, +r) or (z, -r) is set.
HalfSection fold_to_half(const Raster2D& plane, const Axis& axis);

struct TurnabilityReport {
  Axis axis;
  double gamma = 0.0;      ///< clipped to 1 when the excess is within tolerance
  double gamma_raw = 0.0;  ///< part_volume / tc_volume as computed
  double part_volume = 0.0;
  double tc_volume = 0.0;
  bool within_tolerance = true;  ///< gamma_raw <= 1 + tolerance
};

/// gamma = vol(part) / vol(turnable closure). Throws on an empty part.
TurnabilityReport turnability_ratio(const VoxelGrid& part, const Axis& axis, double pixel,
                                    double tolerance = 0.02);

/// Writes `<stem>.pgm` and the `<stem>.hdr` sidecar (axis, lattice, window).
void write_half_section(const HalfSection& section, const std::filesystem::path& stem);
HalfSection read_half_section(const std::filesystem::path& stem);
std::string encode_section_header(const HalfSection& section);

}  // namespace turnkit
