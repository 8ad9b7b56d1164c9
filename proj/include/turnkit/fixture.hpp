#pragma once

#include "turnkit/geometry.hpp"
#include "turnkit/revolve.hpp"
#include "turnkit/voxel_grid.hpp"

#include <span>
#include <utility>
#include <vector>

namespace turnkit {

/// Multi-jaw chuck. Machine frame: spindle along +z, the chuck face at z = 0,
/// the body K behind it (z < 0) and the jaws gripping z in [0, jaw_axial_length].
/// Jaw j is an angular window of `jaw_angular_width` centered on 2 pi j / jaw_count.
struct ChuckModel {
  int jaw_count = 3;
  double jaw_axial_length = 0.0;
  double grip_radius_min = 0.0;
  double grip_radius_max = 0.0;
  double min_contact_length = 0.0;
  double min_angular_coverage = 0.0;  ///< radians per jaw
  double jaw_angular_width = 0.0;     ///< radians
  VoxelGrid body;

  /// Throws Error if the parameters are inconsistent.
  void validate() const;
};

/// Solid disc of `radius` occupying z in [-depth, 0].
VoxelGrid make_chuck_body(double radius, double depth, double cell);

/// Screw motion along and about the spindle, optionally preceded by a flip:
/// a half turn about the x axis through (0, 0, flip_pivot).
struct GripConfig {
  double z_offset = 0.0;
  double phi = 0.0;
  bool flipped = false;
  double flip_pivot = 0.0;

  RigidTransform transform() const;
  /// The flip alone (identity when not flipped).
  RigidTransform flip() const;
};

struct FixtureConfig {
  RigidTransform mu_init;
  GripConfig grip;
  RigidTransform mu_fix;  ///< grip.transform() * mu_init

  static FixtureConfig make(const RigidTransform& mu_init, const GripConfig& grip);
};

/// Moves `axis` onto the machine z axis with its point at the origin.
std::pair<VoxelGrid, RigidTransform> align_to_spindle(const VoxelGrid& part, const Axis& axis);

/// Lattice of z offsets (multiples of z_step), spins (multiples of phi_step
/// below 2 pi / jaw_count) and both flip states for which the part sits on
/// or above the chuck face and overlaps the jaw window somewhere with an
/// outer radius the jaws can reach. A part whose closure about z matches it
/// (gamma within 2% of 1) only gets phi = 0. The flip pivot is the part's
/// axial mid-plane rounded to a multiple of z_step / 2, so flips keep a
/// z_step lattice intact.
std::vector<GripConfig> enumerate_grips(const VoxelGrid& part_init, const ChuckModel& chuck,
                                        double z_step, double phi_step);

struct ContactSegment {
  double z_begin = 0.0;
  double z_end = 0.0;
};

struct JawContact {
  double angle = 0.0;           ///< jaw center (radians)
  double contact_radius = 0.0;  ///< outermost boundary radius in the jaw window
  double contact_length = 0.0;  ///< summed axial extent of the contact band
  double angular_coverage = 0.0;
  std::vector<ContactSegment> segments;
  bool pass = false;
};

struct GripReport {
  bool pass = false;
  std::vector<JawContact> jaws;
};

/// Per-jaw contact test on boundary cells of the positioned part. A jaw
/// touches the outermost boundary radius r_c found in its window; cells with
/// r >= r_c - cell form the contact band. The band's z-layers sum to the
/// contact length (segments need not touch) and its angular bins, one cell of
/// arc wide, sum to the coverage.
GripReport validate_grip(const VoxelGrid& part_fix, const ChuckModel& chuck);

/// Places and validates each grip, in parallel.
std::vector<GripReport> validate_grips(const VoxelGrid& part_init, const ChuckModel& chuck,
                                      std::span<const GripConfig> grips);

/// Positions the aligned part for a grip.
VoxelGrid place_part(const VoxelGrid& part_init, const GripConfig& grip);

/// Half-section maps between the aligned frame and a grip's frame. Both are
/// exact pixel relabelings; they throw FrameMismatch when the grip does not
/// sit on the section lattice (z_offset a multiple of the pixel, flip pivot a
/// multiple of half a pixel).
HalfSection section_to_fixture(const HalfSection& init, const GripConfig& grip);
HalfSection section_to_init(const HalfSection& fixed, const GripConfig& grip);

}  // namespace turnkit
