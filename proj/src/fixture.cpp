#include "turnkit/fixture.hpp"

#include "turnkit/error.hpp"
#include "turnkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace turnkit {
namespace {

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * M_PI);
  return a <= -M_PI ? a + 2.0 * M_PI : a;
}

// Integer n with n * unit == value, or throws.
long lattice_steps(double value, double unit, const char* what) {
  const double q = value / unit;
  const double n = std::round(q);
  if (std::abs(q - n) > 1e-6) {
    throw FrameMismatch(std::string(what) + " is not on the section lattice");
  }
  return static_cast<long>(n);
}

// Per z-layer outer radius statistics of the part in the aligned frame.
struct LayerProfile {
  double outer = 0.0;              // largest center radius
  std::vector<double> sector_max;  // largest radius per angular sector
};

std::map<long, LayerProfile> layer_profiles(const VoxelGrid& part, int sectors) {
  std::map<long, LayerProfile> out;
  const GridFrame& f = part.frame();
  for (int k = 0; k < f.dims[2]; ++k)
    for (int j = 0; j < f.dims[1]; ++j)
      for (int i = 0; i < f.dims[0]; ++i) {
        if (!part.occupied(i, j, k)) continue;
        const Vec3 c = f.center(i, j, k);
        const double r = std::hypot(c.x(), c.y());
        auto& layer = out[k];
        if (layer.sector_max.empty()) layer.sector_max.assign(sectors, 0.0);
        layer.outer = std::max(layer.outer, r);
        const double t = std::atan2(c.y(), c.x()) + M_PI;
        const int s = std::min(sectors - 1, static_cast<int>(t / (2.0 * M_PI) * sectors));
        layer.sector_max[s] = std::max(layer.sector_max[s], r);
      }
  return out;
}

Raster2D relabel(const Raster2D& r, bool flipped, long flip_sum, long shift_before, long shift_after) {
  std::vector<Pixel> px;
  for (Pixel p : r.pixels()) {
    p.u += shift_before;
    if (flipped) p.u = flip_sum - 1 - p.u;
    p.u += shift_after;
    px.push_back(p);
  }
  return Raster2D::from_pixels(r.pixel(), Vec2::Zero(), px);
}

}  // namespace

void ChuckModel::validate() const {
  if (jaw_count < 2) throw Error("chuck: jaw_count must be at least 2");
  if (!(jaw_axial_length > 0)) throw Error("chuck: jaw_axial_length must be positive");
  if (!(grip_radius_min >= 0 && grip_radius_min < grip_radius_max)) {
    throw Error("chuck: grip radius range must satisfy 0 <= r_min < r_max");
  }
  if (min_contact_length > jaw_axial_length) {
    throw Error("chuck: min_contact_length exceeds jaw_axial_length");
  }
  if (!(jaw_angular_width > 0 && jaw_angular_width * jaw_count <= 2.0 * M_PI + 1e-12)) {
    throw Error("chuck: jaw_angular_width must be positive and jaws must not overlap");
  }
  if (min_angular_coverage > jaw_angular_width) {
    throw Error("chuck: min_angular_coverage exceeds jaw_angular_width");
  }
}

VoxelGrid make_chuck_body(double radius, double depth, double cell) {
  const int n = static_cast<int>(std::ceil(radius / cell - 1e-9));
  const int nz = std::max(1, static_cast<int>(std::ceil(depth / cell - 1e-9)));
  GridFrame f{Vec3(-n * cell, -n * cell, -nz * cell), cell, {2 * n, 2 * n, nz}};
  return VoxelGrid::from_predicate(f, [&](int i, int j, int k) {
    const Vec3 c = f.center(i, j, k);
    return std::hypot(c.x(), c.y()) <= radius;
  });
}

RigidTransform GripConfig::flip() const {
  if (!flipped) return RigidTransform::identity();
  return RigidTransform::rotation(Vec3::UnitX(), M_PI, Vec3(0, 0, flip_pivot));
}

RigidTransform GripConfig::transform() const {
  return RigidTransform::translation(Vec3(0, 0, z_offset)) *
         RigidTransform::rotation(Vec3::UnitZ(), phi) * flip();
}

FixtureConfig FixtureConfig::make(const RigidTransform& mu_init, const GripConfig& grip) {
  return FixtureConfig{mu_init, grip, grip.transform() * mu_init};
}

std::pair<VoxelGrid, RigidTransform> align_to_spindle(const VoxelGrid& part, const Axis& axis) {
  const RigidTransform mu = RigidTransform::align(axis.direction.normalized(), Vec3::UnitZ()) *
                            RigidTransform::translation(-axis.point);
  return {transform_solid(part, mu), mu};
}

std::vector<GripConfig> enumerate_grips(const VoxelGrid& part_init, const ChuckModel& chuck,
                                        double z_step, double phi_step) {
  if (!(z_step > 0) || !(phi_step > 0)) throw Error("enumerate_grips: steps must be positive");
  chuck.validate();
  std::vector<GripConfig> out;
  if (part_init.is_empty()) return out;

  const double cell = part_init.cell();
  // Every jaw window contains at least one whole sector.
  const int sectors = std::max(8, static_cast<int>(std::ceil(4.0 * M_PI / chuck.jaw_angular_width)));
  const auto profiles = layer_profiles(part_init, sectors);
  const GridFrame& f = part_init.frame();
  const double z_lo = f.origin.z() + profiles.begin()->first * cell;
  const double z_hi = f.origin.z() + (profiles.rbegin()->first + 1) * cell;
  const double half = z_step / 2.0;
  const double pivot = std::round((z_lo + z_hi) / 2.0 / half) * half;

  std::vector<double> phis{0.0};
  const double gamma = turnability_ratio(part_init, Axis::spindle(), cell).gamma_raw;
  if (gamma < 0.98) {
    const double period = 2.0 * M_PI / chuck.jaw_count;
    for (int i = 1; i * phi_step < period - 1e-12; ++i) phis.push_back(i * phi_step);
  }

  for (bool flipped : {false, true}) {
    // Layer z-extents after the optional flip, before the offset.
    const double a = flipped ? 2 * pivot - z_hi : z_lo;
    const long first = static_cast<long>(std::ceil(-a / z_step - 1e-9));
    for (long n = first; a + n * z_step < chuck.jaw_axial_length - 1e-9; ++n) {
      const double z_off = n * z_step;
      double reach = 0.0, fit = 0.0;
      for (const auto& [k, layer] : profiles) {
        const double zc = f.origin.z() + (k + 0.5) * cell;
        const double z = (flipped ? 2 * pivot - zc : zc) + z_off;
        if (z < 0 || z > chuck.jaw_axial_length) continue;
        reach = std::max(reach, layer.outer);
        fit = std::max(fit, *std::min_element(layer.sector_max.begin(), layer.sector_max.end()));
      }
      if (reach < chuck.grip_radius_min - cell || fit > chuck.grip_radius_max + cell) continue;
      for (double phi : phis) out.push_back(GripConfig{z_off, phi, flipped, pivot});
    }
  }
  return out;
}

VoxelGrid place_part(const VoxelGrid& part_init, const GripConfig& grip) {
  return transform_solid(part_init, grip.transform());
}

std::vector<GripReport> validate_grips(const VoxelGrid& part_init, const ChuckModel& chuck,
                                      std::span<const GripConfig> grips) {
  std::vector<GripReport> out(grips.size());
  parallel_for(0, static_cast<std::ptrdiff_t>(grips.size()), [&](std::ptrdiff_t i) {
    out[i] = validate_grip(place_part(part_init, grips[i]), chuck);
  });
  return out;
}

GripReport validate_grip(const VoxelGrid& part_fix, const ChuckModel& chuck) {
  chuck.validate();
  const GridFrame& f = part_fix.frame();
  const double cell = f.cell;
  const int n_jaws = chuck.jaw_count;
  const double half_width = chuck.jaw_angular_width / 2.0;

  struct Hit {
    int k;
    double r;
    double offset;  // angle from the jaw center
  };
  std::vector<std::vector<Hit>> hits(n_jaws);
  for (int k = 0; k < f.dims[2]; ++k) {
    const double z = f.origin.z() + (k + 0.5) * cell;
    if (z < 0 || z > chuck.jaw_axial_length) continue;
    for (int j = 0; j < f.dims[1]; ++j)
      for (int i = 0; i < f.dims[0]; ++i) {
        if (!part_fix.occupied(i, j, k)) continue;
        const bool boundary = !part_fix.occupied(i - 1, j, k) || !part_fix.occupied(i + 1, j, k) ||
                              !part_fix.occupied(i, j - 1, k) || !part_fix.occupied(i, j + 1, k) ||
                              !part_fix.occupied(i, j, k - 1) || !part_fix.occupied(i, j, k + 1);
        if (!boundary) continue;
        const Vec3 c = f.center(i, j, k);
        const double r = std::hypot(c.x(), c.y());
        const double t = std::atan2(c.y(), c.x());
        for (int jaw = 0; jaw < n_jaws; ++jaw) {
          const double off = wrap_angle(t - 2.0 * M_PI * jaw / n_jaws);
          if (std::abs(off) <= half_width) hits[jaw].push_back({k, r, off});
        }
      }
  }

  GripReport report;
  report.pass = true;
  for (int jaw = 0; jaw < n_jaws; ++jaw) {
    JawContact jc;
    jc.angle = 2.0 * M_PI * jaw / n_jaws;
    const auto& hs = hits[jaw];
    if (!hs.empty()) {
      for (const Hit& h : hs) jc.contact_radius = std::max(jc.contact_radius, h.r);
      const double band = jc.contact_radius - cell;
      const int n_bins = std::max(
          1, static_cast<int>(std::ceil(chuck.jaw_angular_width * jc.contact_radius / cell)));
      std::vector<char> bins(n_bins, 0);
      std::vector<int> layers;
      for (const Hit& h : hs) {
        if (h.r < band) continue;
        layers.push_back(h.k);
        const int b = std::clamp(
            static_cast<int>((h.offset + half_width) / chuck.jaw_angular_width * n_bins), 0, n_bins - 1);
        bins[b] = 1;
      }
      std::sort(layers.begin(), layers.end());
      layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
      jc.contact_length = static_cast<double>(layers.size()) * cell;
      jc.angular_coverage = static_cast<double>(std::count(bins.begin(), bins.end(), 1)) *
                            (chuck.jaw_angular_width / n_bins);
      for (std::size_t i = 0; i < layers.size();) {
        std::size_t e = i;
        while (e + 1 < layers.size() && layers[e + 1] == layers[e] + 1) ++e;
        jc.segments.push_back({f.origin.z() + layers[i] * cell, f.origin.z() + (layers[e] + 1) * cell});
        i = e + 1;
      }
      jc.pass = jc.contact_radius >= chuck.grip_radius_min && jc.contact_radius <= chuck.grip_radius_max &&
                jc.contact_length >= chuck.min_contact_length - 1e-9 &&
                jc.angular_coverage >= chuck.min_angular_coverage - 1e-9;
    }
    report.pass = report.pass && jc.pass;
    report.jaws.push_back(std::move(jc));
  }
  return report;
}

HalfSection section_to_fixture(const HalfSection& init, const GripConfig& grip) {
  const double d = init.pixel();
  const long shift = lattice_steps(grip.z_offset, d, "grip z_offset");
  const long flip_sum = grip.flipped ? lattice_steps(2.0 * grip.flip_pivot, d, "flip pivot") : 0;
  return make_half_section(Axis::spindle(), relabel(init.raster, grip.flipped, flip_sum, 0, shift));
}

HalfSection section_to_init(const HalfSection& fixed, const GripConfig& grip) {
  const double d = fixed.pixel();
  const long shift = lattice_steps(grip.z_offset, d, "grip z_offset");
  const long flip_sum = grip.flipped ? lattice_steps(2.0 * grip.flip_pivot, d, "flip pivot") : 0;
  return make_half_section(Axis::spindle(), relabel(fixed.raster, grip.flipped, flip_sum, -shift, 0));
}

}  // namespace turnkit
