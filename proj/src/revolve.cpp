#include "turnkit/revolve.hpp"

#include "turnkit/error.hpp"
#include "turnkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace turnkit {
namespace {

struct SectionWindow {
  Pixel lo;
  std::array<int, 2> dims{0, 0};
  // Per-column radial band that can possibly hit the part.
  std::vector<double> r_lo;
  std::vector<double> r_hi;
};

// Window of (z, r) pixels whose orbits can meet the reconstructed part.
SectionWindow section_window(const VoxelGrid& part, const Axis& axis, double pixel) {
  SectionWindow w;
  const std::vector<Vec3> centers = part.occupied_centers();
  if (centers.empty()) return w;
  // Trilinear support reaches one cell (Chebyshev) from an occupied center.
  const double margin = part.cell() * std::sqrt(3.0);
  double zmin = INFINITY, zmax = -INFINITY, rmax = 0;
  std::vector<Vec2> zr(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    zr[i] = to_section_coords(axis, centers[i]);
    zmin = std::min(zmin, zr[i].x());
    zmax = std::max(zmax, zr[i].x());
    rmax = std::max(rmax, zr[i].y());
  }
  const int u0 = static_cast<int>(std::floor((zmin - margin) / pixel));
  const int u1 = static_cast<int>(std::ceil((zmax + margin) / pixel));
  const int v1 = static_cast<int>(std::ceil((rmax + margin) / pixel));
  w.lo = {u0, 0};
  w.dims = {u1 - u0 + 1, v1 + 1};
  w.r_lo.assign(w.dims[0], INFINITY);
  w.r_hi.assign(w.dims[0], -INFINITY);
  const double reach = margin + 0.5 * pixel;
  for (const Vec2& p : zr) {
    const int a = std::max(0, static_cast<int>(std::floor((p.x() - reach) / pixel)) - u0);
    const int b = std::min(w.dims[0] - 1, static_cast<int>(std::ceil((p.x() + reach) / pixel)) - u0);
    for (int c = a; c <= b; ++c) {
      w.r_lo[c] = std::min(w.r_lo[c], p.y() - margin);
      w.r_hi[c] = std::max(w.r_hi[c], p.y() + margin);
    }
  }
  return w;
}

bool maybe_hit(const SectionWindow& w, Pixel p, double pixel) {
  const int c = p.u - w.lo.u;
  const double r = (p.v + 0.5) * pixel;
  return r >= w.r_lo[c] - 0.5 * pixel && r <= w.r_hi[c] + 0.5 * pixel;
}

}  // namespace

HalfSection make_half_section(const Axis& axis, Raster2D raster) {
  if (raster.origin() != Vec2::Zero()) throw Error("half-section raster origin must be (0, 0)");
  for (const Pixel& p : raster.pixels()) {
    if (p.v < 0) throw Error("half-section pixels must have r >= 0");
  }
  if (raster.dims()[1] > 0 && raster.lo().v < 0) {
    raster = raster.windowed({raster.lo().u, 0}, {raster.dims()[0], std::max(0, raster.hi().v)});
  }
  return HalfSection{axis, std::move(raster)};
}

HalfSection empty_half_section(const Axis& axis, double pixel) {
  return HalfSection{axis, Raster2D::empty(pixel)};
}

Vec2 to_section_coords(const Axis& axis, const Vec3& p) {
  const Vec3 d = p - axis.point;
  const double z = d.dot(axis.direction);
  return {z, (d - z * axis.direction).norm()};
}

HalfSection tc_implicit(const VoxelGrid& part, const Axis& axis, double pixel) {
  if (!(pixel > 0)) throw Error("tc_implicit: pixel size must be positive");
  const SectionWindow w = section_window(part, axis, pixel);
  if (w.dims[0] == 0) return empty_half_section(axis, pixel);
  const auto [eu, ev] = orthonormal_basis(axis.direction);
  Raster2D r = Raster2D::from_predicate(pixel, Vec2::Zero(), w.lo, w.dims, [&](Pixel p) {
    if (!maybe_hit(w, p, pixel)) return false;
    const double z = (p.u + 0.5) * pixel;
    const double rad = (p.v + 0.5) * pixel;
    const Vec3 c = axis.point + z * axis.direction;
    const int n = std::max(8, static_cast<int>(std::ceil(2.0 * M_PI * rad / pixel)));
    for (int k = 0; k < n; ++k) {
      const double t = 2.0 * M_PI * k / n;
      if (part.contains(c + rad * (std::cos(t) * eu + std::sin(t) * ev))) return true;
    }
    return false;
  });
  return HalfSection{axis, std::move(r)};
}

HalfSection tc_explicit(const VoxelGrid& part, const Axis& axis, int n_sections, double pixel) {
  if (n_sections < 1) throw Error("tc_explicit: need at least one section plane");
  if (!(pixel > 0)) throw Error("tc_explicit: pixel size must be positive");
  const SectionWindow w = section_window(part, axis, pixel);
  if (w.dims[0] == 0) return empty_half_section(axis, pixel);
  const auto [eu, ev] = orthonormal_basis(axis.direction);
  Raster2D acc = Raster2D::empty(pixel);
  for (int k = 0; k < 2 * n_sections; ++k) {
    const double t = M_PI * k / n_sections;
    const Vec3 radial = std::cos(t) * eu + std::sin(t) * ev;
    const Raster2D slice = Raster2D::from_predicate(pixel, Vec2::Zero(), w.lo, w.dims, [&](Pixel p) {
      if (!maybe_hit(w, p, pixel)) return false;
      return part.contains(axis.point + (p.u + 0.5) * pixel * axis.direction +
                           (p.v + 0.5) * pixel * radial);
    });
    acc = raster_boolean(acc, slice, BooleanOp::Union);
  }
  return HalfSection{axis, std::move(acc)};
}

int explicit_section_count(double r_max, double pixel) {
  return std::max(1, static_cast<int>(std::ceil(M_PI * r_max / pixel)));
}

double max_radius(const VoxelGrid& part, const Axis& axis) {
  double r = 0;
  for (const Vec3& c : part.occupied_centers()) r = std::max(r, to_section_coords(axis, c).y());
  return part.is_empty() ? 0.0 : r + part.cell() * std::sqrt(3.0) / 2;
}

std::int64_t revolve_moment(const Raster2D& half_plane) {
  std::int64_t m = 0;
  for (const Pixel& p : half_plane.pixels()) {
    if (p.v < 0) throw Error("revolve_moment: pixel with r < 0");
    m += 2 * static_cast<std::int64_t>(p.v) + 1;
  }
  return m;
}

double moment_to_volume(std::int64_t moment, double pixel) {
  return M_PI * pixel * pixel * pixel * static_cast<double>(moment);
}

double revolve_volume(const HalfSection& section) {
  return moment_to_volume(revolve_moment(section.raster), section.pixel());
}

Raster2D mirror_to_plane(const HalfSection& section) {
  const Raster2D& r = section.raster;
  if (r.is_empty()) return Raster2D::empty(r.pixel());
  const int top = r.hi().v;  // exclusive
  const Pixel lo{r.lo().u, -top};
  return Raster2D::from_predicate(r.pixel(), Vec2::Zero(), lo, {r.dims()[0], 2 * top}, [&](Pixel p) {
    return r.test(p.v >= 0 ? p : Pixel{p.u, -1 - p.v});
  });
}

HalfSection fold_to_half(const Raster2D& plane, const Axis& axis) {
  if (plane.origin() != Vec2::Zero()) throw FrameMismatch("fold_to_half: plane origin must be (0, 0)");
  if (plane.is_empty()) return empty_half_section(axis, plane.pixel());
  const int top = std::max(plane.hi().v, -plane.lo().v);
  Raster2D r = Raster2D::from_predicate(plane.pixel(), Vec2::Zero(), {plane.lo().u, 0},
                                        {plane.dims()[0], top}, [&](Pixel p) {
                                          return plane.test(p) || plane.test({p.u, -1 - p.v});
                                        });
  return HalfSection{axis, r.trimmed()};
}

TurnabilityReport turnability_ratio(const VoxelGrid& part, const Axis& axis, double pixel,
                                    double tolerance) {
  if (part.is_empty()) throw Error("turnability_ratio: part is empty");
  TurnabilityReport rep;
  rep.axis = axis;
  rep.part_volume = part.volume();
  rep.tc_volume = revolve_volume(tc_implicit(part, axis, pixel));
  rep.gamma_raw = rep.tc_volume > 0 ? rep.part_volume / rep.tc_volume : INFINITY;
  rep.within_tolerance = rep.gamma_raw <= 1.0 + tolerance;
  rep.gamma = rep.within_tolerance ? std::min(rep.gamma_raw, 1.0) : rep.gamma_raw;
  return rep;
}

std::string encode_section_header(const HalfSection& s) {
  std::ostringstream out;
  out.precision(17);
  const auto& r = s.raster;
  out << "turnkit-half-section 1\n"
      << "axis_point " << s.axis.point.x() << ' ' << s.axis.point.y() << ' ' << s.axis.point.z() << '\n'
      << "axis_direction " << s.axis.direction.x() << ' ' << s.axis.direction.y() << ' '
      << s.axis.direction.z() << '\n'
      << "pixel " << r.pixel() << '\n'
      << "origin " << r.origin().x() << ' ' << r.origin().y() << '\n'
      << "lo " << r.lo().u << ' ' << r.lo().v << '\n'
      << "dims " << r.dims()[0] << ' ' << r.dims()[1] << '\n';
  return std::move(out).str();
}

void write_half_section(const HalfSection& section, const std::filesystem::path& stem) {
  write_pgm(section.raster, std::filesystem::path(stem).concat(".pgm"));
  std::ofstream out(std::filesystem::path(stem).concat(".hdr"), std::ios::binary);
  if (!out) throw Error("cannot write section header for '" + stem.string() + "'");
  out << encode_section_header(section);
}

HalfSection read_half_section(const std::filesystem::path& stem) {
  const auto hdr_path = std::filesystem::path(stem).concat(".hdr");
  std::ifstream in(hdr_path);
  if (!in) throw Error("cannot open '" + hdr_path.string() + "'");
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "turnkit-half-section" || version != 1) {
    throw ParseError("section header: unknown format in '" + hdr_path.string() + "'", 0);
  }
  Vec3 p, d;
  double pixel = 0;
  Vec2 origin;
  Pixel lo;
  std::array<int, 2> dims{};
  std::string key;
  while (in >> key) {
    if (key == "axis_point") in >> p.x() >> p.y() >> p.z();
    else if (key == "axis_direction") in >> d.x() >> d.y() >> d.z();
    else if (key == "pixel") in >> pixel;
    else if (key == "origin") in >> origin.x() >> origin.y();
    else if (key == "lo") in >> lo.u >> lo.v;
    else if (key == "dims") in >> dims[0] >> dims[1];
    else throw ParseError("section header: unknown key '" + key + "'", static_cast<std::size_t>(in.tellg()));
  }
  const GrayImage img = read_pgm(std::filesystem::path(stem).concat(".pgm"));
  if (img.width != dims[0] || img.height != dims[1]) {
    throw ParseError("section header dims disagree with the PGM", 0);
  }
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(dims[0]) * dims[1]);
  for (int row = 0; row < dims[1]; ++row)
    for (int col = 0; col < dims[0]; ++col)
      bits[static_cast<std::size_t>(dims[1] - 1 - row) * dims[0] + col] =
          img.values[static_cast<std::size_t>(row) * dims[0] + col] >= 128;
  return make_half_section(Axis::make(p, d), Raster2D(pixel, origin, lo, dims, std::move(bits)));
}

}  // namespace turnkit
