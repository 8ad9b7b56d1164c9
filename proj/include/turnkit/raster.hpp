#pragma once

#include "turnkit/geometry.hpp"
#include "turnkit/voxel_grid.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace turnkit {

/// Integer pixel coordinate on a raster lattice.
struct Pixel {
  int u = 0;
  int v = 0;

  friend auto operator<=>(const Pixel&, const Pixel&) = default;
  Pixel operator+(Pixel o) const { return {u + o.u, v + o.v}; }
  Pixel operator-(Pixel o) const { return {u - o.u, v - o.v}; }
  Pixel operator-() const { return {-u, -v}; }
};

/// Occupancy over a window of an infinite pixel lattice.
///
/// The lattice is fixed by the pixel size and `origin`, the min corner of
/// lattice pixel (0, 0); pixel (u, v) is centered at origin + (u+1/2, v+1/2)
/// * pixel. A raster stores the window [lo, lo + dims); everything outside
/// the window is empty. For morphology the lattice index doubles as an
/// offset vector, so pixel (0, 0) is the raster's reference origin.
class Raster2D {
 public:
  Raster2D() = default;
  Raster2D(double pixel, Vec2 origin, Pixel lo, std::array<int, 2> dims,
           std::vector<std::uint8_t> bits);

  static Raster2D empty(double pixel, Vec2 origin = Vec2::Zero());
  static Raster2D from_pixels(double pixel, Vec2 origin, std::span<const Pixel> pixels);
  static Raster2D from_predicate(double pixel, Vec2 origin, Pixel lo, std::array<int, 2> dims,
                                 const std::function<bool(Pixel)>& inside);
  /// All pixels whose centers fall in [min, max] (mm).
  static Raster2D rectangle(double pixel, Vec2 origin, const Vec2& min, const Vec2& max);

  double pixel() const { return pixel_; }
  const Vec2& origin() const { return origin_; }
  Pixel lo() const { return lo_; }
  Pixel hi() const { return {lo_.u + dims_[0], lo_.v + dims_[1]}; }
  const std::array<int, 2>& dims() const { return dims_; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  bool test(Pixel p) const {
    const int du = p.u - lo_.u;
    const int dv = p.v - lo_.v;
    if (du < 0 || dv < 0 || du >= dims_[0] || dv >= dims_[1]) return false;
    return bits_[static_cast<std::size_t>(dv) * dims_[0] + du] != 0;
  }
  std::size_t count() const { return count_; }
  bool is_empty() const { return count_ == 0; }

  Vec2 center(Pixel p) const {
    return origin_ + pixel_ * Vec2(p.u + 0.5, p.v + 0.5);
  }
  /// Lattice pixel whose square contains the point.
  Pixel locate(const Vec2& x) const;

  /// Occupied pixels in row-major (v, then u) order.
  std::vector<Pixel> pixels() const;
  /// Occupied bounding window; empty raster gives dims {0, 0}.
  Raster2D trimmed() const;
  /// Same set, stored over the given window (pixels outside it are dropped).
  Raster2D windowed(Pixel lo, std::array<int, 2> dims) const;

  bool same_lattice(const Raster2D& other) const;
  /// Set equality on a shared lattice; window extents are irrelevant.
  bool same_set(const Raster2D& other) const;

 private:
  double pixel_ = 1.0;
  Vec2 origin_ = Vec2::Zero();
  Pixel lo_{};
  std::array<int, 2> dims_{0, 0};
  std::vector<std::uint8_t> bits_;
  std::size_t count_ = 0;
};

/// Set algebra on a shared lattice. Union covers both windows, intersection
/// the overlap, difference keeps a's window. Throws FrameMismatch otherwise.
Raster2D raster_boolean(const Raster2D& a, const Raster2D& b, BooleanOp op);

/// Point reflection through lattice pixel (0, 0): p -> -p.
Raster2D reflect2d(const Raster2D& a);

enum class DilationMethod { Direct, Fft, Auto };

/// Minkowski sum a (+) b: p is set iff p - q is set in a for some q in b.
/// b is read as a set of offset vectors, so only the pixel sizes must agree;
/// the result lives on a's lattice.
Raster2D dilate2d(const Raster2D& a, const Raster2D& b,
                  DilationMethod method = DilationMethod::Auto);
Raster2D dilate2d_direct(const Raster2D& a, const Raster2D& b);
/// Indicator convolution through real FFTs, rounded and thresholded at 1/2.
Raster2D dilate2d_fft(const Raster2D& a, const Raster2D& b);

/// Binary PGM (P5), 0 = empty, 255 = occupied. Columns run along u, rows
/// along v with v increasing upwards (the first row is the highest v).
std::string encode_pgm(const Raster2D& raster);
void write_pgm(const Raster2D& raster, const std::filesystem::path& path);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;  // row-major, first row on top
};
GrayImage parse_pgm(std::string_view bytes);
GrayImage read_pgm(const std::filesystem::path& path);

/// Turns an image into an offset raster: pixels >= 128 are occupied and the
/// image pixel (`origin_col`, `origin_row`) becomes lattice pixel (0, 0).
Raster2D raster_from_image(const GrayImage& image, double pixel, int origin_col, int origin_row);

}  // namespace turnkit
