#include "turnkit/raster.hpp"

#include "turnkit/error.hpp"
#include "turnkit/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace turnkit {

Raster2D::Raster2D(double pixel, Vec2 origin, Pixel lo, std::array<int, 2> dims,
                   std::vector<std::uint8_t> bits)
    : pixel_(pixel), origin_(std::move(origin)), lo_(lo), dims_(dims), bits_(std::move(bits)) {
  if (!(pixel_ > 0)) throw Error("raster pixel size must be positive");
  if (dims_[0] < 0 || dims_[1] < 0) throw Error("raster dimensions must be non-negative");
  if (bits_.size() != static_cast<std::size_t>(dims_[0]) * dims_[1]) {
    throw Error("raster bit count does not match dimensions");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
  count_ = static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

Raster2D Raster2D::empty(double pixel, Vec2 origin) {
  return Raster2D(pixel, std::move(origin), Pixel{}, {0, 0}, {});
}

Raster2D Raster2D::from_pixels(double pixel, Vec2 origin, std::span<const Pixel> pixels) {
  if (pixels.empty()) return empty(pixel, std::move(origin));
  Pixel lo = pixels.front(), hi = pixels.front();
  for (const auto& p : pixels) {
    lo = {std::min(lo.u, p.u), std::min(lo.v, p.v)};
    hi = {std::max(hi.u, p.u), std::max(hi.v, p.v)};
  }
  const std::array<int, 2> dims{hi.u - lo.u + 1, hi.v - lo.v + 1};
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(dims[0]) * dims[1], 0);
  for (const auto& p : pixels) bits[static_cast<std::size_t>(p.v - lo.v) * dims[0] + (p.u - lo.u)] = 1;
  return Raster2D(pixel, std::move(origin), lo, dims, std::move(bits));
}

Raster2D Raster2D::from_predicate(double pixel, Vec2 origin, Pixel lo, std::array<int, 2> dims,
                                  const std::function<bool(Pixel)>& inside) {
  dims = {std::max(0, dims[0]), std::max(0, dims[1])};
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(dims[0]) * dims[1], 0);
  parallel_for(0, dims[1], [&](std::ptrdiff_t dv) {
    for (int du = 0; du < dims[0]; ++du) {
      bits[static_cast<std::size_t>(dv) * dims[0] + du] =
          inside({lo.u + du, lo.v + static_cast<int>(dv)}) ? 1 : 0;
    }
  });
  return Raster2D(pixel, std::move(origin), lo, dims, std::move(bits));
}

Raster2D Raster2D::rectangle(double pixel, Vec2 origin, const Vec2& min, const Vec2& max) {
  // Pixel u is inside iff min <= origin + (u + 1/2) pixel <= max.
  auto first = [&](double bound, double o) {
    return static_cast<int>(std::ceil((bound - o) / pixel - 0.5 - 1e-9));
  };
  auto last = [&](double bound, double o) {
    return static_cast<int>(std::floor((bound - o) / pixel - 0.5 + 1e-9));
  };
  const Pixel lo{first(min.x(), origin.x()), first(min.y(), origin.y())};
  const Pixel hi{last(max.x(), origin.x()), last(max.y(), origin.y())};
  const std::array<int, 2> dims{std::max(0, hi.u - lo.u + 1), std::max(0, hi.v - lo.v + 1)};
  return Raster2D(pixel, origin, lo, dims,
                  std::vector<std::uint8_t>(static_cast<std::size_t>(dims[0]) * dims[1], 1));
}

Pixel Raster2D::locate(const Vec2& x) const {
  const Vec2 q = (x - origin_) / pixel_;
  return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y()))};
}

std::vector<Pixel> Raster2D::pixels() const {
  std::vector<Pixel> out;
  out.reserve(count_);
  for (int dv = 0; dv < dims_[1]; ++dv)
    for (int du = 0; du < dims_[0]; ++du)
      if (bits_[static_cast<std::size_t>(dv) * dims_[0] + du]) out.push_back({lo_.u + du, lo_.v + dv});
  return out;
}

Raster2D Raster2D::trimmed() const {
  if (count_ == 0) return empty(pixel_, origin_);
  int umin = dims_[0], umax = -1, vmin = dims_[1], vmax = -1;
  for (int dv = 0; dv < dims_[1]; ++dv)
    for (int du = 0; du < dims_[0]; ++du)
      if (bits_[static_cast<std::size_t>(dv) * dims_[0] + du]) {
        umin = std::min(umin, du);
        umax = std::max(umax, du);
        vmin = std::min(vmin, dv);
        vmax = std::max(vmax, dv);
      }
  return windowed({lo_.u + umin, lo_.v + vmin}, {umax - umin + 1, vmax - vmin + 1});
}

Raster2D Raster2D::windowed(Pixel lo, std::array<int, 2> dims) const {
  dims = {std::max(0, dims[0]), std::max(0, dims[1])};
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(dims[0]) * dims[1], 0);
  for (int dv = 0; dv < dims[1]; ++dv)
    for (int du = 0; du < dims[0]; ++du)
      bits[static_cast<std::size_t>(dv) * dims[0] + du] = test({lo.u + du, lo.v + dv});
  return Raster2D(pixel_, origin_, lo, dims, std::move(bits));
}

bool Raster2D::same_lattice(const Raster2D& other) const {
  return std::abs(pixel_ - other.pixel_) <= 1e-12 * pixel_ &&
         (origin_ - other.origin_).cwiseAbs().maxCoeff() <= 1e-9 * pixel_;
}

bool Raster2D::same_set(const Raster2D& other) const {
  if (!same_lattice(other) || count_ != other.count_) return false;
  for (const auto& p : pixels()) {
    if (!other.test(p)) return false;
  }
  return true;
}

Raster2D raster_boolean(const Raster2D& a, const Raster2D& b, BooleanOp op) {
  if (!a.same_lattice(b)) {
    throw FrameMismatch("raster_boolean: operands are on different pixel lattices");
  }
  Pixel lo = a.lo();
  Pixel hi = a.hi();
  switch (op) {
    case BooleanOp::Union:
      if (a.dims()[0] * a.dims()[1] == 0) {
        lo = b.lo();
        hi = b.hi();
      } else if (b.dims()[0] * b.dims()[1] != 0) {
        lo = {std::min(a.lo().u, b.lo().u), std::min(a.lo().v, b.lo().v)};
        hi = {std::max(a.hi().u, b.hi().u), std::max(a.hi().v, b.hi().v)};
      }
      break;
    case BooleanOp::Intersect:
      lo = {std::max(a.lo().u, b.lo().u), std::max(a.lo().v, b.lo().v)};
      hi = {std::min(a.hi().u, b.hi().u), std::min(a.hi().v, b.hi().v)};
      break;
    case BooleanOp::Difference:
      break;
  }
  const std::array<int, 2> dims{std::max(0, hi.u - lo.u), std::max(0, hi.v - lo.v)};
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(dims[0]) * dims[1], 0);
  for (int dv = 0; dv < dims[1]; ++dv) {
    for (int du = 0; du < dims[0]; ++du) {
      const Pixel p{lo.u + du, lo.v + dv};
      const bool x = a.test(p);
      const bool y = b.test(p);
      bool r = false;
      switch (op) {
        case BooleanOp::Union: r = x || y; break;
        case BooleanOp::Intersect: r = x && y; break;
        case BooleanOp::Difference: r = x && !y; break;
      }
      bits[static_cast<std::size_t>(dv) * dims[0] + du] = r;
    }
  }
  return Raster2D(a.pixel(), a.origin(), lo, dims, std::move(bits));
}

Raster2D reflect2d(const Raster2D& a) {
  std::vector<std::uint8_t> bits(a.bits().rbegin(), a.bits().rend());
  const Pixel lo{-(a.hi().u - 1), -(a.hi().v - 1)};
  return Raster2D(a.pixel(), a.origin(), lo, a.dims(), std::move(bits));
}

std::string encode_pgm(const Raster2D& raster) {
  const auto& d = raster.dims();
  std::string out = "P5\n" + std::to_string(d[0]) + " " + std::to_string(d[1]) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(d[0]) * d[1]);
  const auto bits = raster.bits();
  for (int dv = d[1] - 1; dv >= 0; --dv) {
    for (int du = 0; du < d[0]; ++du) {
      out.push_back(bits[static_cast<std::size_t>(dv) * d[0] + du] ? static_cast<char>(255) : '\0');
    }
  }
  return out;
}

void write_pgm(const Raster2D& raster, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  const std::string bytes = encode_pgm(raster);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

GrayImage parse_pgm(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto integer = [&] {
    skip();
    const std::size_t at = pos;
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (1L << 30)) throw ParseError("PGM: header value too large", at);
    }
    if (pos == at) throw ParseError("PGM: expected an integer", at);
    return static_cast<int>(v);
  };
  if (bytes.substr(0, 2) != "P5") throw ParseError("PGM: expected magic 'P5'", 0);
  pos = 2;
  GrayImage img;
  img.width = integer();
  img.height = integer();
  const int maxval = integer();
  if (maxval <= 0 || maxval > 255) throw ParseError("PGM: only 8-bit images are supported", pos);
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw ParseError("PGM: missing whitespace after header", pos);
  }
  ++pos;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (bytes.size() - pos < n) throw ParseError("PGM: pixel data truncated", bytes.size());
  img.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    img.values[i] = static_cast<std::uint8_t>(
        std::lround(255.0 * static_cast<unsigned char>(bytes[pos + i]) / maxval));
  }
  return img;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pgm(ss.str());
}

Raster2D raster_from_image(const GrayImage& image, double pixel, int origin_col, int origin_row) {
  std::vector<Pixel> pixels;
  for (int row = 0; row < image.height; ++row)
    for (int col = 0; col < image.width; ++col)
      if (image.values[static_cast<std::size_t>(row) * image.width + col] >= 128) {
        pixels.push_back({col - origin_col, origin_row - row});
      }
  return Raster2D::from_pixels(pixel, Vec2::Zero(), pixels);
}

}  // namespace turnkit
