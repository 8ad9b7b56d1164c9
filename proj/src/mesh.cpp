#include "turnkit/mesh.hpp"

#include "turnkit/error.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace turnkit {
namespace {

constexpr std::size_t kBinaryHeader = 80;
constexpr std::size_t kBinaryRecord = 50;

float read_f32(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

std::uint32_t read_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
  return v;
}

void append_f32(std::string& out, float f) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  char buf[4];
  std::memcpy(buf, &bits, 4);
  out.append(buf, 4);
}

TriangleMesh parse_binary(std::string_view bytes, double scale) {
  if (bytes.size() < kBinaryHeader + 4) {
    throw ParseError("binary STL shorter than its header", bytes.size());
  }
  const std::uint32_t count = read_u32(bytes.data() + kBinaryHeader);
  std::vector<Vec3> corners;
  corners.reserve(static_cast<std::size_t>(count) * 3);
  for (std::uint32_t r = 0; r < count; ++r) {
    const std::size_t at = kBinaryHeader + 4 + static_cast<std::size_t>(r) * kBinaryRecord;
    if (at + kBinaryRecord > bytes.size()) {
      throw ParseError("binary STL record " + std::to_string(r) + " of " + std::to_string(count) +
                           " is truncated",
                       at);
    }
    const char* p = bytes.data() + at + 12;  // skip the facet normal
    for (int c = 0; c < 3; ++c, p += 12) {
      corners.emplace_back(read_f32(p), read_f32(p + 4), read_f32(p + 8));
    }
  }
  for (auto& c : corners) c *= scale;
  return mesh_from_facets(corners, scale);
}

class AsciiReader {
 public:
  explicit AsciiReader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }
  std::size_t offset() const { return pos_; }

  std::string_view word() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  void expect(std::string_view keyword) {
    const std::size_t at = (skip_space(), pos_);
    const std::string_view w = word();
    if (w != keyword) {
      throw ParseError("ASCII STL: expected '" + std::string(keyword) + "', found '" +
                           std::string(w) + "'",
                       at);
    }
  }

  double number() {
    const std::size_t at = (skip_space(), pos_);
    const std::string_view w = word();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || ptr != w.data() + w.size()) {
      throw ParseError("ASCII STL: bad number '" + std::string(w) + "'", at);
    }
    return v;
  }

  void skip_line() {
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

TriangleMesh parse_ascii(std::string_view text, double scale) {
  AsciiReader in(text);
  in.expect("solid");
  in.skip_line();
  std::vector<Vec3> corners;
  while (true) {
    if (in.at_end()) throw ParseError("ASCII STL: missing 'endsolid'", in.offset());
    const std::size_t at = in.offset();
    const std::string_view w = in.word();
    if (w == "endsolid") break;
    if (w != "facet") {
      throw ParseError("ASCII STL: expected 'facet', found '" + std::string(w) + "'", at);
    }
    in.expect("normal");
    for (int i = 0; i < 3; ++i) in.number();
    in.expect("outer");
    in.expect("loop");
    for (int c = 0; c < 3; ++c) {
      in.expect("vertex");
      const double x = in.number();
      const double y = in.number();
      const double z = in.number();
      corners.emplace_back(x * scale, y * scale, z * scale);
    }
    in.expect("endloop");
    in.expect("endfacet");
  }
  return mesh_from_facets(corners, scale);
}

bool looks_binary(std::string_view bytes) {
  if (bytes.size() < kBinaryHeader + 4) return false;
  const std::uint32_t count = read_u32(bytes.data() + kBinaryHeader);
  if (kBinaryHeader + 4 + static_cast<std::size_t>(count) * kBinaryRecord == bytes.size()) return true;
  std::size_t i = 0;
  while (i < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[i]))) ++i;
  return bytes.substr(i, 5) != "solid";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error("cannot read '" + path.string() + "'");
  return std::move(ss).str();
}

Vec3 facet_normal(const TriangleMesh& m, const Triangle& t) {
  const Vec3 n = (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]);
  const double len = n.norm();
  return len > 0 ? Vec3(n / len) : Vec3::Zero();
}

}  // namespace

Eigen::AlignedBox3d TriangleMesh::bounds() const {
  Eigen::AlignedBox3d box;
  for (const auto& t : triangles) {
    for (auto i : t) box.extend(vertices[i]);
  }
  return box;
}

TriangleMesh mesh_from_facets(const std::vector<Vec3>& corners, double unit_scale) {
  struct Less {
    bool operator()(const Vec3& a, const Vec3& b) const {
      if (a.x() != b.x()) return a.x() < b.x();
      if (a.y() != b.y()) return a.y() < b.y();
      return a.z() < b.z();
    }
  };
  TriangleMesh mesh;
  mesh.unit_scale = unit_scale;
  std::map<Vec3, std::uint32_t, Less> ids;
  auto id_of = [&](const Vec3& p) {
    auto [it, inserted] = ids.try_emplace(p, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (inserted) mesh.vertices.push_back(p);
    return it->second;
  };
  for (std::size_t f = 0; f + 2 < corners.size(); f += 3) {
    const Vec3& a = corners[f];
    const Vec3& b = corners[f + 1];
    const Vec3& c = corners[f + 2];
    if (0.5 * (b - a).cross(c - a).norm() < kDegenerateArea) continue;
    const Triangle t{id_of(a), id_of(b), id_of(c)};
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    mesh.triangles.push_back(t);
  }
  return mesh;
}

TriangleMesh parse_stl(std::string_view bytes, double unit_scale) {
  if (!(unit_scale > 0)) throw Error("STL unit scale must be positive");
  return looks_binary(bytes) ? parse_binary(bytes, unit_scale) : parse_ascii(bytes, unit_scale);
}

TriangleMesh load_mesh(const std::filesystem::path& path, double unit_scale) {
  return parse_stl(read_file(path), unit_scale);
}

void write_stl_ascii(const TriangleMesh& mesh, const std::filesystem::path& path,
                     std::string_view solid_name) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.precision(17);
  out << "solid " << solid_name << '\n';
  for (const auto& t : mesh.triangles) {
    const Vec3 n = facet_normal(mesh, t);
    out << "  facet normal " << n.x() << ' ' << n.y() << ' ' << n.z() << "\n    outer loop\n";
    for (auto i : t) {
      const Vec3& v = mesh.vertices[i];
      out << "      vertex " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    }
    out << "    endloop\n  endfacet\n";
  }
  out << "endsolid " << solid_name << '\n';
}

void write_stl_binary(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::string bytes(kBinaryHeader, '\0');
  const std::string tag = "turnkit binary stl";
  std::memcpy(bytes.data(), tag.data(), tag.size());
  const std::uint32_t count = static_cast<std::uint32_t>(mesh.triangles.size());
  char buf[4];
  std::memcpy(buf, &count, 4);
  bytes.append(buf, 4);
  for (const auto& t : mesh.triangles) {
    const Vec3 n = facet_normal(mesh, t);
    for (int i = 0; i < 3; ++i) append_f32(bytes, static_cast<float>(n[i]));
    for (auto id : t) {
      for (int i = 0; i < 3; ++i) append_f32(bytes, static_cast<float>(mesh.vertices[id][i]));
    }
    bytes.append(2, '\0');
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TriangleMesh transform_solid(const TriangleMesh& mesh, const RigidTransform& t) {
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = t.apply(v);
  return out;
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
  auto corner = [&](int m) {
    return Vec3((m & 1) ? hi.x() : lo.x(), (m & 2) ? hi.y() : lo.y(), (m & 4) ? hi.z() : lo.z());
  };
  // Each face as a quad (a, b, c, d), counter-clockwise seen from outside.
  static constexpr int kFaces[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                       {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  std::vector<Vec3> corners;
  for (const auto& f : kFaces) {
    for (int idx : {f[0], f[1], f[2], f[0], f[2], f[3]}) corners.push_back(corner(idx));
  }
  return mesh_from_facets(corners);
}

TriangleMesh make_cylinder(double radius, double z0, double z1, int segments) {
  std::vector<Vec3> corners;
  auto ring = [&](int k, double z) {
    const double a = 2.0 * M_PI * (k % segments) / segments;
    return Vec3(radius * std::cos(a), radius * std::sin(a), z);
  };
  const Vec3 bottom(0, 0, z0);
  const Vec3 top(0, 0, z1);
  for (int k = 0; k < segments; ++k) {
    const Vec3 b0 = ring(k, z0), b1 = ring(k + 1, z0), t0 = ring(k, z1), t1 = ring(k + 1, z1);
    corners.insert(corners.end(), {b0, b1, t1, b0, t1, t0, bottom, b1, b0, top, t0, t1});
  }
  return mesh_from_facets(corners);
}

TriangleMesh make_revolved(const std::vector<Vec2>& profile, int segments) {
  std::vector<Vec3> corners;
  auto at = [&](const Vec2& zr, int k) {
    const double a = 2.0 * M_PI * (k % segments) / segments;
    return Vec3(zr.y() * std::cos(a), zr.y() * std::sin(a), zr.x());
  };
  const std::size_t n = profile.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = profile[i];
    const Vec2& q = profile[(i + 1) % n];
    for (int k = 0; k < segments; ++k) {
      corners.insert(corners.end(), {at(p, k), at(q, k), at(q, k + 1)});
      corners.insert(corners.end(), {at(p, k), at(q, k + 1), at(p, k + 1)});
    }
  }
  return mesh_from_facets(corners);
}

TriangleMesh make_sphere(const Vec3& center, double radius, int stacks, int slices) {
  std::vector<Vec2> profile;
  for (int s = stacks; s >= 0; --s) {
    const double phi = M_PI * s / stacks;
    profile.emplace_back(-radius * std::cos(phi), s == 0 || s == stacks ? 0.0 : radius * std::sin(phi));
  }
  return transform_solid(make_revolved(profile, slices), RigidTransform::translation(center));
}

}  // namespace turnkit
