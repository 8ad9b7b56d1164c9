#include "config.hpp"

#include "turnkit/error.hpp"
#include "turnkit/raster.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace turnkit::app {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Typed access into one JSON object, keeping the dotted path for messages.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& raw(const std::string& key) const {
    if (!obj_.contains(key)) throw ConfigError(at(key), "missing");
    return obj_.at(key);
  }
  Fields object(const std::string& key) const { return Fields(raw(key), at(key)); }

  double number(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(at(key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
  double positive(const std::string& key) const {
    const double x = number(key);
    if (!(x > 0)) throw ConfigError(at(key), "must be > 0");
    return x;
  }
  double non_negative(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key) && fallback) return *fallback;
    const double x = number(key);
    if (x < 0) throw ConfigError(at(key), "must be >= 0");
    return x;
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt, int min = 0) const {
    if (!has(key) && fallback) return *fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    const auto x = v.get<long long>();
    if (x < min || x > 1'000'000'000) throw ConfigError(at(key), "must be >= " + std::to_string(min));
    return static_cast<int>(x);
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vec(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array() || v.size() != N) throw ConfigError(at(key), "expected " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) {
      if (!v[i].is_number()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
      out[i] = v[i].get<double>();
    }
    return out;
  }

  void existing_file(const std::string& key, const fs::path& p) const {
    if (!fs::is_regular_file(p)) throw ConfigError(at(key), "file '" + p.string() + "' does not exist");
  }

 private:
  const json& obj_;
  std::string path_;
};

Axis parse_axis(const Fields& f) {
  const Vec3 d = f.vec<3>("direction");
  if (d.norm() < 1e-12) throw ConfigError(f.at("direction"), "must be non-zero");
  return Axis::make(f.vec<3>("point"), d);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

json read_json(const fs::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(field, std::string("invalid JSON: ") + e.what());
  }
}

void check_schema(const Fields& f) {
  if (f.integer("schema") != kSchemaVersion) {
    throw ConfigError(f.at("schema"), "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }
}

void hash_file(EVP_MD_CTX* ctx, const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = std::move(buf).str();
  const std::string len = std::to_string(bytes.size()) + ":";
  EVP_DigestUpdate(ctx, len.data(), len.size());
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
}

}  // namespace

std::vector<ToolSpec> parse_tool_catalog(const json& doc, const fs::path& base_dir) {
  const Fields root(doc, "tools");
  check_schema(root);
  const json& list = root.raw("tools");
  if (!list.is_array()) throw ConfigError(root.at("tools"), "expected an array");
  std::vector<ToolSpec> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Fields t(list[i], "tools.tools[" + std::to_string(i) + "]");
    ToolSpec s;
    s.name = t.string("name");
    for (const ToolSpec& prev : out)
      if (prev.name == s.name) throw ConfigError(t.at("name"), "duplicate tool name '" + s.name + "'");
    const Fields ins = t.object("insert");
    s.insert_path = resolve(base_dir, ins.string("image"));
    ins.existing_file("image", s.insert_path);
    const Vec2 io = ins.vec<2>("origin");
    s.insert_origin[0] = static_cast<int>(io.x());
    s.insert_origin[1] = static_cast<int>(io.y());
    if (t.has("holder")) {
      const Fields h = t.object("holder");
      s.holder_path = resolve(base_dir, h.string("image"));
      h.existing_file("image", s.holder_path);
      const Vec2 ho = h.vec<2>("origin");
      s.holder_origin[0] = static_cast<int>(ho.x());
      s.holder_origin[1] = static_cast<int>(ho.y());
    }
    if (t.has("orientation")) {
      const Fields o = t.object("orientation");
      s.orientation.quarter_turns = o.integer("quarter_turns", 0);
      s.orientation.mirrored = o.boolean("mirrored", false);
    }
    s.setup = t.string("setup", "");
    s.cost_per_second = t.positive("cost_per_second");
    s.removal_rate = t.positive("removal_rate");
    out.push_back(std::move(s));
  }
  return out;
}

JobConfig parse_config(const json& doc, const fs::path& base_dir) {
  const Fields root(doc, "");
  check_schema(root);
  JobConfig c;
  c.canonical = doc;

  const Fields part = root.object("part");
  c.part_path = resolve(base_dir, part.string("path"));
  part.existing_file("path", c.part_path);
  c.unit_scale = part.has("unit_scale") ? part.positive("unit_scale") : 1.0;

  const Fields res = root.object("resolution");
  c.voxel = res.positive("voxel");
  c.pixel = res.positive("pixel");

  if (root.has("axis")) {
    const Fields a = root.object("axis");
    c.axis.n_dirs = a.integer("n_dirs", 64, 1);
    c.axis.n_offsets = a.integer("n_offsets", 1, 1);
    c.axis.shortlist = a.integer("shortlist", 16, 1);
    c.axis.refine_top = a.integer("refine_top", 2, 0);
    c.axis.refine_budget = a.integer("refine_budget", 60, 1);
    c.axis.plan_axes = a.integer("plan_axes", 1, 1);
    if (a.has("user")) {
      const json& users = a.raw("user");
      if (!users.is_array()) throw ConfigError(a.at("user"), "expected an array");
      for (std::size_t i = 0; i < users.size(); ++i)
        c.axis.user.push_back(parse_axis(Fields(users[i], a.at("user") + "[" + std::to_string(i) + "]")));
    }
    if (a.has("fixed")) c.axis.fixed = parse_axis(a.object("fixed"));
  }

  const Fields ch = root.object("chuck");
  c.chuck.jaw_count = ch.integer("jaw_count", std::nullopt, 2);
  c.chuck.jaw_axial_length = ch.positive("jaw_axial_length");
  c.chuck.grip_radius_min = ch.positive("grip_radius_min");
  c.chuck.grip_radius_max = ch.positive("grip_radius_max");
  c.chuck.min_contact_length = ch.positive("min_contact_length");
  c.chuck.min_angular_coverage = ch.positive("min_angular_coverage_deg") * M_PI / 180;
  c.chuck.jaw_angular_width = ch.positive("jaw_angular_width_deg") * M_PI / 180;
  c.chuck_body_radius = ch.positive("body_radius");
  c.chuck_body_depth = ch.positive("body_depth");
  if (c.chuck.grip_radius_min > c.chuck.grip_radius_max) {
    throw ConfigError(ch.at("grip_radius_min"), "exceeds grip_radius_max");
  }
  if (c.chuck.jaw_angular_width * c.chuck.jaw_count >= 2 * M_PI) {
    throw ConfigError(ch.at("jaw_angular_width_deg"), "jaws overlap");
  }
  if (c.chuck.min_angular_coverage > c.chuck.jaw_angular_width) {
    throw ConfigError(ch.at("min_angular_coverage_deg"), "exceeds the jaw width");
  }

  const Fields g = root.object("grips");
  c.grips.z_step = g.positive("z_step");
  c.grips.phi_step = g.positive("phi_step_deg") * M_PI / 180;
  c.grips.per_flip = g.integer("per_flip", 1, 1);
  // Grips must land on the section lattice so frame maps stay exact.
  const double ratio = c.grips.z_step / c.pixel;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw ConfigError(g.at("z_step"), "must be a multiple of resolution.pixel");
  }

  const Fields env = root.object("envelope");
  c.env_z_min = env.number("z_min");
  c.env_z_max = env.number("z_max");
  c.env_x_min = env.number("x_min");
  c.env_x_max = env.number("x_max");
  if (!(c.env_z_min < c.env_z_max)) throw ConfigError(env.at("z_max"), "must exceed z_min");
  if (!(c.env_x_min < c.env_x_max)) throw ConfigError(env.at("x_max"), "must exceed x_min");
  if (env.has("exclude")) {
    const json& ex = env.raw("exclude");
    if (!ex.is_array()) throw ConfigError(env.at("exclude"), "expected an array");
    for (std::size_t i = 0; i < ex.size(); ++i) {
      const Fields e(ex[i], env.at("exclude") + "[" + std::to_string(i) + "]");
      c.env_exclusions.emplace_back(e.vec<2>("min"), e.vec<2>("max"));
    }
  }

  c.tool_catalog = resolve(base_dir, root.string("tools"));
  root.existing_file("tools", c.tool_catalog);
  c.tools = parse_tool_catalog(read_json(c.tool_catalog, "tools"), c.tool_catalog.parent_path());

  const Fields st = root.object("stock");
  c.radial_allowance = st.non_negative("radial_allowance");
  c.axial_allowance = st.non_negative("axial_allowance");

  const Fields pl = root.object("plan");
  c.tol = pl.non_negative("tol");
  c.setup_cost = pl.non_negative("setup_cost");
  c.top_k = pl.integer("top_k", 1, 1);

  c.out_dir = resolve(base_dir, root.string("out", "runs"));
  if (root.has("seed")) {
    const json& s = root.raw("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("seed", "expected a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  c.chuck.body = make_chuck_body(c.chuck_body_radius, c.chuck_body_depth, c.voxel);
  try {
    c.chuck.validate();
  } catch (const Error& e) {
    throw ConfigError("chuck", e.what());
  }
  return c;
}

JobConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("--config", "file '" + path.string() + "' does not exist");
  JobConfig c = parse_config(read_json(path, "--config"), path.parent_path());
  c.source = path;
  return c;
}

std::vector<TurningTool> load_tools(const std::vector<ToolSpec>& specs, double pixel) {
  std::vector<TurningTool> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const ToolSpec& s = specs[i];
    const std::string field = "tools.tools[" + std::to_string(i) + "]";
    try {
      ToolInsert insert{s.name, raster_from_image(read_pgm(s.insert_path), pixel, s.insert_origin[0], s.insert_origin[1])};
      Raster2D holder = s.holder_path.empty()
                            ? Raster2D::empty(pixel)
                            : raster_from_image(read_pgm(s.holder_path), pixel, s.holder_origin[0], s.holder_origin[1]);
      out.push_back({ToolAssembly::make(std::move(insert), std::move(holder), s.setup, s.orientation),
                     s.cost_per_second, s.removal_rate});
    } catch (const Error& e) {
      throw ConfigError(field, e.what());
    }
  }
  return out;
}

MachineEnvelope make_envelope(const JobConfig& cfg) {
  MachineEnvelope env = MachineEnvelope::rectangle(cfg.pixel, cfg.env_z_min, cfg.env_z_max, cfg.env_x_min, cfg.env_x_max);
  for (const auto& [lo, hi] : cfg.env_exclusions) env = env.excluding(lo, hi);
  return env;
}

std::string config_digest(const JobConfig& cfg) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("cannot allocate a digest context");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  const std::string text = cfg.canonical.dump();
  EVP_DigestUpdate(ctx, text.data(), text.size());
  hash_file(ctx, cfg.part_path);
  hash_file(ctx, cfg.tool_catalog);
  for (const ToolSpec& t : cfg.tools) {
    hash_file(ctx, t.insert_path);
    if (!t.holder_path.empty()) hash_file(ctx, t.holder_path);
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return std::move(hex).str();
}

}  // namespace turnkit::app
