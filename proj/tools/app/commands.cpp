#include "commands.hpp"

#include "turnkit/error.hpp"
#include "turnkit/mesh.hpp"
#include "turnkit/parallel.hpp"
#include "turnkit/revolve.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace turnkit::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Adding 0.0 turns -0.0 into 0.0.
json to_json(const Vec3& v) { return json::array({v.x() + 0.0, v.y() + 0.0, v.z() + 0.0}); }

json to_json(const Axis& a) { return {{"point", to_json(a.point)}, {"direction", to_json(a.direction)}}; }

json to_json(const GripConfig& g) {
  return {{"z_offset", g.z_offset}, {"phi_deg", g.phi * 180 / M_PI}, {"flipped", g.flipped}, {"flip_pivot", g.flip_pivot}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string step_name(std::size_t k) {
  std::ostringstream s;
  s << "step_" << std::setw(2) << std::setfill('0') << k << ".pgm";
  return std::move(s).str();
}

// Sections side by side over one window, two blank columns apart. Gray
// levels: 255 material still to remove, 128 material inside the closure.
std::string encode_strip(const std::vector<Raster2D>& frames, const Raster2D& tc, Pixel lo, std::array<int, 2> dims) {
  const int gap = 2;
  const int n = static_cast<int>(frames.size());
  const int width = n == 0 ? 0 : n * dims[0] + (n - 1) * gap;
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(dims[1]) + "\n255\n";
  for (int row = 0; row < dims[1]; ++row) {
    const int v = lo.v + dims[1] - 1 - row;
    for (int f = 0; f < n; ++f) {
      for (int c = 0; c < dims[0]; ++c) {
        const Pixel p{lo.u + c, v};
        char g = 0;
        if (frames[f].test(p)) g = static_cast<char>(tc.test(p) ? 128 : 255);
        out.push_back(g);
      }
      if (f + 1 < n) out.append(gap, '\0');
    }
  }
  return out;
}

json plan_json(const Plan& p, std::span<const TurnAction> actions, const Setup& s) {
  json steps = json::array();
  for (std::size_t k = 0; k < p.action_indices.size(); ++k) {
    const TurnAction& a = actions[p.action_indices[k]];
    steps.push_back({{"id", a.id},
                     {"tool", s.tools[a.tool_index].assembly.insert().name},
                     {"fixture", a.fixture_index},
                     {"step_volume_mm3", p.step_volumes[k]},
                     {"step_cost", p.step_costs[k]}});
  }
  return {{"actions", steps},
          {"total_cost", p.total_cost},
          {"setup_cost_total", p.setup_cost_total},
          {"residual_mm3", p.residual_volume},
          {"fixture_changes", p.fixture_changes}};
}

json residual_json(const TurnabilityVerdict& v) {
  json j = {{"residual_mm3", v.residual_volume}};
  if (v.residual) {
    j["residual_box"] = {{"z_min", v.residual->z_min},
                         {"z_max", v.residual->z_max},
                         {"r_min", v.residual->r_min},
                         {"r_max", v.residual->r_max}};
  }
  return j;
}

HalfSection body_closure(const ChuckModel& chuck, double pixel) {
  const Axis z = Axis::spindle();
  return chuck.body.is_empty() ? empty_half_section(z, pixel) : tc_implicit(chuck.body, z, pixel);
}

}  // namespace

VoxelGrid load_part(const JobConfig& cfg) {
  VoxelGrid part = voxelize(load_mesh(cfg.part_path, cfg.unit_scale), cfg.voxel);
  if (part.is_empty()) throw Error("part '" + cfg.part_path.string() + "' voxelizes to nothing");
  return part;
}

std::vector<AxisCandidate> planning_axes(const JobConfig& cfg, const VoxelGrid& part) {
  if (cfg.axis.fixed) return {AxisCandidate{*cfg.axis.fixed, std::nullopt, AxisProvenance::User}};
  AxisSearchOptions opts;
  opts.pixel = cfg.pixel;
  opts.n_dirs = cfg.axis.n_dirs;
  opts.n_offsets = cfg.axis.n_offsets;
  opts.shortlist = static_cast<std::size_t>(cfg.axis.shortlist);
  opts.refine_top = static_cast<std::size_t>(cfg.axis.refine_top);
  opts.refine_budget = cfg.axis.refine_budget;
  opts.seed = cfg.seed;
  std::vector<AxisCandidate> out;
  for (const AxisCandidate& c : search_axes(part, opts, cfg.axis.user)) {
    // Skip repeats of a line already kept.
    const bool repeat = std::any_of(out.begin(), out.end(), [&](const AxisCandidate& k) {
      const Vec3 gap = c.axis.point - k.axis.point;
      return line_angle(c.axis.direction, k.axis.direction) < 1e-6 &&
             (gap - gap.dot(k.axis.direction) * k.axis.direction).norm() < 1e-9 * std::max(1.0, gap.norm());
    });
    if (repeat) continue;
    out.push_back(c);
    if (out.size() >= static_cast<std::size_t>(cfg.axis.plan_axes)) break;
  }
  return out;
}

Setup prepare_for_axis(const JobConfig& cfg, const VoxelGrid& part, const AxisCandidate& axis) {
  Setup s;
  s.part = part;
  s.axis = axis;
  const TurnabilityReport rep = turnability_ratio(s.part, s.axis.axis, cfg.pixel);
  s.axis.gamma = rep.gamma;
  s.gamma_raw = rep.gamma_raw;

  std::tie(s.part_init, s.mu_init) = align_to_spindle(s.part, s.axis.axis);
  s.tc = tc_implicit(s.part_init, Axis::spindle(), cfg.pixel);
  s.stock = infer_stock(s.tc, cfg.radial_allowance, cfg.axial_allowance);

  const std::vector<GripConfig> grips = enumerate_grips(s.part_init, cfg.chuck, cfg.grips.z_step, cfg.grips.phi_step);
  const std::vector<GripReport> reports = validate_grips(s.part_init, cfg.chuck, grips);
  int kept[2] = {0, 0};
  for (std::size_t i = 0; i < grips.size(); ++i) {
    int& n = kept[grips[i].flipped ? 1 : 0];
    if (!reports[i].pass || n >= cfg.grips.per_flip) continue;
    ++n;
    s.fixtures.push_back(FixtureConfig::make(s.mu_init, grips[i]));
  }
  s.tools = load_tools(cfg.tools, cfg.pixel);
  s.envelope = make_envelope(cfg);
  return s;
}

Setup prepare(const JobConfig& cfg) {
  const VoxelGrid part = load_part(cfg);
  return prepare_for_axis(cfg, part, planning_axes(cfg, part).front());
}

fs::path run_directory(const JobConfig& cfg, const fs::path& out_override) {
  const fs::path base = out_override.empty() ? cfg.out_dir : out_override;
  return base / config_digest(cfg).substr(0, 16);
}

int cmd_axes(const JobConfig& cfg, const fs::path& run_dir, std::ostream& log) {
  const VoxelGrid part = load_part(cfg);
  AxisSearchOptions opts;
  opts.pixel = cfg.pixel;
  opts.n_dirs = cfg.axis.n_dirs;
  opts.n_offsets = cfg.axis.n_offsets;
  opts.shortlist = static_cast<std::size_t>(cfg.axis.shortlist);
  opts.refine_top = static_cast<std::size_t>(cfg.axis.refine_top);
  opts.refine_budget = cfg.axis.refine_budget;
  opts.seed = cfg.seed;
  std::vector<Axis> user = cfg.axis.user;
  if (cfg.axis.fixed) user.push_back(*cfg.axis.fixed);
  const std::vector<AxisCandidate> cands = search_axes(part, opts, user);

  fs::create_directories(run_dir);
  std::vector<HalfSection> closures(cands.size());
  parallel_for(0, static_cast<std::ptrdiff_t>(cands.size()),
               [&](std::ptrdiff_t i) { closures[i] = tc_implicit(part, cands[i].axis, cfg.pixel); });
  const double part_volume = part.volume();
  json list = json::array();
  std::ostringstream table;
  table << "rank  gamma     gamma_raw  provenance  point                           direction\n";
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const AxisCandidate& c = cands[i];
    const double tc_volume = revolve_volume(closures[i]);
    const double raw = tc_volume > 0 ? part_volume / tc_volume : 0.0;
    const std::string image = "tc_" + std::to_string(i) + ".pgm";
    write_pgm(closures[i].raster, run_dir / image);
    json j = to_json(c.axis);
    j["rank"] = i;
    j["gamma"] = c.gamma.value_or(0.0);
    j["gamma_raw"] = raw;
    j["provenance"] = std::string(to_string(c.provenance));
    j["tc_volume_mm3"] = tc_volume;
    j["section"] = image;
    list.push_back(j);
    const Vec3 p = c.axis.point + Vec3::Zero(), dir = c.axis.direction + Vec3::Zero();
    char line[200];
    std::snprintf(line, sizeof line, "%-5zu %-9.5f %-10.5f %-11s (%8.3f, %8.3f, %8.3f)  (%7.4f, %7.4f, %7.4f)\n", i,
                  c.gamma.value_or(0.0), raw, std::string(to_string(c.provenance)).c_str(), p.x(), p.y(), p.z(),
                  dir.x() + 0.0, dir.y() + 0.0, dir.z() + 0.0);
    table << line;
  }
  write_json(run_dir / "axes.json", {{"schema", kSchemaVersion}, {"part_volume_mm3", part_volume}, {"candidates", list}});
  write_text(run_dir / "axes.txt", table.str());
  log << table.str();
  return kExitOk;
}

int cmd_mtv(const JobConfig& cfg, const fs::path& run_dir, int fixture_id, const std::string& tool, std::ostream& log) {
  const Setup s = prepare(cfg);
  if (fixture_id < 0 || fixture_id >= static_cast<int>(s.fixtures.size())) {
    throw ConfigError("--fixture", "unknown fixture " + std::to_string(fixture_id) + " (have " +
                                       std::to_string(s.fixtures.size()) + ")");
  }
  int tool_index = -1;
  for (std::size_t i = 0; i < s.tools.size(); ++i)
    if (s.tools[i].assembly.insert().name == tool || std::to_string(i) == tool) tool_index = static_cast<int>(i);
  if (tool_index < 0) throw ConfigError("--tool", "unknown tool '" + tool + "'");

  const FixtureConfig& fx = s.fixtures[fixture_id];
  const HalfSection scene = chuck_closure(section_to_fixture(s.tc, fx.grip), body_closure(cfg.chuck, cfg.pixel));
  const TurningTool& t = s.tools[tool_index];
  const HalfSection q = mtv(free_space(c_obstacle(scene, t.assembly), s.envelope), t.assembly.insert(), Axis::spindle());
  const HalfSection q_init = section_to_init(q, fx.grip);
  const HalfSection removable = make_half_section(
      Axis::spindle(), raster_boolean(q_init.raster, s.stock.section.raster, BooleanOp::Intersect));

  fs::create_directories(run_dir);
  const std::string stem = "mtv_f" + std::to_string(fixture_id) + "_t" + std::to_string(tool_index);
  write_pgm(q.raster, run_dir / (stem + ".pgm"));
  write_pgm(q_init.raster.windowed(s.stock.section.raster.lo(), s.stock.section.raster.dims()),
            run_dir / (stem + "_init.pgm"));
  const json doc = {{"schema", kSchemaVersion},
                    {"fixture", fixture_id},
                    {"grip", to_json(fx.grip)},
                    {"tool", t.assembly.insert().name},
                    {"mtv_volume_mm3", revolve_volume(q)},
                    {"removable_from_stock_mm3", revolve_volume(removable)},
                    {"section", stem + ".pgm"}};
  write_json(run_dir / (stem + ".json"), doc);
  log << stem << ": MTV volume " << revolve_volume(q) << " mm^3\n";
  return kExitOk;
}

int cmd_plan(const JobConfig& cfg, const fs::path& run_dir, std::ostream& log) {
  const VoxelGrid part = load_part(cfg);
  struct Attempt {
    Setup setup;
    std::vector<TurnAction> actions;
    PlanSearchResult result;
  };
  std::vector<Attempt> attempts;
  std::size_t chosen = 0;
  json considered = json::array();
  for (const AxisCandidate& cand : planning_axes(cfg, part)) {
    Attempt at{prepare_for_axis(cfg, part, cand), {}, {}};
    const Setup& su = at.setup;
    if (!su.tools.empty() && !su.fixtures.empty()) {
      at.actions = generate_actions(su.tc, su.fixtures, su.tools, cfg.chuck, su.envelope, cfg.pixel);
    }
    if (at.actions.size() > 64) {
      throw ConfigError("grips.per_flip",
                        std::to_string(at.actions.size()) + " actions exceed the planner's limit of 64");
    }
    at.result = search_plans(at.actions, su.stock, su.tc,
                             SearchOptions{cfg.tol, cfg.setup_cost, static_cast<std::size_t>(cfg.top_k)});
    json c = to_json(su.axis.axis);
    c["gamma"] = *su.axis.gamma;
    c["provenance"] = std::string(to_string(su.axis.provenance));
    c["feasible"] = !at.result.plans.empty();
    c["total_cost"] = at.result.plans.empty() ? json(nullptr) : json(at.result.plans.front().total_cost);
    considered.push_back(c);
    attempts.push_back(std::move(at));
    const Attempt& best = attempts[chosen];
    const Attempt& last = attempts.back();
    const bool better = !last.result.plans.empty() &&
                        (best.result.plans.empty() ||
                         last.result.plans.front().total_cost < best.result.plans.front().total_cost);
    if (better) chosen = attempts.size() - 1;
  }
  const Setup& s = attempts[chosen].setup;
  const std::vector<TurnAction>& actions = attempts[chosen].actions;
  const PlanSearchResult& result = attempts[chosen].result;

  fs::create_directories(run_dir);
  const Pixel lo = s.stock.section.raster.lo();
  const std::array<int, 2> dims = s.stock.section.raster.dims();
  write_pgm(s.tc.raster.windowed(lo, dims), run_dir / "tc.pgm");

  json doc;
  doc["schema"] = kSchemaVersion;
  doc["axis"] = to_json(s.axis.axis);
  doc["axis"]["provenance"] = std::string(to_string(s.axis.provenance));
  doc["gamma"] = *s.axis.gamma;
  doc["gamma_raw"] = s.gamma_raw;
  doc["stock"] = {{"radius", s.stock.radius}, {"z_min", s.stock.z_min}, {"z_max", s.stock.z_max},
                  {"volume_mm3", revolve_volume(s.stock.section)}};
  doc["tc_volume_mm3"] = revolve_volume(s.tc);
  json fixtures = json::array();
  for (std::size_t i = 0; i < s.fixtures.size(); ++i) {
    json f = to_json(s.fixtures[i].grip);
    f["index"] = i;
    fixtures.push_back(f);
  }
  doc["fixtures"] = fixtures;
  json tools = json::array();
  for (const TurningTool& t : s.tools) {
    tools.push_back({{"name", t.assembly.insert().name},
                     {"cost_per_second", t.cost_per_second},
                     {"removal_rate", t.removal_rate}});
  }
  doc["tools"] = tools;
  json generated = json::array();
  for (const TurnAction& a : actions) {
    generated.push_back({{"id", a.id}, {"fixture", a.fixture_index}, {"tool", s.tools[a.tool_index].assembly.insert().name},
                         {"mtv_volume_mm3", revolve_volume(a.mtv)}});
  }
  doc["generated_actions"] = generated;
  doc["search"] = {{"expansions", result.expansions}, {"truncated", result.truncated}};
  doc["axes_considered"] = considered;

  const bool feasible = !result.plans.empty();
  doc["feasible"] = feasible;
  if (feasible) {
    const Plan& best = result.plans.front();
    const json p = plan_json(best, actions, s);
    for (auto it = p.begin(); it != p.end(); ++it) doc[it.key()] = it.value();
    json alternatives = json::array();
    for (std::size_t i = 1; i < result.plans.size(); ++i) alternatives.push_back(plan_json(result.plans[i], actions, s));
    doc["alternatives"] = alternatives;

    fs::create_directories(run_dir / "steps");
    std::vector<Raster2D> frames;
    PlanState state = initial_state(s.stock);
    frames.push_back(state.workpiece.raster);
    for (std::size_t i : best.action_indices) {
      state = apply_action(state, actions, i);
      frames.push_back(state.workpiece.raster);
    }
    for (std::size_t k = 0; k < frames.size(); ++k) write_pgm(frames[k].windowed(lo, dims), run_dir / "steps" / step_name(k));
    write_text(run_dir / "strip.pgm", encode_strip(frames, s.tc.raster, lo, dims));
    log << "plan: " << best.action_ids.size() << " actions, total cost " << best.total_cost << ", residual "
        << best.residual_volume << " mm^3, " << best.fixture_changes << " fixture changes\n";
  } else {
    doc["actions"] = json::array();
    doc["total_cost"] = nullptr;
    const TurnabilityVerdict v = result.infeasible ? *result.infeasible
                                                   : turnability_test(as_turned(s.stock, actions), s.tc, cfg.tol);
    doc["infeasible"] = residual_json(v);
    doc["residual_mm3"] = v.residual_volume;
    log << "infeasible: " << v.residual_volume << " mm^3 cannot be removed (tol " << cfg.tol << ")"
        << (result.truncated ? ", search truncated" : "") << "\n";
  }
  write_json(run_dir / "plan.json", doc);
  return feasible ? kExitOk : kExitInfeasible;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App cli{"Process planning for turned parts"};
  cli.require_subcommand(1);
  std::string config;
  std::size_t workers = 0;
  std::string out_dir;
  int fixture_id = -1;
  std::string tool;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Job config (JSON)")->required();
    sub->add_option("--workers", workers, "Worker threads (0: all cores)");
    sub->add_option("--out", out_dir, "Output root (overrides the config)");
  };
  CLI::App* axes = cli.add_subcommand("axes", "Rank candidate turning axes");
  CLI::App* mtv_cmd = cli.add_subcommand("mtv", "Maximal turnable volume of one fixture and tool");
  CLI::App* plan = cli.add_subcommand("plan", "Fixtures, actions and the cheapest plan");
  common(axes);
  common(mtv_cmd);
  common(plan);
  mtv_cmd->add_option("--fixture", fixture_id, "Fixture index")->required();
  mtv_cmd->add_option("--tool", tool, "Tool name or index")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    cli.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }
  try {
    const WorkerLimit limit(workers);
    const JobConfig cfg = load_config(config);
    const fs::path dir = run_directory(cfg, out_dir);
    out << "run directory: " << dir.string() << "\n";
    if (axes->parsed()) return cmd_axes(cfg, dir, out);
    if (mtv_cmd->parsed()) return cmd_mtv(cfg, dir, fixture_id, tool, out);
    return cmd_plan(cfg, dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace turnkit::app
