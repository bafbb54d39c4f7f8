#include "cli.hpp"

#include "bench.hpp"

#include "sandshape/erosion.hpp"
#include "sandshape/io.hpp"
#include "sandshape/planner.hpp"
#include "sandshape/rlenv.hpp"
#include "sandshape/tool.hpp"
#include "sandshape/trenchlab.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#ifndef SANDSHAPE_VERSION
#define SANDSHAPE_VERSION "0.0.0"
#endif

namespace sandshape::cli {

namespace {

using nlohmann::json;

class NotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("failed writing " + path.string());
}

Point point_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw FormatError(std::string(what) + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Connectivity parse_connectivity(const std::string& s) {
  if (s == "eight" || s == "8") return Connectivity::Eight;
  if (s == "four" || s == "4") return Connectivity::Four;
  throw FormatError("connectivity must be \"four\" or \"eight\"");
}

Boundary parse_boundary(const std::string& s) {
  if (s == "closed") return Boundary::Closed;
  if (s == "open") return Boundary::Open;
  throw FormatError("boundary must be \"closed\" or \"open\"");
}

SoilParams parse_soil(const json& j, SoilParams soil) {
  if (j.contains("repose_angle_deg")) soil.repose_angle_deg = j["repose_angle_deg"].get<double>();
  if (j.contains("cohesion")) soil.cohesion = j["cohesion"].get<double>();
  if (j.contains("connectivity")) soil.connectivity = parse_connectivity(j["connectivity"].get<std::string>());
  if (j.contains("flow_rate") && !j["flow_rate"].is_null()) soil.flow_rate = j["flow_rate"].get<double>();
  if (j.contains("convergence_tol") && !j["convergence_tol"].is_null()) {
    soil.convergence_tol = j["convergence_tol"].get<double>();
  }
  if (j.contains("max_relax_iters") && !j["max_relax_iters"].is_null()) {
    soil.max_relax_iters = j["max_relax_iters"].get<int>();
  }
  if (j.contains("boundary")) soil.boundary = parse_boundary(j["boundary"].get<std::string>());
  return soil;
}

json soil_json(const SoilParams& s) {
  json j{{"repose_angle_deg", s.repose_angle_deg},
         {"cohesion", s.cohesion},
         {"connectivity", s.connectivity == Connectivity::Eight ? "eight" : "four"},
         {"boundary", s.boundary == Boundary::Closed ? "closed" : "open"}};
  j["flow_rate"] = s.flow_rate ? json(*s.flow_rate) : json(nullptr);
  j["convergence_tol"] = s.convergence_tol ? json(*s.convergence_tol) : json(nullptr);
  j["max_relax_iters"] = s.max_relax_iters ? json(*s.max_relax_iters) : json(nullptr);
  return j;
}

json report_json(const RelaxReport& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"final_excess_slope", r.final_excess_slope},
          {"cells_touched", r.cells_touched},
          {"connectivity", r.connectivity == Connectivity::Eight ? "eight" : "four"}};
}

BladeParams parse_blade(const json& j, const GridGeometry& g) {
  BladeParams b{3.0 * g.dx, g.dx, g.dx};
  if (j.contains("width")) b.width = j["width"].get<double>();
  if (j.contains("thickness")) b.thickness = j["thickness"].get<double>();
  if (j.contains("depth")) b.depth = j["depth"].get<double>();
  validate(b, g);
  return b;
}

HeightMapd initial_map(const RunConfig& c) {
  if (!c.initial_map.empty()) return read_heightmap(std::filesystem::path(c.initial_map));
  return new_heightmap(c.geometry, c.initial_height);
}

void write_map(const HeightMapd& h, const std::filesystem::path& stem) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  write_heightmap(h, std::filesystem::path(stem.string() + ".hmap"));
  write_pgm(h, std::filesystem::path(stem.string() + ".pgm"));
}

double relative_drift(double before, double after) {
  return before != 0.0 ? std::abs(after - before) / std::abs(before) : std::abs(after - before);
}

planner::Cell parse_cell(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw InvalidArgument("--start expects row,col");
  try {
    return {std::stol(s.substr(0, comma)), std::stol(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw InvalidArgument("--start expects row,col");
  }
}

std::string actions_string(const std::vector<planner::Move>& moves) {
  std::string out;
  for (auto m : moves) out += planner::move_letter(m);
  return out;
}

std::filesystem::path resolve_out(const std::string& given, const std::string& fallback) {
  if (!given.empty()) return given;
  return default_out_dir() / fallback;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config;
  std::string scenario;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  const json scenario = read_json(a.scenario);
  const auto out = resolve_out(a.out, "simulate");
  std::filesystem::create_directories(out);

  HeightMapd map = initial_map(cfg);
  const auto& g = map.geometry;
  validate(cfg.soil, g);
  const BladeParams blade = parse_blade(scenario.value("blade", json::object()), g);
  ToolConfig tool;
  const std::string mode = scenario.value("mode", std::string("bounded"));
  if (mode != "bounded" && mode != "full") throw FormatError("scenario mode must be bounded or full");
  tool.mode = mode == "full" ? UpdateMode::Full : UpdateMode::Bounded;
  tool.reference_level = scenario.contains("reference_level") ? scenario["reference_level"].get<double>()
                                                              : median_height(map);
  if (scenario.contains("step_relax_iters")) tool.step_relax_iters = scenario["step_relax_iters"].get<int>();

  const double v0 = total_volume(map);
  write_map(map, out / "initial");
  json reports = json::array();
  bool all_converged = true;
  std::optional<ToolPose> pose;

  const json actions = scenario.value("actions", json::array());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    // Either {"type": "stroke", ...} or {"stroke": {...}}.
    std::string type;
    json act;
    if (actions[i].contains("type")) {
      type = actions[i]["type"].get<std::string>();
      act = actions[i];
    } else if (actions[i].is_object() && actions[i].size() == 1) {
      type = actions[i].begin().key();
      act = actions[i].begin().value();
      if (act.is_null()) act = json::object();
    } else {
      throw FormatError("scenario action " + std::to_string(i) + ": expected a type");
    }
    json rep{{"index", i}, {"type", type}};
    if (type == "stroke") {
      Stroke s{point_from(act.at("start"), "start"), point_from(act.at("end"), "end"),
               act.value("depth", blade.depth)};
      BladeParams b = blade;
      b.depth = s.depth;
      auto [next, stats] = execute_stroke(map, s, b, cfg.soil, tool);
      map = std::move(next);
      tool.carry_region = stats.active_region;
      rep["displaced_volume"] = stats.displaced_volume;
      rep["relax_iterations_total"] = stats.relax_iterations_total;
      rep["cells_touched"] = stats.cells_touched;
      rep["final"] = report_json(stats.final_report);
      all_converged = all_converged && stats.final_report.converged;
      pose.reset();
    } else if (type == "place") {
      const double depth = act.value("depth", blade.depth);
      pose = ToolPose{point_from(act.at("center"), "center"),
                      act.value("heading_deg", 0.0) * std::numbers::pi / 180.0, *tool.reference_level - depth};
      auto [next, volume] = apply_placement(map, *pose, blade, cfg.soil);
      map = std::move(next);
      rep["displaced_volume"] = volume;
      tool.carry_region.reset();
    } else if (type == "move") {
      if (!pose) throw FormatError("scenario action " + std::to_string(i) + ": move before place");
      const Point to = point_from(act.at("to"), "to");
      const Stroke path{pose->center, to, 0.0};
      double volume = 0.0;
      if (path.length() > 0.0) {
        auto poses = rasterize(path, g.dx, pose->bottom_height);
        for (std::size_t k = 1; k < poses.size(); ++k) {
          poses[k].heading = pose->heading;
          auto [next, v] = apply_move(map, poses[k - 1], poses[k], blade, cfg.soil);
          map = std::move(next);
          volume += v;
        }
        pose->center = to;
      }
      rep["displaced_volume"] = volume;
      tool.carry_region.reset();
    } else if (type == "lift" || type == "relax") {
      auto [next, report] = relax_to_steady(map, cfg.soil, empty_mask(g), full_region(g));
      map = std::move(next);
      rep["final"] = report_json(report);
      all_converged = all_converged && report.converged;
      pose.reset();
      tool.carry_region.reset();
    } else {
      throw FormatError("scenario action " + std::to_string(i) + ": unknown type '" + type + "'");
    }
    char stem[32];
    std::snprintf(stem, sizeof stem, "action_%03zu", i);
    write_map(map, out / stem);
    rep["map"] = std::string(stem) + ".hmap";
    rep["volume"] = total_volume(map);
    reports.push_back(rep);
  }

  write_map(map, out / "final");
  const double drift = relative_drift(v0, total_volume(map));
  json summary{{"config", {{"geometry", {{"rows", g.rows}, {"cols", g.cols}, {"dx", g.dx}}},
                           {"soil", soil_json(cfg.soil)}}},
               {"actions", reports},
               {"initial_volume", v0},
               {"volume_drift", drift},
               {"final_hash", content_hash(map)}};
  write_json(summary, out / "reports.json");
  if (cfg.soil.boundary == Boundary::Closed && drift > 1e-9) {
    throw InvariantFailure("volume drift " + std::to_string(drift) + " exceeds 1e-9");
  }
  if (!all_converged) throw NotConverged("relaxation hit its iteration cap");
  return kOk;
}

// -------------------------------------------------------------------- plan

struct PlanArgs {
  std::string goal;
  std::string start;
  double alpha = 1.0;
  bool any_start = false;
  std::string out;
  bool execute = false;
  double dig_depth = 0.01;
  int cell_scale = 3;
  std::string config;
};

int cmd_plan(const PlanArgs& a) {
  planner::Problem p;
  p.goal = planner::read_goal(a.goal);
  p.alpha = a.alpha;
  p.dig_depth = a.dig_depth;
  if (!a.start.empty()) {
    p.start = parse_cell(a.start);
  } else if (!a.any_start) {
    throw InvalidArgument("plan: give --start row,col or --any-start");
  } else {
    const auto cells = p.goal.dug_cells();
    if (cells.empty()) throw planner::UnsolvableError("goal has no cells to dig");
    p.start = cells.front();
  }
  if (!p.goal.contains(p.start)) throw InvalidArgument("plan: start cell outside the goal grid");

  const planner::Plan plan = a.any_start ? planner::astar_plan_any_start(p) : planner::astar_plan(p);
  const auto out = resolve_out(a.out, "plan.json");

  json j{{"goal", a.goal},
         {"rows", p.goal.rows()},
         {"cols", p.goal.cols()},
         {"alpha", p.alpha},
         {"alpha_units", "steps per mismatched cell"},
         {"start", {plan.start.row, plan.start.col}},
         {"actions", actions_string(plan.actions)},
         {"path_length", plan.path_length},
         {"nodes_opened", plan.nodes_opened},
         {"optimal", plan.optimal},
         {"wall_seconds", plan.wall_seconds}};

  planner::Problem q = p;
  q.start = plan.start;
  const auto final_state = planner::replay(q, plan.actions);
  if (!(final_state.map == p.goal)) throw InvariantFailure("plan does not reproduce the goal");

  int status = kOk;
  if (a.execute) {
    RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
    const std::ptrdiff_t s = a.cell_scale;
    const std::ptrdiff_t pad = 2 * s + 2;
    const GridGeometry g{p.goal.rows() * s + 2 * pad, p.goal.cols() * s + 2 * pad, cfg.geometry.dx};
    const planner::BridgeLayout layout{pad, pad, s};
    HeightMapd map = new_heightmap(g, cfg.initial_height);
    const double v0 = total_volume(map);
    const auto strokes = planner::plan_to_strokes(plan, q, g, layout);
    const BladeParams blade = planner::bridge_blade(q, g, layout);
    ToolConfig tool;
    tool.reference_level = cfg.initial_height;
    bool converged = true;
    if (strokes.empty()) {
      // A one-cell goal: lower and lift the blade in place.
      const ToolPose pose{planner::plan_cell_center(q.start, g, layout), 0.0, cfg.initial_height - q.dig_depth};
      auto placed = apply_placement(map, pose, blade, cfg.soil).first;
      auto [next, report] = relax_to_steady(placed, cfg.soil, empty_mask(g), full_region(g));
      map = std::move(next);
      converged = report.converged;
    }
    for (const auto& st : strokes) {
      auto [next, stats] = execute_stroke(map, st, blade, cfg.soil, tool);
      map = std::move(next);
      tool.carry_region = stats.active_region;
      converged = converged && stats.final_report.converged;
    }
    std::ptrdiff_t deep = 0;
    for (const auto c : p.goal.dug_cells()) {
      const auto r0 = pad + c.row * s;
      const auto c0 = pad + c.col * s;
      if (map(r0 + s / 2, c0 + s / 2) < cfg.initial_height - q.dig_depth / 2.0) ++deep;
    }
    const auto stem = out.parent_path() / (out.stem().string() + "_executed");
    write_map(map, stem);
    const double drift = relative_drift(v0, total_volume(map));
    j["execution"] = {{"geometry", {{"rows", g.rows}, {"cols", g.cols}, {"dx", g.dx}}},
                      {"cell_scale", s},
                      {"strokes", strokes.size()},
                      {"goal_cells", p.goal.dug_count()},
                      {"goal_cells_deeper_than_half_depth", deep},
                      {"volume_drift", drift},
                      {"converged", converged},
                      {"map", stem.filename().string() + ".hmap"}};
    if (cfg.soil.boundary == Boundary::Closed && drift > 1e-9) status = kInvariantFailed;
    else if (!converged) status = kNotConverged;
  }
  write_json(j, out);
  if (status == kInvariantFailed) throw InvariantFailure("executed plan does not conserve volume");
  if (status == kNotConverged) throw NotConverged("executed plan did not reach repose");
  return kOk;
}

// ------------------------------------------------------------------ trench

struct TrenchArgs {
  bool sweep = false;
  double wheel_radius = 0.048;
  double wheel_width = 0.050;
  std::vector<double> betas{0.0, 22.5, 45.0, 67.5, 90.0};
  std::vector<double> sinkages{0.005, 0.015, 0.025};
  double beta = 0.0;
  double h0 = 0.015;
  std::ptrdiff_t grid = 160;
  double dx = 0.0025;
  std::string reference_dir;
  std::string config;
  std::string out;
};

int cmd_trench(const TrenchArgs& a) {
  trenchlab::SweepConfig sc;
  if (!a.config.empty()) {
    const json j = read_json(a.config);
    if (j.contains("soil")) sc.soil = parse_soil(j["soil"], sc.soil);
  }
  sc.wheel.radius = a.wheel_radius;
  sc.wheel.width = a.wheel_width;
  sc.geometry = {a.grid, a.grid, a.dx};
  const double scale = static_cast<double>(a.grid) * a.dx / 0.4;
  sc.start_margin *= scale;
  sc.end_margin *= scale;
  if (a.sweep) {
    sc.slip_angles_deg = a.betas;
    sc.sinkages = a.sinkages;
  } else {
    sc.slip_angles_deg = {a.beta};
    sc.sinkages = {a.h0};
  }
  if (!a.reference_dir.empty()) {
    if (!std::filesystem::is_directory(a.reference_dir)) {
      throw FormatError("reference directory " + a.reference_dir + " does not exist");
    }
    sc.reference_dir = a.reference_dir;
  }
  const auto out = resolve_out(a.out, "trench");
  const auto rows = trenchlab::sweep(sc);
  trenchlab::write_sweep(rows, out);

  json runs = json::array();
  bool converged = true;
  double worst_conservation = 0.0;
  for (const auto& r : rows) {
    runs.push_back({{"beta_deg", r.slip_angle_deg},
                    {"h0_m", r.sinkage},
                    {"depth_mm", r.depth_mm},
                    {"conservation_error", r.conservation_error},
                    {"steadiness_rms_mm", r.steadiness_rms_mm},
                    {"max_excess_slope", r.max_excess_slope},
                    {"final_iterations", r.final_iterations},
                    {"converged", r.converged},
                    {"wall_seconds", r.wall_seconds}});
    converged = converged && r.converged;
    worst_conservation = std::max(worst_conservation, r.conservation_error);
  }
  json meta{{"wheel", {{"radius", sc.wheel.radius}, {"width", sc.wheel.width},
                       {"grouser_height", sc.wheel.grouser_height},
                       {"grouser_fraction", sc.wheel.grouser_fraction}}},
            {"soil", soil_json(sc.soil)},
            {"geometry", {{"rows", sc.geometry.rows}, {"cols", sc.geometry.cols}, {"dx", sc.geometry.dx}}},
            {"initial_height", sc.initial_height},
            {"path", {{"start_x", sc.start_margin}, {"end_x", sc.geometry.width() - sc.end_margin},
                      {"y", 0.5 * sc.geometry.height()}}},
            {"runs", runs}};
  write_json(meta, out / "metadata.json");
  if (worst_conservation > 1e-6) throw InvariantFailure("trench run does not conserve volume");
  if (!converged) throw NotConverged("a trench run hit its relaxation cap");
  return kOk;
}

// ----------------------------------------------------------------- episode

struct EpisodeArgs {
  std::string scheme = "multi";
  std::string policy = "greedy";
  std::uint64_t seed = 0;
  std::size_t candidates = 64;
  std::ptrdiff_t horizon = 10;
  std::string goal;
  std::string out;
};

int cmd_episode(const EpisodeArgs& a) {
  const GridGeometry g{16, 16, 0.01};
  const HeightMapd flat = new_heightmap(g, 0.05);
  rlenv::EnvConfig cfg;
  cfg.horizon = a.horizon;
  std::mt19937_64 rng(a.seed);
  HeightMapd goal;
  if (a.scheme == "multi") {
    cfg.scheme = rlenv::Scheme::Continuous;
    cfg.blade = {0.03, 0.01, 0.01};
  } else if (a.scheme == "single") {
    cfg.scheme = rlenv::Scheme::Discrete;
    cfg.blade = {0.01, 0.01, 0.01};
    cfg.start_cell = {8, 4};
  } else {
    throw InvalidArgument("episode: scheme must be multi or single");
  }
  if (!a.goal.empty()) {
    const std::filesystem::path gp(a.goal);
    if (gp.extension() == ".txt") {
      goal = rlenv::goal_from_binary(planner::read_goal(gp), g, 0.05, 0.01);
    } else {
      goal = read_heightmap(gp);
    }
  } else if (cfg.scheme == rlenv::Scheme::Continuous) {
    // A bar trench dug by one random axis-aligned stroke.
    const bool horizontal = rlenv::uniform01(rng) < 0.5;
    const double s = 0.03 + 0.04 * rlenv::uniform01(rng);
    const double t = 0.03 + 0.10 * rlenv::uniform01(rng);
    const double len = 0.04 + 0.05 * rlenv::uniform01(rng);
    const Stroke bar = horizontal ? Stroke{{s, t}, {s + len, t}, 0.01} : Stroke{{t, s}, {t, s + len}, 0.01};
    ToolConfig tool;
    tool.reference_level = 0.05;
    goal = execute_stroke(flat, bar, cfg.blade, cfg.soil, tool).first;
  } else {
    planner::BinaryMap line(g.rows, g.cols);
    for (std::ptrdiff_t c = 4; c < 12; ++c) line.dig({8, c});
    goal = rlenv::goal_from_binary(line, g, 0.05, 0.01);
  }

  rlenv::Policy policy;
  if (a.policy == "greedy") {
    if (cfg.scheme == rlenv::Scheme::Continuous) {
      policy = [&](const rlenv::EnvState& s, std::size_t k) {
        return rlenv::greedy_baseline(s, cfg, a.candidates, a.seed * 1000003u + k);
      };
    } else {
      policy = [&](const rlenv::EnvState& s, std::size_t) {
        std::vector<rlenv::Action> moves;
        for (auto m : planner::kMoveOrder) moves.emplace_back(rlenv::DiscreteAction{m});
        return moves[rlenv::greedy_select(s, moves, cfg)];
      };
    }
  } else if (a.policy == "random") {
    policy = [&](const rlenv::EnvState& s, std::size_t) -> rlenv::Action {
      if (cfg.scheme == rlenv::Scheme::Continuous) return rlenv::sample_stroke(s.current.geometry, rng);
      return rlenv::DiscreteAction{planner::kMoveOrder[rng() % 4]};
    };
  } else {
    throw InvalidArgument("episode: policy must be greedy or random");
  }

  const auto episode = rlenv::run_episode(goal, flat, cfg, policy);
  const auto out = resolve_out(a.out, "episode.jsonl");
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  const auto sidecar = out.parent_path() / (out.stem().string() + "_maps");
  rlenv::write_episode_log(out, sidecar, episode);

  std::vector<double> rewards;
  double sum = 0.0;
  for (const auto& t : episode) {
    rewards.push_back(t.reward);
    sum += t.reward;
  }
  const auto start = rlenv::reset(goal, flat, cfg);
  const double l0 = rlenv::loss(goal, start.current);
  const double lf = episode.empty() ? l0 : rlenv::loss(goal, episode.back().next_state.current);
  json summary{{"steps", episode.size()},
               {"initial_loss", l0},
               {"final_loss", lf},
               {"reward_sum", sum},
               {"discounted_return", rlenv::discounted_return(rewards, 0.99)}};
  std::cout << summary.dump() << '\n';
  if (std::abs(sum - (l0 - lf)) > 1e-12) throw InvariantFailure("episode rewards do not telescope");
  return kOk;
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
  std::string cases = "default";
  std::string out;
  bool tables = true;
};

int cmd_bench(const BenchArgs& a) {
  std::vector<std::string> names;
  if (a.cases == "default") {
    names = bench::default_cases();
  } else {
    std::stringstream ss(a.cases);
    for (std::string item; std::getline(ss, item, ',');) names.push_back(item);
  }
  json cases = json::array();
  bool ok = true;
  for (const auto& n : names) {
    const auto r = bench::run_case(n);
    const auto stats = [](const bench::RunStats& s) {
      return json{{"cells_touched", s.cells_touched},
                  {"relax_iterations", s.relax_iterations},
                  {"final_iterations", s.final_iterations},
                  {"converged", s.converged},
                  {"final_excess_slope", s.final_excess_slope},
                  {"wall_seconds", s.wall_seconds}};
    };
    cases.push_back({{"name", r.name},
                     {"geometry", {{"rows", r.geometry.rows}, {"cols", r.geometry.cols}, {"dx", r.geometry.dx}}},
                     {"bounded", stats(r.bounded)},
                     {"full", stats(r.full)},
                     {"bit_identical_to_full", r.bit_identical},
                     {"touched_fraction", r.touched_fraction},
                     {"volume_drift", r.volume_drift}});
    ok = ok && r.bit_identical && r.bounded.cells_touched < r.full.cells_touched;
  }
  json report{{"version", SANDSHAPE_VERSION}, {"cases", cases}};
  if (a.tables) {
    json flow = json::array();
    for (const auto& s : bench::flow_rate_sweep({0.25, 0.5, 0.75, 1.0, 1.25})) {
      flow.push_back({{"factor", s.factor},
                      {"flow_rate", s.flow_rate},
                      {"final_iterations", s.final_iterations},
                      {"converged", s.converged},
                      {"within_stability_bound", s.stable}});
    }
    report["flow_rate_sweep"] = flow;
    json plans = json::array();
    for (const auto& s : bench::planner_alpha_table({1.0, 3.0, 7.2})) {
      plans.push_back({{"letter", s.letter},
                       {"alpha", s.alpha},
                       {"path_length", s.path_length},
                       {"nodes_opened", s.nodes_opened},
                       {"oracle_length", s.oracle_length},
                       {"wall_seconds", s.wall_seconds}});
    }
    report["planner_alpha"] = plans;
  }
  write_json(report, resolve_out(a.out, "bench.json"));
  if (!ok) throw InvariantFailure("bounded update differs from the full grid or touches as many cells");
  return kOk;
}

json option_json(const CLI::Option* o) {
  return {{"name", o->get_name()},
          {"description", o->get_description()},
          {"required", o->get_required()},
          {"takes_value", o->get_type_size() != 0},
          {"default", o->get_default_str()}};
}

json app_json(const CLI::App& app) {
  json j{{"name", app.get_name()}, {"description", app.get_description()}};
  json opts = json::array();
  for (const auto* o : app.get_options()) opts.push_back(option_json(o));
  j["options"] = opts;
  json subs = json::array();
  for (const auto* s : app.get_subcommands({})) subs.push_back(app_json(*s));
  if (!subs.empty()) j["subcommands"] = subs;
  return j;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  try {
    if (j.contains("geometry")) {
      const auto& g = j["geometry"];
      c.geometry.rows = g.value("rows", c.geometry.rows);
      c.geometry.cols = g.value("cols", c.geometry.cols);
      c.geometry.dx = g.value("dx", c.geometry.dx);
    }
    if (j.contains("soil")) c.soil = parse_soil(j["soil"], c.soil);
    if (j.contains("boundary")) c.soil.boundary = parse_boundary(j["boundary"].get<std::string>());
    c.initial_height = j.value("initial_height", c.initial_height);
    c.initial_map = j.value("initial_map", std::string());
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    c.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  validate(c.geometry);
  validate(c.soil, c.geometry);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c = parse_run_config(read_json(path));
  if (!c.initial_map.empty() && std::filesystem::path(c.initial_map).is_relative()) {
    c.initial_map = (path.parent_path() / c.initial_map).string();
  }
  return c;
}

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("SANDSHAPE_OUT_DIR"); env && *env) return env;
  return std::filesystem::current_path();
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Height-map sand simulation, trench planning and shaping environments", "sandshape"};
  app.set_version_flag("--version", SANDSHAPE_VERSION);
  bool help_json = false;
  app.add_flag("--help-json", help_json, "Print the command-line interface as JSON and exit");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario of tool actions on a height map");
  simulate->add_option("--config", sim.config, "Run configuration JSON");
  simulate->add_option("--scenario", sim.scenario, "Scenario JSON")->required();
  simulate->add_option("--out", sim.out, "Output directory");

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "Plan a single-stroke trench with A*");
  plan_cmd->add_option("--goal", plan.goal, "Goal grid (0 = dig, 1 = keep)")->required();
  plan_cmd->add_option("--start", plan.start, "Start cell as row,col");
  plan_cmd->add_option("--alpha", plan.alpha,
                       "Heuristic weight in steps per mismatched cell; 1 is admissible")
      ->capture_default_str();
  plan_cmd->add_flag("--any-start", plan.any_start, "Try every goal cell as the start");
  plan_cmd->add_option("--out", plan.out, "Plan JSON path");
  plan_cmd->add_flag("--execute", plan.execute, "Run the plan on the sand simulator");
  plan_cmd->add_option("--dig-depth", plan.dig_depth, "Trench depth in meters")->capture_default_str();
  plan_cmd->add_option("--cell-scale", plan.cell_scale, "Height-map cells per plan cell")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  plan_cmd->add_option("--config", plan.config, "Run configuration JSON for --execute");

  TrenchArgs trench;
  auto* trench_cmd = app.add_subcommand("trench", "Tow a wheel through sand and extract trench profiles");
  trench_cmd->add_flag("--sweep", trench.sweep, "Run the full slip angle x sinkage grid");
  trench_cmd->add_option("--wheel-radius", trench.wheel_radius, "Wheel radius in meters")->capture_default_str();
  trench_cmd->add_option("--wheel-width", trench.wheel_width, "Wheel width in meters")->capture_default_str();
  trench_cmd->add_option("--betas", trench.betas, "Slip angles in degrees for --sweep")->delimiter(',');
  trench_cmd->add_option("--sinkages", trench.sinkages, "Sinkages in meters for --sweep")->delimiter(',');
  trench_cmd->add_option("--beta", trench.beta, "Slip angle in degrees")->capture_default_str();
  trench_cmd->add_option("--h0", trench.h0, "Sinkage in meters")->capture_default_str();
  trench_cmd->add_option("--grid", trench.grid, "Grid cells per side")->capture_default_str()->check(CLI::Range(16, 4096));
  trench_cmd->add_option("--dx", trench.dx, "Cell size in meters")->capture_default_str();
  trench_cmd->add_option("--reference-dir", trench.reference_dir, "Directory of reference profile CSVs");
  trench_cmd->add_option("--config", trench.config, "JSON with a soil block");
  trench_cmd->add_option("--out", trench.out, "Output directory");

  EpisodeArgs ep;
  auto* episode = app.add_subcommand("episode", "Roll out one shaping episode and log its transitions");
  episode->add_option("--scheme", ep.scheme, "multi (strokes) or single (blade moves)")
      ->capture_default_str()
      ->check(CLI::IsMember({"multi", "single"}));
  episode->add_option("--policy", ep.policy, "greedy or random")
      ->capture_default_str()
      ->check(CLI::IsMember({"greedy", "random"}));
  episode->add_option("--seed", ep.seed, "Random seed")->capture_default_str();
  episode->add_option("--candidates", ep.candidates, "Strokes sampled per greedy step")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  episode->add_option("--horizon", ep.horizon, "Maximum steps")->capture_default_str()->check(CLI::PositiveNumber);
  episode->add_option("--goal", ep.goal, "Goal HMAP file or goal grid (.txt)");
  episode->add_option("--out", ep.out, "JSON-lines log path");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Compare bounded and full-grid updates");
  bench_cmd->add_option("--cases", bench_args.cases, "default or a comma list of case names")
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_args.out, "Report JSON path");
  bench_cmd->add_flag("!--no-tables", bench_args.tables, "Skip the flow-rate and planner tables");

  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  if (help_json) {
    json j = app_json(app);
    j["version"] = SANDSHAPE_VERSION;
    j["exit_codes"] = {{"ok", kOk},
                       {"usage", kUsage},
                       {"bad_input", kBadInput},
                       {"unsolvable", kUnsolvable},
                       {"not_converged", kNotConverged},
                       {"invariant_failed", kInvariantFailed}};
    j["environment"] = {{"SANDSHAPE_OUT_DIR", "default output directory"}};
    std::cout << j.dump(2) << '\n';
    return kOk;
  }

  const auto fail = [](const char* kind, const std::exception& e, int code) {
    std::cerr << "sandshape: " << kind << ": " << e.what() << '\n';
    return code;
  };
  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (plan_cmd->parsed()) return cmd_plan(plan);
    if (trench_cmd->parsed()) return cmd_trench(trench);
    if (episode->parsed()) return cmd_episode(ep);
    if (bench_cmd->parsed()) return cmd_bench(bench_args);
  } catch (const planner::UnsolvableError& e) {
    return fail("unsolvable", e, kUnsolvable);
  } catch (const NotConverged& e) {
    return fail("not converged", e, kNotConverged);
  } catch (const InvariantFailure& e) {
    return fail("invariant failed", e, kInvariantFailed);
  } catch (const FormatError& e) {
    return fail("bad file", e, kBadInput);
  } catch (const nlohmann::json::exception& e) {
    return fail("bad file", e, kBadInput);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("bad file", e, kBadInput);
  } catch (const std::invalid_argument& e) {
    return fail("bad input", e, kBadInput);
  } catch (const planner::InstanceTooLarge& e) {
    return fail("bad input", e, kBadInput);
  } catch (const std::runtime_error& e) {
    return fail("i/o", e, kBadInput);
  }
  std::cout << app.help();
  return kUsage;
}

}  // namespace sandshape::cli
