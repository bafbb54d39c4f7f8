#include "bench.hpp"

#include "sandshape/planner.hpp"
#include "sandshape/trenchlab.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace sandshape::bench {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  HeightMapd map;
  RunStats stats;
};

void add(RunStats& total, const StrokeStats& s) {
  total.cells_touched += s.cells_touched;
  total.relax_iterations += s.relax_iterations_total;
  total.final_iterations = s.final_report.iterations;
  total.converged = s.final_report.converged;
  total.final_excess_slope = s.final_report.final_excess_slope;
}

Outcome run_strokes(const GridGeometry& g, const std::vector<Stroke>& strokes, const BladeParams& blade,
                    const SoilParams& soil, UpdateMode mode) {
  const auto t0 = Clock::now();
  HeightMapd map = new_heightmap(g, 0.05);
  RunStats stats;
  ToolConfig config;
  config.mode = mode;
  config.reference_level = 0.05;
  for (const auto& s : strokes) {
    auto [next, st] = execute_stroke(map, s, blade, soil, config);
    map = std::move(next);
    add(stats, st);
    config.carry_region = st.active_region;
  }
  stats.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return {std::move(map), stats};
}

Outcome run_tow(UpdateMode mode) {
  const auto t0 = Clock::now();
  const GridGeometry g{160, 160, 0.0025};
  const HeightMapd flat = new_heightmap(g, 0.1);
  const trenchlab::TowRun run{0.015, 0.0, {0.06, 0.2}, {0.3, 0.2}};
  ToolConfig config;
  config.mode = mode;
  config.reference_level = 0.1;
  auto res = trenchlab::tow_wheel(flat, trenchlab::WheelParams{}, run, trenchlab::trench_soil(), config);
  RunStats stats;
  add(stats, res.stats);
  stats.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return {std::move(res.map), stats};
}

const Stroke kStroke32{{0.08, 0.165}, {0.24, 0.165}, 0.01};
const BladeParams kBlade{0.05, 0.01, 0.01};

}  // namespace

std::vector<std::string> default_cases() { return {"stroke32", "cross64", "tow160"}; }

CaseReport run_case(const std::string& name) {
  CaseReport report;
  report.name = name;
  Outcome bounded;
  Outcome full;
  if (name == "stroke32" || name == "cross64") {
    const bool cross = name == "cross64";
    report.geometry = cross ? GridGeometry{64, 64, 0.01} : GridGeometry{32, 32, 0.01};
    const std::vector<Stroke> strokes =
        cross ? std::vector<Stroke>{{{0.12, 0.325}, {0.52, 0.325}, 0.01}, {{0.325, 0.12}, {0.325, 0.52}, 0.01}}
              : std::vector<Stroke>{kStroke32};
    const SoilParams soil;
    bounded = run_strokes(report.geometry, strokes, kBlade, soil, UpdateMode::Bounded);
    full = run_strokes(report.geometry, strokes, kBlade, soil, UpdateMode::Full);
    report.volume_drift = std::abs(total_volume(bounded.map) - 0.05 * report.geometry.cell_count() *
                                                                 report.geometry.cell_area()) /
                          (0.05 * report.geometry.cell_count() * report.geometry.cell_area());
  } else if (name == "tow160") {
    report.geometry = GridGeometry{160, 160, 0.0025};
    bounded = run_tow(UpdateMode::Bounded);
    full = run_tow(UpdateMode::Full);
    const double v0 = 0.1 * report.geometry.cell_count() * report.geometry.cell_area();
    report.volume_drift = std::abs(total_volume(bounded.map) - v0) / v0;
  } else {
    throw std::invalid_argument("unknown bench case '" + name + "'");
  }
  report.bounded = bounded.stats;
  report.full = full.stats;
  report.bit_identical = bit_identical(bounded.map, full.map);
  report.touched_fraction = full.stats.cells_touched > 0
                                ? static_cast<double>(bounded.stats.cells_touched) /
                                      static_cast<double>(full.stats.cells_touched)
                                : 0.0;
  return report;
}

std::vector<FlowRateSample> flow_rate_sweep(const std::vector<double>& factors) {
  const GridGeometry g{32, 32, 0.01};
  std::vector<FlowRateSample> out;
  for (double f : factors) {
    FlowRateSample s;
    s.factor = f;
    SoilParams soil;
    s.flow_rate = f * optimal_flow_rate(soil.connectivity, g.dx);
    soil.flow_rate = s.flow_rate;
    s.stable = s.flow_rate <= flow_rate_bound(soil.connectivity, g.dx) * (1.0 + 1e-12);
    const auto o = run_strokes(g, {kStroke32}, kBlade, soil, UpdateMode::Bounded);
    s.final_iterations = o.stats.final_iterations;
    s.converged = o.stats.converged;
    out.push_back(s);
  }
  return out;
}

std::vector<PlannerSample> planner_alpha_table(const std::vector<double>& alphas) {
  std::vector<PlannerSample> out;
  for (const auto& letter : planner::letter_suite()) {
    planner::Problem p{planner::goal_from_rows(letter.rows), letter.start, 0.01, 1.0};
    const auto oracle = planner::bfs_oracle(p);
    for (double a : alphas) {
      p.alpha = a;
      const auto plan = planner::astar_plan(p);
      out.push_back({letter.name, a, plan.path_length, plan.nodes_opened, oracle ? *oracle : -1, plan.wall_seconds});
    }
  }
  return out;
}

}  // namespace sandshape::bench
