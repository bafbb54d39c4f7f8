#include "sandshape/rlenv.hpp"

#include "sandshape/io.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>

namespace sandshape::rlenv {
namespace {

double move_heading(planner::Move m) {
  switch (m) {
    case planner::Move::North: return -std::numbers::pi / 2.0;
    case planner::Move::East: return 0.0;
    case planner::Move::South: return std::numbers::pi / 2.0;
    case planner::Move::West: return std::numbers::pi;
  }
  return 0.0;
}

ToolPose blade_pose(const GridGeometry& g, planner::Cell c, double heading, double bottom) {
  return {cell_center(g, c.row, c.col), heading, bottom};
}

bool finish_check(const EnvState& next, const EnvConfig& config) {
  return next.step_index >= next.horizon ||
         loss(next.goal, next.current) <= done_threshold(config, next.current.geometry);
}

}  // namespace

void validate(const EnvConfig& config, const GridGeometry& g) {
  validate(config.soil, g);
  validate(config.blade, g);
  if (config.horizon < 1) throw InvalidArgument("env: horizon must be >= 1");
  if (config.done_threshold && !(*config.done_threshold >= 0.0)) {
    throw InvalidArgument("env: done_threshold must be non-negative");
  }
  if (config.scheme == Scheme::Discrete &&
      !g.contains(config.start_cell.row, config.start_cell.col)) {
    throw InvalidArgument("env: start cell out of bounds");
  }
}

double loss(const HeightMapd& goal, const HeightMapd& current) {
  check_same_geometry(goal, current);
  return (goal.heights - current.heights).norm();
}

double done_threshold(const EnvConfig& config, const GridGeometry& g) {
  if (config.done_threshold) return *config.done_threshold;
  return 1e-3 * std::sqrt(static_cast<double>(g.cell_count())) * g.dx;
}

EnvState reset(const HeightMapd& goal, const HeightMapd& initial, const EnvConfig& config) {
  check_same_geometry(goal, initial);
  const auto& g = initial.geometry;
  validate(config, g);
  EnvState s;
  s.goal = goal;
  s.current = initial;
  s.horizon = config.horizon;
  s.active_region = Region{};
  const double reference = config.reference_level ? *config.reference_level : median_height(initial);
  s.bottom_height = reference - config.blade.depth;
  if (config.scheme == Scheme::Discrete) {
    const auto pose = blade_pose(g, config.start_cell, 0.0, s.bottom_height);
    s.current = apply_placement(initial, pose, config.blade, config.soil).first;
    s.blade = config.start_cell;
  }
  s.done = loss(s.goal, s.current) <= done_threshold(config, g);
  return s;
}

Transition step(const EnvState& state, const Action& action, const EnvConfig& config) {
  if (state.done || state.step_index >= state.horizon) {
    throw InvalidArgument("env: step on a finished episode");
  }
  const auto& g = state.current.geometry;
  Transition t{state, action, 0.0, state, false, false, false};
  EnvState& next = t.next_state;

  if (const auto* d = std::get_if<DiscreteAction>(&action)) {
    if (config.scheme != Scheme::Discrete || !state.blade) {
      throw InvalidArgument("env: discrete action in a continuous environment");
    }
    const planner::Cell to = planner::step(*state.blade, d->move);
    if (!g.contains(to.row, to.col)) {
      t.no_op = true;
    } else {
      const double heading = move_heading(d->move);
      const auto from = blade_pose(g, *state.blade, heading, state.bottom_height);
      const auto dest = blade_pose(g, to, heading, state.bottom_height);
      next.current = apply_move(state.current, from, dest, config.blade, config.soil).first;
      next.blade = to;
    }
  } else {
    if (config.scheme != Scheme::Continuous) {
      throw InvalidArgument("env: continuous action in a discrete environment");
    }
    const auto& a = std::get<ContinuousAction>(action);
    // Endpoints are kept within the span of cell centers.
    const double lo = g.dx / 2.0;
    const auto clampx = [&](double v) { return std::clamp(v, lo, g.width() - lo); };
    const auto clampy = [&](double v) { return std::clamp(v, lo, g.height() - lo); };
    const Stroke stroke{{clampx(a.x0), clampy(a.y0)}, {clampx(a.x1), clampy(a.y1)}, config.blade.depth};
    t.clamped = stroke.start.x != a.x0 || stroke.start.y != a.y0 || stroke.end.x != a.x1 ||
                stroke.end.y != a.y1;
    if (stroke.length() < g.dx) {
      t.no_op = true;
    } else {
      ToolConfig tool;
      tool.reference_level = state.bottom_height + config.blade.depth;
      if (!state.active_region.empty()) tool.carry_region = state.active_region;
      auto [map, stats] = execute_stroke(state.current, stroke, config.blade, config.soil, tool);
      next.current = std::move(map);
      next.active_region = stats.active_region;
    }
  }

  ++next.step_index;
  t.reward = loss(state.goal, state.current) - loss(next.goal, next.current);
  next.done = finish_check(next, config);
  t.done = next.done;
  return t;
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("discounted_return: gamma must be in [0, 1]");
  double total = 0.0;
  double weight = 1.0;
  for (double r : rewards) {
    total += weight * r;
    weight *= gamma;
  }
  return total;
}

Transition relabel_hindsight(const Transition& t) {
  Transition out = t;
  out.state.goal = t.next_state.current;
  out.next_state.goal = t.next_state.current;
  out.reward = loss(out.state.goal, out.state.current) - loss(out.next_state.goal, out.next_state.current);
  out.done = true;
  out.next_state.done = true;
  return out;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

ContinuousAction sample_stroke(const GridGeometry& g, std::mt19937_64& rng) {
  ContinuousAction a;
  a.x0 = uniform01(rng) * g.width();
  a.y0 = uniform01(rng) * g.height();
  a.x1 = uniform01(rng) * g.width();
  a.y1 = uniform01(rng) * g.height();
  return a;
}

std::size_t greedy_select(const EnvState& state, const std::vector<Action>& candidates,
                          const EnvConfig& config) {
  if (candidates.empty()) throw InvalidArgument("greedy_select: no candidates");
  std::size_t best = 0;
  double best_reward = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double r = step(state, candidates[i], config).reward;
    if (r > best_reward) {
      best_reward = r;
      best = i;
    }
  }
  return best;
}

Action greedy_baseline(const EnvState& state, const EnvConfig& config, std::size_t candidate_count,
                       std::uint64_t rng_seed) {
  if (config.scheme != Scheme::Continuous) {
    throw InvalidArgument("greedy_baseline: needs the continuous scheme");
  }
  if (candidate_count == 0) throw InvalidArgument("greedy_baseline: candidate_count must be >= 1");
  std::mt19937_64 rng(rng_seed);
  std::vector<Action> candidates;
  candidates.reserve(candidate_count);
  for (std::size_t i = 0; i < candidate_count; ++i) {
    candidates.emplace_back(sample_stroke(state.current.geometry, rng));
  }
  if (candidate_count == 1) return candidates.front();
  return candidates[greedy_select(state, candidates, config)];
}

std::vector<Transition> run_episode(const HeightMapd& goal, const HeightMapd& initial,
                                    const EnvConfig& config, const Policy& policy) {
  std::vector<Transition> episode;
  EnvState state = reset(goal, initial, config);
  while (!state.done && state.step_index < state.horizon) {
    episode.push_back(step(state, policy(state, episode.size()), config));
    state = episode.back().next_state;
  }
  return episode;
}

namespace {

nlohmann::json action_json(const Action& a) {
  if (const auto* d = std::get_if<DiscreteAction>(&a)) {
    return {{"type", "discrete"}, {"move", std::string(1, planner::move_letter(d->move))}};
  }
  const auto& c = std::get<ContinuousAction>(a);
  return {{"type", "continuous"}, {"x0", c.x0}, {"y0", c.y0}, {"x1", c.x1}, {"y1", c.y1}};
}

}  // namespace

void write_episode_log(const std::filesystem::path& path, const std::filesystem::path& sidecar_dir,
                       const std::vector<Transition>& episode) {
  std::filesystem::create_directories(sidecar_dir);
  std::set<std::string> written;
  const auto store = [&](const HeightMapd& h) {
    const std::string hash = content_hash(h);
    if (written.insert(hash).second) {
      const auto file = sidecar_dir / (hash + ".hmap");
      if (!std::filesystem::exists(file)) write_heightmap(h, file);
    }
    return hash;
  };
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write episode log " + path.string());
  for (const auto& t : episode) {
    nlohmann::json line{
        {"step", t.state.step_index},
        {"action", action_json(t.action)},
        {"reward", t.reward},
        {"done", t.done},
        {"clamped", t.clamped},
        {"no_op", t.no_op},
        {"goal", store(t.state.goal)},
        {"current", store(t.state.current)},
        {"next", store(t.next_state.current)},
        {"loss", loss(t.state.goal, t.state.current)},
        {"next_loss", loss(t.next_state.goal, t.next_state.current)},
    };
    if (t.next_state.blade) line["blade"] = {t.next_state.blade->row, t.next_state.blade->col};
    out << line.dump() << '\n';
  }
  if (!out) throw FormatError("failed writing episode log " + path.string());
}

HeightMapd goal_from_binary(const planner::BinaryMap& map, const GridGeometry& g, double reference,
                            double dig_depth, const planner::BridgeLayout& layout) {
  HeightMapd h = new_heightmap(g, reference);
  const auto s = layout.cell_scale;
  if (s < 1 || layout.origin_row + map.rows() * s > g.rows || layout.origin_col + map.cols() * s > g.cols) {
    throw InvalidArgument("goal_from_binary: goal does not fit on the height map");
  }
  for (const auto cell : map.dug_cells()) {
    h.heights.block(layout.origin_row + cell.row * s, layout.origin_col + cell.col * s, s, s).array() =
        reference - dig_depth;
  }
  return h;
}

}  // namespace sandshape::rlenv
