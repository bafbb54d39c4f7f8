#pragma once

#include "sandshape/heightmap.hpp"
#include "sandshape/planner.hpp"
#include "sandshape/tool.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <variant>
#include <vector>

namespace sandshape::rlenv {

enum class Scheme { Discrete, Continuous };

struct DiscreteAction {
  planner::Move move;
  friend bool operator==(const DiscreteAction&, const DiscreteAction&) = default;
};

/// Straight push from (x0, y0) to (x1, y1), in meters.
struct ContinuousAction {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  friend bool operator==(const ContinuousAction&, const ContinuousAction&) = default;
};

using Action = std::variant<DiscreteAction, ContinuousAction>;

struct EnvConfig {
  Scheme scheme = Scheme::Continuous;
  BladeParams blade{};           // blade.depth is the cutting depth
  SoilParams soil{};
  std::ptrdiff_t horizon = 50;
  std::optional<double> done_threshold;  // unset: 1e-3 * sqrt(cells) * dx
  planner::Cell start_cell{};    // discrete scheme: where the blade is lowered
  std::optional<double> reference_level;  // unset: median of the initial map
};

void validate(const EnvConfig& config, const GridGeometry& g);

struct EnvState {
  HeightMapd goal;
  HeightMapd current;
  std::ptrdiff_t step_index = 0;
  std::ptrdiff_t horizon = 0;
  bool done = false;
  double bottom_height = 0.0;          // blade bottom for every action
  std::optional<planner::Cell> blade;  // discrete scheme only
  Region active_region;                // cells that may still be above repose

  friend bool operator==(const EnvState& a, const EnvState& b) {
    return bit_identical(a.goal, b.goal) && bit_identical(a.current, b.current) &&
           a.step_index == b.step_index && a.horizon == b.horizon && a.done == b.done &&
           a.bottom_height == b.bottom_height && a.blade == b.blade &&
           a.active_region == b.active_region;
  }
};

struct Transition {
  EnvState state;
  Action action;
  double reward = 0.0;
  EnvState next_state;
  bool done = false;
  bool clamped = false;  // a continuous coordinate was pulled into the grid
  bool no_op = false;    // the action could not move the blade
};

/// Root-sum-of-squares height difference over cells, in meters.
double loss(const HeightMapd& goal, const HeightMapd& current);

double done_threshold(const EnvConfig& config, const GridGeometry& g);

/// Fresh state at step 0. The discrete scheme lowers the blade at the start
/// cell here, so the first action is already a move.
EnvState reset(const HeightMapd& goal, const HeightMapd& initial, const EnvConfig& config);

/// Applies one action: a full stroke (continuous) or a one-cell blade move
/// (discrete). reward = loss before - loss after.
Transition step(const EnvState& state, const Action& action, const EnvConfig& config);

double discounted_return(const std::vector<double>& rewards, double gamma = 0.99);

/// Same transition with the goal replaced by the achieved next map.
Transition relabel_hindsight(const Transition& t);

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
double uniform01(std::mt19937_64& rng);

/// Random stroke with both endpoints uniform over the grid.
ContinuousAction sample_stroke(const GridGeometry& g, std::mt19937_64& rng);

/// Index of the candidate with the largest one-step reward (first on ties).
std::size_t greedy_select(const EnvState& state, const std::vector<Action>& candidates,
                          const EnvConfig& config);

/// Samples candidate_count strokes from rng_seed and returns the greedy pick.
Action greedy_baseline(const EnvState& state, const EnvConfig& config, std::size_t candidate_count,
                       std::uint64_t rng_seed);

using Policy = std::function<Action(const EnvState&, std::size_t step)>;

/// Runs from `initial` until done; at most the horizon.
std::vector<Transition> run_episode(const HeightMapd& goal, const HeightMapd& initial,
                                    const EnvConfig& config, const Policy& policy);

/// JSON-lines log, one transition per line. Maps are stored once each as
/// <hash>.hmap files in `sidecar_dir` and referenced by hash.
void write_episode_log(const std::filesystem::path& path, const std::filesystem::path& sidecar_dir,
                       const std::vector<Transition>& episode);

/// Lifts a planner goal grid to heights: dug cells at reference - dig_depth.
/// Plan cell (r, c) covers a layout.cell_scale block, as in plan_to_strokes.
HeightMapd goal_from_binary(const planner::BinaryMap& map, const GridGeometry& g, double reference,
                            double dig_depth, const planner::BridgeLayout& layout = {});

}  // namespace sandshape::rlenv
