#pragma once

// Slow, direct implementations used as references by the tests.

#include "sandshape/erosion.hpp"
#include "sandshape/planner.hpp"

#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>

namespace sandshape::oracle {

/// One relaxation sweep written pair by pair: forward fluxes out of every
/// region cell, then each cell sums its eight pair fluxes in neighbor order.
template <typename Scalar>
StepResult<Scalar> naive_relax_step(const HeightMap<Scalar>& h, const SoilParams& soil, const CellMask& mask,
                                    const Region& region_in) {
  const GridGeometry& g = h.geometry;
  const Scalar repose = static_cast<Scalar>(soil.repose_slope());
  StepResult<Scalar> result{h, -repose, Scalar(0), Region{}};
  const Region region = clamp(region_in, g);
  if (region.empty()) return result;

  const Scalar k = static_cast<Scalar>(effective_flow_rate(soil, g.dx));
  const Scalar inv_area = Scalar(1) / static_cast<Scalar>(g.cell_area());
  const Scalar orth = static_cast<Scalar>(g.dx);
  const Scalar diag = static_cast<Scalar>(std::numbers::sqrt2 * g.dx);
  const bool eight = soil.connectivity == Connectivity::Eight;
  const bool open = soil.boundary == Boundary::Open;

  auto flux = [&](Scalar upper, Scalar lower, Scalar dist, Scalar& excess) {
    const Scalar slope = (upper - lower) / dist;
    excess = std::abs(slope) - repose;
    if (slope > repose) return k * dist * (slope - repose);
    if (slope < -repose) return -(k * dist * (-slope - repose));
    return Scalar(0);
  };

  std::array<Grid<Scalar>, 4> forward;
  for (auto& f : forward) f = Grid<Scalar>::Zero(region.rows(), region.cols());
  Scalar max_excess = std::numeric_limits<Scalar>::lowest();
  bool any_pair = false;

  for (auto r = region.row_min; r <= region.row_max; ++r) {
    for (auto c = region.col_min; c <= region.col_max; ++c) {
      if (mask(r, c)) continue;
      for (std::size_t dir = 0; dir < 4; ++dir) {
        if (!eight && is_diagonal(dir)) continue;
        const auto nr = r + kNeighborOrder[dir].dr;
        const auto nc = c + kNeighborOrder[dir].dc;
        if (!region.contains(nr, nc) || mask(nr, nc)) continue;
        Scalar excess;
        forward[dir](r - region.row_min, c - region.col_min) =
            flux(h(r, c), h(nr, nc), is_diagonal(dir) ? diag : orth, excess);
        max_excess = std::max(max_excess, excess);
        any_pair = true;
      }
    }
  }

  Scalar max_delta = 0;
  Region changed{};
  for (auto r = region.row_min; r <= region.row_max; ++r) {
    for (auto c = region.col_min; c <= region.col_max; ++c) {
      if (mask(r, c)) continue;
      Scalar flux_sum = 0;
      for (std::size_t dir = 0; dir < 8; ++dir) {
        if (!eight && is_diagonal(dir)) continue;
        const auto nr = r + kNeighborOrder[dir].dr;
        const auto nc = c + kNeighborOrder[dir].dc;
        if (!g.contains(nr, nc)) {
          if (!open) continue;
          Scalar excess;
          const Scalar q = flux(h(r, c), Scalar(0), is_diagonal(dir) ? diag : orth, excess);
          max_excess = std::max(max_excess, excess);
          any_pair = true;
          flux_sum -= q;
          continue;
        }
        if (!region.contains(nr, nc)) continue;
        if (dir < 4) {
          flux_sum -= forward[dir](r - region.row_min, c - region.col_min);
        } else {
          flux_sum += forward[opposite(dir)](nr - region.row_min, nc - region.col_min);
        }
      }
      if (flux_sum != Scalar(0)) {
        const Scalar delta = flux_sum * inv_area;
        result.map(r, c) = h(r, c) + delta;
        max_delta = std::max(max_delta, std::abs(delta));
        changed = merge(changed, Region{r, r, c, c});
      }
    }
  }
  result.max_excess = any_pair ? max_excess : -repose;
  result.max_delta = max_delta;
  result.changed = changed;
  return result;
}

/// Exact cost-to-go for every state reachable from the problem's start:
/// forward enumeration of non-overdug states, then a backward BFS from the
/// goal states over the reversed edges.
inline std::map<std::pair<std::vector<std::uint64_t>, std::ptrdiff_t>, std::ptrdiff_t> cost_to_go(
    const planner::Problem& p) {
  using planner::PlanState;
  using Key = std::pair<std::vector<std::uint64_t>, std::ptrdiff_t>;
  auto key = [&](const PlanState& s) { return Key{s.map.words(), s.blade.row * p.goal.cols() + s.blade.col}; };

  std::map<Key, std::vector<Key>> reverse;
  std::map<Key, bool> is_goal;
  std::deque<PlanState> frontier{planner::initial_state(p)};
  is_goal[key(frontier.front())] = frontier.front().map == p.goal;
  while (!frontier.empty()) {
    const PlanState s = frontier.front();
    frontier.pop_front();
    for (const auto& [move, next] : planner::successors(s)) {
      if (!next.map.dug_subset_of(p.goal)) continue;
      const Key nk = key(next);
      reverse[nk].push_back(key(s));
      if (!is_goal.contains(nk)) {
        is_goal[nk] = next.map == p.goal;
        frontier.push_back(next);
      }
    }
  }

  std::map<Key, std::ptrdiff_t> dist;
  std::deque<Key> queue;
  for (const auto& [k, goal] : is_goal) {
    if (goal) {
      dist[k] = 0;
      queue.push_back(k);
    }
  }
  while (!queue.empty()) {
    const Key k = queue.front();
    queue.pop_front();
    for (const auto& prev : reverse[k]) {
      if (!dist.contains(prev)) {
        dist[prev] = dist[k] + 1;
        queue.push_back(prev);
      }
    }
  }
  return dist;
}

}  // namespace sandshape::oracle
