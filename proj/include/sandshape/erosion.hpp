#pragma once

#include "sandshape/heightmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>

namespace sandshape {

/// Flux coefficient that lets an isolated above-repose pair land exactly on
/// the repose slope in one step, on a grid whose cells have area dx^2.
inline double pairwise_flow_rate(double dx) { return dx * dx / 2.0; }

/// Per-connectivity optimum dx^2 / n for n simultaneous outflows per cell:
/// dx^2/8 for Eight, dx^2/4 for Four.
inline double optimal_flow_rate(Connectivity connectivity, double dx) {
  if (!(dx > 0.0)) throw InvalidArgument("optimal_flow_rate: dx must be positive");
  return connectivity == Connectivity::Eight ? dx * dx / 8.0 : dx * dx / 4.0;
}

inline double effective_flow_rate(const SoilParams& soil, double dx) {
  return soil.flow_rate ? *soil.flow_rate : optimal_flow_rate(soil.connectivity, dx);
}

template <typename Scalar>
struct StepResult {
  HeightMap<Scalar> map;
  Scalar max_excess;  // max pair excess slope of the input state
  Scalar max_delta;   // max |dh| applied by the step
  Region changed;     // bounding box of cells whose height changed
};

struct RelaxReport {
  int iterations = 0;
  bool converged = false;
  double final_excess_slope = 0.0;
  std::int64_t cells_touched = 0;  // sum over iterations of region cell counts
  Connectivity connectivity = Connectivity::Eight;
  Region final_region;
};

struct RelaxOptions {
  std::optional<int> max_iters;  // overrides the soil's cap
  // Grow the region whenever a changed cell reaches its border, so that the
  // bounded result always matches the full-grid result bit for bit.
  bool grow_region = false;
  std::ptrdiff_t grow_margin = 4;
};

namespace detail {

template <typename Scalar>
Scalar pair_flux(Scalar upper, Scalar lower, Scalar dist, Scalar repose, Scalar k,
                 Scalar& excess) {
  // Positive result: sand flows from `upper` to `lower`.
  const Scalar slope = (upper - lower) / dist;
  excess = std::abs(slope) - repose;
  if (slope > repose) return k * dist * (slope - repose);
  if (slope < -repose) return -(k * dist * (-slope - repose));
  return Scalar(0);
}

inline void check_mask(const CellMask& mask, const GridGeometry& g) {
  if (!(mask.geometry == g) || mask.occupied.rows() != g.rows || mask.occupied.cols() != g.cols) {
    throw InvalidArgument("mask geometry does not match height map");
  }
}

template <typename Scalar>
struct StepStats {
  Scalar max_excess;
  Scalar max_delta;
  Region changed;
};

// Pass 2 reads only the flux tables and each cell's own height, so the update
// can be written back into `h` directly.
template <typename Scalar>
StepStats<Scalar> relax_step_in_place(HeightMap<Scalar>& h, const SoilParams& soil,
                                      const CellMask& mask, const Region& region_in) {
  const GridGeometry& g = h.geometry;
  check_mask(mask, g);
  const Scalar repose = static_cast<Scalar>(soil.repose_slope());
  StepStats<Scalar> result{-repose, Scalar(0), Region{}};

  const Region region = clamp(region_in, g);
  if (region.empty()) return result;

  const Scalar k = static_cast<Scalar>(effective_flow_rate(soil, g.dx));
  const Scalar inv_area = Scalar(1) / static_cast<Scalar>(g.cell_area());
  const Scalar dist_orth = static_cast<Scalar>(g.dx);
  const Scalar dist_diag = static_cast<Scalar>(std::numbers::sqrt2 * g.dx);
  const bool eight = soil.connectivity == Connectivity::Eight;
  const bool open = soil.boundary == Boundary::Open;

  const auto rows = region.rows();
  const auto cols = region.cols();
  const auto stride = g.cols;
  Scalar* hp = h.heights.data();
  const bool* mp = mask.occupied.data();

  // Forward flux (N, NE, E, SE) out of each region cell, stored with a zero
  // border so that reverse lookups need no bounds checks.
  const auto fcols = cols + 2;
  std::array<Grid<Scalar>, 4> forward;
  for (auto& f : forward) f = Grid<Scalar>::Zero(rows + 2, fcols);

  Scalar max_excess = std::numeric_limits<Scalar>::lowest();
  bool any_pair = false;

  for (std::size_t dir = 0; dir < 4; ++dir) {
    if (!eight && is_diagonal(dir)) continue;
    const auto dr = kNeighborOrder[dir].dr;
    const auto dc = kNeighborOrder[dir].dc;
    const Scalar dist = is_diagonal(dir) ? dist_diag : dist_orth;
    // Rows and columns whose forward neighbor stays inside the region.
    const auto r0 = std::max(region.row_min, region.row_min - dr);
    const auto r1 = std::min(region.row_max, region.row_max - dr);
    const auto c0 = std::max(region.col_min, region.col_min - dc);
    const auto c1 = std::min(region.col_max, region.col_max - dc);
    Scalar* fp = forward[dir].data();
    for (auto r = r0; r <= r1; ++r) {
      const Scalar* row = hp + r * stride;
      const Scalar* nrow = hp + (r + dr) * stride + dc;
      const bool* mrow = mp + r * stride;
      const bool* nmrow = mp + (r + dr) * stride + dc;
      Scalar* frow = fp + (r - region.row_min + 1) * fcols + 1 - region.col_min;
      for (auto c = c0; c <= c1; ++c) {
        if (mrow[c] || nmrow[c]) continue;
        Scalar excess;
        frow[c] = pair_flux(row[c], nrow[c], dist, repose, k, excess);
        if (excess > max_excess) max_excess = excess;
        any_pair = true;
      }
    }
  }

  const Scalar* f0 = forward[0].data();
  const Scalar* f1 = forward[1].data();
  const Scalar* f2 = forward[2].data();
  const Scalar* f3 = forward[3].data();
  Scalar max_delta = 0;
  Region changed{};
  for (std::ptrdiff_t r = region.row_min; r <= region.row_max; ++r) {
    const bool edge_row = r == 0 || r == g.rows - 1;
    for (std::ptrdiff_t c = region.col_min; c <= region.col_max; ++c) {
      if (mp[r * stride + c]) continue;
      const auto i = (r - region.row_min + 1) * fcols + (c - region.col_min + 1);
      Scalar flux_sum = 0;
      if (open && (edge_row || c == 0 || c == g.cols - 1)) {
        // Edge cell under an open boundary: pair with a virtual exterior cell
        // at height 0, in the same direction order.
        const std::array<std::ptrdiff_t, 8> reverse{i, i, i, i, i + fcols, i + fcols - 1, i - 1, i - fcols - 1};
        const std::array<const Scalar*, 8> table{f0, f1, f2, f3, f0, f1, f2, f3};
        for (std::size_t dir = 0; dir < 8; ++dir) {
          if (!eight && is_diagonal(dir)) continue;
          const auto nr = r + kNeighborOrder[dir].dr;
          const auto nc = c + kNeighborOrder[dir].dc;
          if (!g.contains(nr, nc)) {
            Scalar excess;
            const Scalar q = pair_flux(hp[r * stride + c], Scalar(0),
                                               is_diagonal(dir) ? dist_diag : dist_orth, repose, k, excess);
            max_excess = std::max(max_excess, excess);
            any_pair = true;
            flux_sum -= q;
            continue;
          }
          if (dir < 4) {
            flux_sum -= table[dir][reverse[dir]];
          } else {
            flux_sum += table[dir][reverse[dir]];
          }
        }
      } else {
        // Zero entries leave the running sum unchanged, so every direction is
        // summed unconditionally.
        flux_sum -= f0[i];
        flux_sum -= f1[i];
        flux_sum -= f2[i];
        flux_sum -= f3[i];
        flux_sum += f0[i + fcols];
        flux_sum += f1[i + fcols - 1];
        flux_sum += f2[i - 1];
        flux_sum += f3[i - fcols - 1];
      }
      if (flux_sum != Scalar(0)) {
        const Scalar delta = flux_sum * inv_area;
        hp[r * stride + c] += delta;
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

}  // namespace detail

/// One synchronous relaxation sweep over `region`. Each unmasked neighbor pair
/// inside the region whose slope exceeds repose exchanges
///   q = k * d * (|slope| - tan(repose))
/// from the higher to the lower cell, and each cell changes by the sum of its
/// pair fluxes over dx^2, accumulated in N, NE, E, SE, S, SW, W, NW order.
/// Masked cells and cells outside the region are left as they are.
template <typename Scalar>
StepResult<Scalar> relax_step(const HeightMap<Scalar>& h, const SoilParams& soil,
                              const CellMask& mask, const Region& region) {
  HeightMap<Scalar> map = h;
  const auto stats = detail::relax_step_in_place(map, soil, mask, region);
  return {std::move(map), stats.max_excess, stats.max_delta, stats.changed};
}

namespace detail {

inline bool touches_inner_border(const Region& changed, const Region& region, const GridGeometry& g) {
  if (changed.empty()) return false;
  return (changed.row_min <= region.row_min && region.row_min > 0) ||
         (changed.row_max >= region.row_max && region.row_max < g.rows - 1) ||
         (changed.col_min <= region.col_min && region.col_min > 0) ||
         (changed.col_max >= region.col_max && region.col_max < g.cols - 1);
}

}  // namespace detail

/// Repeats relax_step until the input state's max excess slope is within
/// slope_tolerance(soil). That last step is the verification pass, so a map
/// already at repose reports one iteration. Non-convergence is reported, never
/// thrown.
template <typename Scalar>
std::pair<HeightMap<Scalar>, RelaxReport> relax_to_steady(const HeightMap<Scalar>& h,
                                                          const SoilParams& soil,
                                                          const CellMask& mask,
                                                          const Region& region_in,
                                                          const RelaxOptions& options = {}) {
  const GridGeometry& g = h.geometry;
  const int max_iters = options.max_iters ? *options.max_iters : effective_max_iters(soil, g);

  const double tolerance = slope_tolerance(soil, g);
  RelaxReport report;
  report.connectivity = soil.connectivity;
  Region region = clamp(region_in, g);
  HeightMap<Scalar> current = h;

  while (report.iterations < max_iters) {
    const auto step = detail::relax_step_in_place(current, soil, mask, region);
    ++report.iterations;
    report.cells_touched += region.cell_count();
    if (static_cast<double>(step.max_excess) <= tolerance) {
      report.converged = true;
      break;
    }
    if (options.grow_region && detail::touches_inner_border(step.changed, region, g)) {
      region = merge(region, dilate(step.changed, options.grow_margin, g));
    }
  }
  report.final_excess_slope = static_cast<double>(local_excess_slope(current, soil, mask));
  report.final_region = region;
  return {std::move(current), report};
}

}  // namespace sandshape
