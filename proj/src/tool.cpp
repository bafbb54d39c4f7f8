#include "sandshape/tool.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sandshape {
namespace {

constexpr double kGeomEps = 1e-9;  // relative to dx

std::size_t direction_index(int dr, int dc) {
  for (std::size_t i = 0; i < kNeighborOrder.size(); ++i) {
    if (kNeighborOrder[i].dr == dr && kNeighborOrder[i].dc == dc) return i;
  }
  return 0;
}

Region footprint_search_box(const ToolPose& pose, const BladeParams& blade, const GridGeometry& g) {
  const double ux = std::cos(pose.heading);
  const double uy = std::sin(pose.heading);
  const double ht = blade.thickness / 2.0;
  const double hw = blade.width / 2.0;
  // Half extents of the rotated rectangle along x and y.
  const double ex = std::abs(ux) * ht + std::abs(uy) * hw;
  const double ey = std::abs(uy) * ht + std::abs(ux) * hw;
  const auto lo = [&](double v) { return static_cast<std::ptrdiff_t>(std::floor(v / g.dx - 0.5)) - 1; };
  const auto hi = [&](double v) { return static_cast<std::ptrdiff_t>(std::ceil(v / g.dx - 0.5)) + 1; };
  return Region{lo(pose.center.y - ey), hi(pose.center.y + ey), lo(pose.center.x - ex),
                hi(pose.center.x + ex)};
}

Region mask_bounds(const CellMask& mask) {
  Region box{};
  for (std::ptrdiff_t r = 0; r < mask.geometry.rows; ++r) {
    for (std::ptrdiff_t c = 0; c < mask.geometry.cols; ++c) {
      if (mask(r, c)) box = merge(box, Region{r, r, c, c});
    }
  }
  return box;
}

/// Nearest unoccupied cell by Chebyshev ring, row-major within a ring.
std::pair<std::ptrdiff_t, std::ptrdiff_t> nearest_free(const CellMask& occupied, std::ptrdiff_t r,
                                                       std::ptrdiff_t c) {
  const auto& g = occupied.geometry;
  const auto max_ring = std::max(g.rows, g.cols);
  for (std::ptrdiff_t ring = 1; ring <= max_ring; ++ring) {
    for (auto rr = r - ring; rr <= r + ring; ++rr) {
      for (auto cc = c - ring; cc <= c + ring; ++cc) {
        if (std::max(std::abs(rr - r), std::abs(cc - c)) != ring) continue;
        if (g.contains(rr, cc) && !occupied(rr, cc)) return {rr, cc};
      }
    }
  }
  throw InvalidArgument("tool covers the whole grid; nowhere to deposit sand");
}

/// First unoccupied cell stepping from (r, c) along grid direction `dir`.
std::pair<std::ptrdiff_t, std::ptrdiff_t> deposit_target(const CellMask& occupied, std::ptrdiff_t r,
                                                         std::ptrdiff_t c, std::size_t dir) {
  const auto& g = occupied.geometry;
  auto rr = r;
  auto cc = c;
  while (true) {
    rr += kNeighborOrder[dir].dr;
    cc += kNeighborOrder[dir].dc;
    if (!g.contains(rr, cc)) break;
    if (!occupied(rr, cc)) return {rr, cc};
  }
  return nearest_free(occupied, r, c);
}

void deposit(HeightMapd& h, const CellMask& occupied, std::ptrdiff_t r, std::ptrdiff_t c,
             std::size_t dir, double amount, Region& modified) {
  if (amount == 0.0) return;
  const auto [tr, tc] = deposit_target(occupied, r, c, dir);
  h(tr, tc) += amount;
  modified = merge(modified, Region{tr, tr, tc, tc});
}

template <typename Distribute>
Displacement push(HeightMapd& h, const CellMask& occupied, double bottom, Distribute&& distribute) {
  Displacement out;
  const auto& g = h.geometry;
  for (std::ptrdiff_t r = 0; r < g.rows; ++r) {
    for (std::ptrdiff_t c = 0; c < g.cols; ++c) {
      if (!occupied(r, c)) continue;
      const double overlap = h(r, c) - bottom;
      if (!(overlap > 0.0)) continue;
      h(r, c) = bottom;
      out.modified = merge(out.modified, Region{r, r, c, c});
      out.volume += overlap * g.cell_area();
      distribute(r, c, overlap, out.modified);
    }
  }
  return out;
}

}  // namespace

void validate(const BladeParams& blade, const GridGeometry& g) {
  if (!(blade.width > 0.0) || !(blade.thickness > 0.0) || !(blade.depth > 0.0)) {
    throw InvalidArgument("blade: width, thickness and depth must be positive");
  }
  if (blade.width < g.dx * (1.0 - kGeomEps)) throw InvalidArgument("blade: width must be >= dx");
}

CellMask footprint_cells(const ToolPose& pose, const BladeParams& blade, const GridGeometry& g) {
  CellMask mask = empty_mask(g);
  const double ux = std::cos(pose.heading);
  const double uy = std::sin(pose.heading);
  const double eps = kGeomEps * g.dx;
  const double ht = blade.thickness / 2.0 + eps;
  const double hw = blade.width / 2.0 + eps;
  const Region box = clamp(footprint_search_box(pose, blade, g), g);
  bool any = false;
  for (auto r = box.row_min; r <= box.row_max; ++r) {
    for (auto c = box.col_min; c <= box.col_max; ++c) {
      const Point p = cell_center(g, r, c);
      const double px = p.x - pose.center.x;
      const double py = p.y - pose.center.y;
      const double along = px * ux + py * uy;
      const double across = -px * uy + py * ux;
      if (std::abs(along) <= ht && std::abs(across) <= hw) {
        mask.occupied(r, c) = true;
        any = true;
      }
    }
  }
  if (any) return mask;
  // A thin blade at an oblique heading can miss every cell center; it still
  // occupies the cell under its center.
  const auto r = static_cast<std::ptrdiff_t>(std::floor(pose.center.y / g.dx));
  const auto c = static_cast<std::ptrdiff_t>(std::floor(pose.center.x / g.dx));
  if (r < 0 || r >= g.rows || c < 0 || c >= g.cols) throw InvalidArgument("tool footprint lies entirely off the grid");
  mask.occupied(r, c) = true;
  return mask;
}

DirectionSplit split_direction(double vx, double vy) {
  // Fold into the first octant so the split is exactly mirror symmetric.
  const double ax = std::abs(vx);
  const double ay = std::abs(vy);
  const int sx = vx < 0.0 ? -1 : 1;
  const int sy = vy < 0.0 ? -1 : 1;
  const double quarter = std::numbers::pi / 4.0;
  if (ax >= ay) {
    const double t = std::atan2(ay, ax) / quarter;
    return {direction_index(0, sx), direction_index(sy, sx), 1.0 - t, t};
  }
  const double t = std::atan2(ax, ay) / quarter;
  return {direction_index(sy, 0), direction_index(sy, sx), 1.0 - t, t};
}

Displacement push_radial(HeightMapd& h, const CellMask& occupied, Point center, double bottom) {
  const auto& g = h.geometry;
  return push(h, occupied, bottom,
              [&](std::ptrdiff_t r, std::ptrdiff_t c, double overlap, Region& modified) {
                const Point p = cell_center(g, r, c);
                const double vx = p.x - center.x;
                const double vy = p.y - center.y;
                if (std::hypot(vx, vy) <= kGeomEps * g.dx) {
                  // Cell under the tool center: spread evenly all round.
                  for (std::size_t dir = 0; dir < 8; ++dir) {
                    deposit(h, occupied, r, c, dir, overlap / 8.0, modified);
                  }
                  return;
                }
                const auto split = split_direction(vx, vy);
                deposit(h, occupied, r, c, split.first, overlap * split.first_weight, modified);
                deposit(h, occupied, r, c, split.second, overlap * split.second_weight, modified);
              });
}

Displacement push_along(HeightMapd& h, const CellMask& occupied, double vx, double vy, double bottom) {
  const auto split = split_direction(vx, vy);
  return push(h, occupied, bottom,
              [&](std::ptrdiff_t r, std::ptrdiff_t c, double overlap, Region& modified) {
                deposit(h, occupied, r, c, split.first, overlap * split.first_weight, modified);
                deposit(h, occupied, r, c, split.second, overlap * split.second_weight, modified);
              });
}

namespace {

std::ptrdiff_t default_margin(double depth, const GridGeometry& g, const SoilParams& soil) {
  return static_cast<std::ptrdiff_t>(std::ceil(std::max(depth, 0.0) / (g.dx * soil.repose_slope()))) + 2;
}

std::pair<HeightMapd, double> displace_and_settle(const HeightMapd& h, const CellMask& mask,
                                                  const SoilParams& soil, double depth,
                                                  const auto& displace) {
  HeightMapd out = h;
  const Displacement d = displace(out);
  const auto& g = h.geometry;
  const Region seed = dilate(merge(mask_bounds(mask), d.modified), default_margin(depth, g, soil), g);
  RelaxOptions options;
  options.grow_region = true;
  auto [settled, report] = relax_to_steady(out, soil, mask, seed, options);
  return {std::move(settled), d.volume};
}

double surface_depth(const HeightMapd& h, double bottom) {
  return std::max(0.0, h.heights.maxCoeff() - bottom);
}

}  // namespace

std::pair<HeightMapd, double> apply_placement(const HeightMapd& h, const ToolPose& pose,
                                              const BladeParams& blade, const SoilParams& soil) {
  const CellMask mask = footprint_cells(pose, blade, h.geometry);
  return displace_and_settle(h, mask, soil, surface_depth(h, pose.bottom_height), [&](HeightMapd& m) {
    return push_radial(m, mask, pose.center, pose.bottom_height);
  });
}

std::pair<HeightMapd, double> apply_move(const HeightMapd& h, const ToolPose& from,
                                         const ToolPose& to, const BladeParams& blade,
                                         const SoilParams& soil) {
  const double vx = to.center.x - from.center.x;
  const double vy = to.center.y - from.center.y;
  if (std::hypot(vx, vy) > h.geometry.dx * (1.0 + kGeomEps)) {
    throw InvalidArgument("apply_move: step longer than one cell");
  }
  const CellMask mask = footprint_cells(to, blade, h.geometry);
  const bool still = vx == 0.0 && vy == 0.0;
  const double mx = still ? std::cos(to.heading) : vx;
  const double my = still ? std::sin(to.heading) : vy;
  return displace_and_settle(h, mask, soil, surface_depth(h, to.bottom_height), [&](HeightMapd& m) {
    return push_along(m, mask, mx, my, to.bottom_height);
  });
}

std::vector<ToolPose> rasterize(const Stroke& stroke, double dx, double bottom) {
  const double length = stroke.length();
  const double ux = (stroke.end.x - stroke.start.x) / length;
  const double uy = (stroke.end.y - stroke.start.y) / length;
  const double heading = std::atan2(uy, ux);
  const auto full_steps = static_cast<std::ptrdiff_t>(std::floor(length / dx + kGeomEps));
  std::vector<ToolPose> poses;
  poses.reserve(static_cast<std::size_t>(full_steps) + 2);
  for (std::ptrdiff_t i = 0; i <= full_steps; ++i) {
    const double s = static_cast<double>(i) * dx;
    poses.push_back({{stroke.start.x + s * ux, stroke.start.y + s * uy}, heading, bottom});
  }
  if (length - static_cast<double>(full_steps) * dx > kGeomEps * dx) {
    poses.push_back({stroke.end, heading, bottom});
  }
  return poses;
}

Region stroke_bounds(const Stroke& stroke, const BladeParams& blade, const GridGeometry& g,
                     const SoilParams& soil, std::optional<std::ptrdiff_t> margin) {
  if (stroke.length() < g.dx * (1.0 - kGeomEps)) throw InvalidArgument("stroke shorter than dx");
  Region box{};
  for (const auto& pose : rasterize(stroke, g.dx, 0.0)) {
    box = merge(box, mask_bounds(footprint_cells(pose, blade, g)));
  }
  return dilate(box, margin ? *margin : default_margin(stroke.depth, g, soil), g);
}

double median_height(const HeightMapd& h) {
  std::vector<double> values(h.heights.data(), h.heights.data() + h.heights.size());
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

std::pair<HeightMapd, StrokeStats> execute_path(const HeightMapd& h, const std::vector<ToolPose>& poses,
                                                const BladeParams& blade, const SoilParams& soil,
                                                const ToolConfig& config, const Region& bounds) {
  if (poses.empty()) throw InvalidArgument("execute_path: no poses");
  const auto& g = h.geometry;
  const bool bounded = config.mode == UpdateMode::Bounded;
  const std::ptrdiff_t grow_margin = 4;

  HeightMapd map = h;
  StrokeStats stats;
  Region region = full_region(g);
  if (bounded) region = clamp(config.carry_region ? merge(*config.carry_region, bounds) : bounds, g);

  const auto settle = [&](const CellMask& mask, std::optional<int> cap) {
    RelaxOptions options;
    options.max_iters = cap;
    options.grow_region = bounded;
    options.grow_margin = grow_margin;
    auto [next, report] = relax_to_steady(map, soil, mask, region, options);
    map = std::move(next);
    if (bounded) region = report.final_region;
    stats.relax_iterations_total += report.iterations;
    stats.cells_touched += report.cells_touched;
    return report;
  };
  const auto note = [&](const Displacement& d) {
    stats.displaced_volume += d.volume;
    if (bounded && !d.modified.empty()) region = merge(region, dilate(d.modified, grow_margin, g));
  };

  CellMask mask = footprint_cells(poses.front(), blade, g);
  note(push_radial(map, mask, poses.front().center, poses.front().bottom_height));
  settle(mask, config.step_relax_iters);

  for (std::size_t i = 1; i < poses.size(); ++i) {
    const auto& from = poses[i - 1];
    const auto& to = poses[i];
    double vx = to.center.x - from.center.x;
    double vy = to.center.y - from.center.y;
    if (std::hypot(vx, vy) > g.dx * (1.0 + kGeomEps)) {
      throw InvalidArgument("execute_path: consecutive poses more than dx apart");
    }
    if (vx == 0.0 && vy == 0.0) {
      vx = std::cos(to.heading);
      vy = std::sin(to.heading);
    }
    mask = footprint_cells(to, blade, g);
    note(push_along(map, mask, vx, vy, to.bottom_height));
    settle(mask, config.step_relax_iters);
  }

  stats.final_report = settle(empty_mask(g), std::nullopt);
  stats.active_region = region;
  return {std::move(map), stats};
}

std::pair<HeightMapd, StrokeStats> execute_stroke(const HeightMapd& h, const Stroke& stroke,
                                                  const BladeParams& blade, const SoilParams& soil,
                                                  const ToolConfig& config) {
  const auto& g = h.geometry;
  if (stroke.length() < g.dx * (1.0 - kGeomEps)) {
    throw InvalidArgument("execute_stroke: stroke shorter than dx");
  }
  const double reference = config.reference_level ? *config.reference_level : median_height(h);
  const auto poses = rasterize(stroke, g.dx, reference - stroke.depth);
  return execute_path(h, poses, blade, soil, config, stroke_bounds(stroke, blade, g, soil, config.margin));
}

}  // namespace sandshape
