#pragma once

#include "sandshape/erosion.hpp"
#include "sandshape/heightmap.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace sandshape {

/// Flat rectangular blade. `width` runs across the direction of motion,
/// `thickness` along it.
struct BladeParams {
  double width = 0.0;
  double thickness = 0.0;
  double depth = 0.0;  // cutting depth below the reference surface
};

void validate(const BladeParams& blade, const GridGeometry& g);

struct ToolPose {
  Point center;
  double heading = 0.0;  // radians from +x toward +y
  double bottom_height = 0.0;
};

struct Stroke {
  Point start;
  Point end;
  double depth = 0.0;

  double length() const { return std::hypot(end.x - start.x, end.y - start.y); }
};

struct StrokeStats {
  double displaced_volume = 0.0;
  std::int64_t relax_iterations_total = 0;
  std::int64_t cells_touched = 0;
  RelaxReport final_report;   // the unmasked relaxation after the blade lifts
  Region active_region;       // every cell that may still be above repose
};

enum class UpdateMode { Bounded, Full };

struct ToolConfig {
  UpdateMode mode = UpdateMode::Bounded;
  int step_relax_iters = 10;  // relaxation cap between rasterized blade steps
  std::optional<std::ptrdiff_t> margin;  // stroke_bounds margin override
  // Level the stroke depth is measured from; unset: median map height.
  std::optional<double> reference_level;
  // Region reported by a previous stroke on the same map. Bounded execution
  // must cover it to stay identical to full-grid execution.
  std::optional<Region> carry_region;
};

/// Cells whose centers lie inside the blade rectangle.
CellMask footprint_cells(const ToolPose& pose, const BladeParams& blade, const GridGeometry& g);

/// Grid direction split for a motion vector: the two straddling directions of
/// the eight, weighted linearly by angular distance. Indices follow
/// kNeighborOrder.
struct DirectionSplit {
  std::size_t first;
  std::size_t second;
  double first_weight;
  double second_weight;
};
DirectionSplit split_direction(double vx, double vy);

/// Result of a raw displacement, before any relaxation.
struct Displacement {
  double volume = 0.0;
  Region modified;  // bounding box of every cell that changed
};

/// Removes sand above `bottom` from occupied cells and pushes it radially out,
/// from `center` through each cell, to the nearest unoccupied cells.
Displacement push_radial(HeightMapd& h, const CellMask& occupied, Point center, double bottom);

/// Removes sand above `bottom` from occupied cells and pushes it along the
/// motion vector (vx, vy) to the first unoccupied cells.
Displacement push_along(HeightMapd& h, const CellMask& occupied, double vx, double vy, double bottom);

/// Lowers the blade at `pose`, then relaxes the footprint's neighborhood to
/// steady state with the footprint masked.
std::pair<HeightMapd, double> apply_placement(const HeightMapd& h, const ToolPose& pose,
                                              const BladeParams& blade, const SoilParams& soil);

/// One rasterization step (|to - from| <= dx) followed by a masked relaxation.
std::pair<HeightMapd, double> apply_move(const HeightMapd& h, const ToolPose& from,
                                         const ToolPose& to, const BladeParams& blade,
                                         const SoilParams& soil);

/// Tight region around every footprint the stroke sweeps, dilated by `margin`
/// cells (default ceil(depth / (dx tan(repose))) + 2) and clamped to the grid.
Region stroke_bounds(const Stroke& stroke, const BladeParams& blade, const GridGeometry& g,
                     const SoilParams& soil, std::optional<std::ptrdiff_t> margin = std::nullopt);

/// Poses visited by a stroke: the start, then one every dx, then the end.
std::vector<ToolPose> rasterize(const Stroke& stroke, double dx, double bottom);

/// Drives the blade through `poses`: placement at the first, a push along the
/// motion between consecutive poses, a capped masked relaxation after each,
/// then a full unmasked relaxation once the blade lifts. Pose headings may
/// differ from the motion direction. `bounds` seeds the bounded update region.
std::pair<HeightMapd, StrokeStats> execute_path(const HeightMapd& h, const std::vector<ToolPose>& poses,
                                                const BladeParams& blade, const SoilParams& soil,
                                                const ToolConfig& config, const Region& bounds);

/// Place at the start, step along the segment, lift, and relax without the
/// mask.
std::pair<HeightMapd, StrokeStats> execute_stroke(const HeightMapd& h, const Stroke& stroke,
                                                  const BladeParams& blade, const SoilParams& soil,
                                                  const ToolConfig& config = {});

double median_height(const HeightMapd& h);

}  // namespace sandshape
