#include "sandshape/core.hpp"

#include <algorithm>

namespace sandshape {

double flow_rate_bound(Connectivity connectivity, double dx) {
  // Linear stability limit of the explicit update: the most oscillatory grid
  // mode has Laplacian weight 8 (Four) or 12 (Eight) per unit k/dx^2.
  return connectivity == Connectivity::Eight ? dx * dx / 6.0 : dx * dx / 4.0;
}

void validate(const SoilParams& soil, const GridGeometry& g) {
  if (!(soil.repose_angle_deg > 0.0 && soil.repose_angle_deg < 90.0)) {
    throw InvalidArgument("soil: repose angle must be in (0, 90) degrees");
  }
  if (soil.convergence_tol && !(*soil.convergence_tol > 0.0)) {
    throw InvalidArgument("soil: convergence_tol must be positive");
  }
  if (soil.flow_rate) {
    const double bound = flow_rate_bound(soil.connectivity, g.dx);
    const double k = *soil.flow_rate;
    // A hair of slack so that user-supplied decimal values of the bound pass.
    if (!(k > 0.0) || k > bound * (1.0 + 1e-12)) {
      throw InvalidArgument("soil: flow_rate must be in (0, stability bound]");
    }
  }
  if (soil.max_relax_iters && *soil.max_relax_iters < 1) {
    throw InvalidArgument("soil: max_relax_iters must be >= 1");
  }
}

int effective_max_iters(const SoilParams& soil, const GridGeometry& g) {
  if (soil.max_relax_iters) return *soil.max_relax_iters;
  return static_cast<int>(10 * std::max(g.rows, g.cols));
}

double slope_tolerance(const SoilParams& soil, const GridGeometry& g) {
  const double tol = soil.convergence_tol ? *soil.convergence_tol / g.dx : 0.005 * soil.repose_slope();
  return std::max(tol, 1e-6);
}

Region full_region(const GridGeometry& g) {
  validate(g);
  return {0, g.rows - 1, 0, g.cols - 1};
}

Region clamp(const Region& region, const GridGeometry& g) {
  return {std::max<std::ptrdiff_t>(region.row_min, 0),
          std::min<std::ptrdiff_t>(region.row_max, g.rows - 1),
          std::max<std::ptrdiff_t>(region.col_min, 0),
          std::min<std::ptrdiff_t>(region.col_max, g.cols - 1)};
}

Region dilate(const Region& region, std::ptrdiff_t margin, const GridGeometry& g) {
  if (region.empty()) return region;
  return clamp({region.row_min - margin, region.row_max + margin, region.col_min - margin,
                region.col_max + margin},
               g);
}

Region merge(const Region& a, const Region& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return {std::min(a.row_min, b.row_min), std::max(a.row_max, b.row_max),
          std::min(a.col_min, b.col_min), std::max(a.col_max, b.col_max)};
}

void validate(const Region& region, const GridGeometry& g) {
  if (region.empty()) throw InvalidArgument("region is empty");
  if (region.row_min < 0 || region.col_min < 0 || region.row_max >= g.rows ||
      region.col_max >= g.cols) {
    throw InvalidArgument("region exceeds grid bounds");
  }
}

}  // namespace sandshape
