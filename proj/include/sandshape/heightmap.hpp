#pragma once

#include "sandshape/core.hpp"
#include "sandshape/neighbors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace sandshape {

template <typename Scalar>
using Grid = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MaskGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Surface heights (meters) over a regular grid, stored row-major.
template <typename Scalar>
struct HeightMap {
  using scalar_type = Scalar;

  GridGeometry geometry;
  Grid<Scalar> heights;

  Scalar& operator()(std::ptrdiff_t r, std::ptrdiff_t c) { return heights(r, c); }
  Scalar operator()(std::ptrdiff_t r, std::ptrdiff_t c) const { return heights(r, c); }

  std::ptrdiff_t rows() const { return geometry.rows; }
  std::ptrdiff_t cols() const { return geometry.cols; }

  template <typename Other>
  HeightMap<Other> cast() const {
    return {geometry, heights.template cast<Other>()};
  }
};

using HeightMapd = HeightMap<double>;
using HeightMapf = HeightMap<float>;

struct CellMask {
  GridGeometry geometry;
  MaskGrid occupied;

  bool operator()(std::ptrdiff_t r, std::ptrdiff_t c) const { return occupied(r, c); }
  std::ptrdiff_t count() const { return occupied.count(); }
};

inline CellMask empty_mask(const GridGeometry& g) {
  validate(g);
  return {g, MaskGrid::Constant(g.rows, g.cols, false)};
}

template <typename Scalar = double>
HeightMap<Scalar> new_heightmap(const GridGeometry& g, Scalar fill) {
  validate(g);
  if (!std::isfinite(static_cast<double>(fill))) {
    throw InvalidArgument("heightmap fill must be finite");
  }
  return {g, Grid<Scalar>::Constant(g.rows, g.cols, fill)};
}

/// Wraps existing heights; throws if the shape disagrees with the geometry or
/// any value is non-finite.
template <typename Derived>
HeightMap<typename Derived::Scalar> make_heightmap(const GridGeometry& g,
                                                   const Eigen::MatrixBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  validate(g);
  if (values.rows() != g.rows || values.cols() != g.cols) {
    throw InvalidArgument("heightmap values do not match geometry");
  }
  if (!values.allFinite()) throw InvalidArgument("heightmap values must be finite");
  return {g, Grid<Scalar>(values)};
}

template <typename Scalar>
void check_same_geometry(const HeightMap<Scalar>& a, const HeightMap<Scalar>& b) {
  if (!(a.geometry == b.geometry)) throw InvalidArgument("height-map geometries differ");
}

template <typename Scalar>
double total_volume(const HeightMap<Scalar>& h) {
  return static_cast<double>(h.heights.template cast<double>().sum()) * h.geometry.cell_area();
}

/// Bitwise equality of the height arrays (distinguishes +0 from -0).
template <typename Scalar>
bool bit_identical(const HeightMap<Scalar>& a, const HeightMap<Scalar>& b) {
  if (!(a.geometry == b.geometry)) return false;
  return std::memcmp(a.heights.data(), b.heights.data(),
                     sizeof(Scalar) * static_cast<std::size_t>(a.heights.size())) == 0;
}

/// Max over unmasked neighbor pairs of |dh| / distance - tan(repose). A value
/// <= 0 means every pair is at or below repose. Under an open boundary, edge
/// cells are also paired with a virtual exterior cell at height 0.
template <typename Scalar>
Scalar local_excess_slope(const HeightMap<Scalar>& h, const SoilParams& soil,
                          const CellMask& mask) {
  const auto& g = h.geometry;
  const Scalar repose = static_cast<Scalar>(soil.repose_slope());
  Scalar worst = std::numeric_limits<Scalar>::lowest();
  bool any_pair = false;
  for (std::ptrdiff_t r = 0; r < g.rows; ++r) {
    for (std::ptrdiff_t c = 0; c < g.cols; ++c) {
      if (mask(r, c)) continue;
      for (std::size_t dir = 0; dir < kNeighborOrder.size(); ++dir) {
        if (!uses_direction(soil.connectivity, dir)) continue;
        const auto nr = r + kNeighborOrder[dir].dr;
        const auto nc = c + kNeighborOrder[dir].dc;
        const auto dist = static_cast<Scalar>(neighbor_distance(dir, g.dx));
        Scalar other;
        if (g.contains(nr, nc)) {
          // Interior pairs are visited from both ends; keep the forward half.
          if (dir >= 4 || mask(nr, nc)) continue;
          other = h(nr, nc);
        } else if (soil.boundary == Boundary::Open) {
          other = Scalar(0);
        } else {
          continue;
        }
        any_pair = true;
        worst = std::max(worst, std::abs(h(r, c) - other) / dist - repose);
      }
    }
  }
  return any_pair ? worst : -repose;
}

}  // namespace sandshape
