#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace sandshape {

/// Thrown when a value violates a type invariant (bad geometry, bad params).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GridGeometry {
  std::ptrdiff_t rows = 0;
  std::ptrdiff_t cols = 0;
  double dx = 1.0;  // meters per cell edge

  std::ptrdiff_t cell_count() const { return rows * cols; }
  double cell_area() const { return dx * dx; }
  double width() const { return static_cast<double>(cols) * dx; }
  double height() const { return static_cast<double>(rows) * dx; }

  bool contains(std::ptrdiff_t r, std::ptrdiff_t c) const {
    return r >= 0 && r < rows && c >= 0 && c < cols;
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

inline void validate(const GridGeometry& g) {
  if (g.rows < 2) throw InvalidArgument("grid geometry: rows must be >= 2");
  if (g.cols < 2) throw InvalidArgument("grid geometry: cols must be >= 2");
  if (!(g.dx > 0.0) || !std::isfinite(g.dx)) {
    throw InvalidArgument("grid geometry: dx must be positive and finite");
  }
}

/// Cell centers sit at ((c + 0.5) dx, (r + 0.5) dx): x runs along columns,
/// y along rows.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point cell_center(const GridGeometry& g, std::ptrdiff_t r, std::ptrdiff_t c) {
  return {(static_cast<double>(c) + 0.5) * g.dx, (static_cast<double>(r) + 0.5) * g.dx};
}

enum class Connectivity { Four, Eight };
enum class Boundary { Closed, Open };

struct SoilParams {
  double repose_angle_deg = 29.0;
  double cohesion = 0.0;  // Pa; carried for completeness, unused by relaxation
  Connectivity connectivity = Connectivity::Eight;
  std::optional<double> flow_rate;  // unset: derived from connectivity and dx
  // Meters; relaxation stops once every pair's excess slope is below
  // convergence_tol / dx. Unset: 0.5% of tan(repose) as a slope.
  std::optional<double> convergence_tol;
  std::optional<int> max_relax_iters;  // unset: 10 * max(rows, cols)
  Boundary boundary = Boundary::Closed;

  double repose_slope() const {
    return std::tan(repose_angle_deg * std::numbers::pi / 180.0);
  }
};

/// Largest k for which the explicit update stays stable on every grid mode.
double flow_rate_bound(Connectivity connectivity, double dx);

void validate(const SoilParams& soil, const GridGeometry& g);

int effective_max_iters(const SoilParams& soil, const GridGeometry& g);

/// Excess slope at which relaxation counts as converged (never below 1e-6).
double slope_tolerance(const SoilParams& soil, const GridGeometry& g);

/// Inclusive cell-index rectangle.
struct Region {
  std::ptrdiff_t row_min = 0;
  std::ptrdiff_t row_max = -1;
  std::ptrdiff_t col_min = 0;
  std::ptrdiff_t col_max = -1;

  bool empty() const { return row_max < row_min || col_max < col_min; }
  std::ptrdiff_t rows() const { return empty() ? 0 : row_max - row_min + 1; }
  std::ptrdiff_t cols() const { return empty() ? 0 : col_max - col_min + 1; }
  std::ptrdiff_t cell_count() const { return rows() * cols(); }

  bool contains(std::ptrdiff_t r, std::ptrdiff_t c) const {
    return r >= row_min && r <= row_max && c >= col_min && c <= col_max;
  }

  friend bool operator==(const Region&, const Region&) = default;
};

Region full_region(const GridGeometry& g);
Region clamp(const Region& region, const GridGeometry& g);
Region dilate(const Region& region, std::ptrdiff_t margin, const GridGeometry& g);
Region merge(const Region& a, const Region& b);
void validate(const Region& region, const GridGeometry& g);

}  // namespace sandshape
