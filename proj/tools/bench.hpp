#pragma once

#include "sandshape/erosion.hpp"
#include "sandshape/heightmap.hpp"
#include "sandshape/tool.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sandshape::bench {

struct RunStats {
  std::int64_t cells_touched = 0;
  std::int64_t relax_iterations = 0;  // every relaxation, capped and final
  int final_iterations = 0;           // the last unmasked relaxation
  bool converged = false;
  double final_excess_slope = 0.0;
  double wall_seconds = 0.0;
};

struct CaseReport {
  std::string name;
  GridGeometry geometry;
  RunStats bounded;
  RunStats full;
  bool bit_identical = false;
  double touched_fraction = 0.0;  // bounded / full cells touched
  double volume_drift = 0.0;      // relative, bounded run
};

/// Default cases: "stroke32" (one centered stroke on 32x32), "cross64" (two
/// crossing strokes on 64x64), "tow160" (a 15 mm, beta 0 wheel tow on 160x160).
std::vector<std::string> default_cases();

CaseReport run_case(const std::string& name);

struct FlowRateSample {
  double factor = 0.0;  // multiple of the derived optimum
  double flow_rate = 0.0;
  int final_iterations = 0;
  bool converged = false;
  bool stable = false;  // within the validated stability bound
};

/// Final relaxation iterations of the stroke32 case across flow rates.
std::vector<FlowRateSample> flow_rate_sweep(const std::vector<double>& factors);

struct PlannerSample {
  std::string letter;
  double alpha = 0.0;
  std::ptrdiff_t path_length = 0;
  std::int64_t nodes_opened = 0;
  std::ptrdiff_t oracle_length = 0;
  double wall_seconds = 0.0;
};

std::vector<PlannerSample> planner_alpha_table(const std::vector<double>& alphas);

}  // namespace sandshape::bench
