#pragma once

#include "sandshape/heightmap.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace sandshape::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// base + independent uniform noise in [0, amplitude) per cell.
inline HeightMapd noisy_map(const GridGeometry& g, double base, double amplitude, std::mt19937_64& rng) {
  HeightMapd h = new_heightmap(g, base);
  for (std::ptrdiff_t r = 0; r < g.rows; ++r)
    for (std::ptrdiff_t c = 0; c < g.cols; ++c) h(r, c) += uniform(rng, 0.0, amplitude);
  return h;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sandshape_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sandshape::testing
