#pragma once

#include "sandshape/core.hpp"

#include <array>
#include <cstddef>

namespace sandshape {

struct Offset {
  std::ptrdiff_t dr;
  std::ptrdiff_t dc;
};

// Fixed reduction order for per-cell flux sums: N, NE, E, SE, S, SW, W, NW.
// North is row - 1.
inline constexpr std::array<Offset, 8> kNeighborOrder{{
    {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1},
}};

inline constexpr std::size_t opposite(std::size_t dir) { return (dir + 4) % 8; }
inline constexpr bool is_diagonal(std::size_t dir) { return dir % 2 == 1; }

inline bool uses_direction(Connectivity connectivity, std::size_t dir) {
  return connectivity == Connectivity::Eight || !is_diagonal(dir);
}

inline double neighbor_distance(std::size_t dir, double dx) {
  return is_diagonal(dir) ? std::numbers::sqrt2 * dx : dx;
}

}  // namespace sandshape
