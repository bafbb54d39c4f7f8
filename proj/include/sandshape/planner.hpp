#pragma once

#include "sandshape/core.hpp"
#include "sandshape/tool.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sandshape::planner {

enum class Move { North, East, South, West };

inline constexpr std::array<Move, 4> kMoveOrder{Move::North, Move::East, Move::South, Move::West};

char move_letter(Move m);

struct Cell {
  std::ptrdiff_t row = 0;
  std::ptrdiff_t col = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

Cell step(Cell from, Move m);

/// Binarized trench map: a cell is either undug (1) or dug (0). Bits are
/// packed 64 per word, row-major, with a set bit meaning dug.
class BinaryMap {
 public:
  BinaryMap() = default;
  /// All cells undug.
  BinaryMap(std::ptrdiff_t rows, std::ptrdiff_t cols);

  std::ptrdiff_t rows() const { return rows_; }
  std::ptrdiff_t cols() const { return cols_; }
  std::ptrdiff_t cell_count() const { return rows_ * cols_; }
  bool contains(Cell c) const { return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_; }

  bool dug(Cell c) const;
  bool undug(Cell c) const { return !dug(c); }
  void dig(Cell c);

  std::ptrdiff_t dug_count() const;
  /// Number of cells where the two maps disagree.
  std::ptrdiff_t mismatch(const BinaryMap& other) const;
  /// True when every dug cell here is also dug in `other`.
  bool dug_subset_of(const BinaryMap& other) const;

  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<Cell> dug_cells() const;

  friend bool operator==(const BinaryMap&, const BinaryMap&) = default;

 private:
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row * cols_ + c.col); }

  std::ptrdiff_t rows_ = 0;
  std::ptrdiff_t cols_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Goal grid text: one row per line of '0' (dig) and '1' (keep); lines
/// starting with '#' are comments.
BinaryMap parse_goal(std::istream& in);
BinaryMap read_goal(const std::filesystem::path& path);
BinaryMap goal_from_rows(const std::vector<std::string>& rows);
std::string format_goal(const BinaryMap& map);

struct Problem {
  BinaryMap goal;
  Cell start;
  double dig_depth = 0.0;
  double alpha = 1.0;
};

struct PlanState {
  BinaryMap map;
  Cell blade;

  friend bool operator==(const PlanState&, const PlanState&) = default;
};

/// Blade lowered at the start cell, which is dug; everything else intact.
PlanState initial_state(const Problem& p);

struct Plan {
  std::vector<Move> actions;
  std::int64_t nodes_opened = 0;
  std::ptrdiff_t path_length = 0;
  bool optimal = false;  // alpha <= 1, where the heuristic is admissible
  Cell start;
  double wall_seconds = 0.0;
};

class UnsolvableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InstanceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// In-bounds moves in N, E, S, W order. The target cell becomes dug; moving
/// onto an already dug cell leaves the map as it was.
std::vector<std::pair<Move, PlanState>> successors(const PlanState& s);

/// alpha * (cells where the state's map differs from the goal).
double heuristic(const PlanState& s, const Problem& p);

/// Whether the goal's dug cells form one 4-connected set containing the start.
bool single_stroke_solvable(const Problem& p);

struct SearchLimits {
  std::int64_t max_nodes = 50'000'000;
};

/// A* over (map, blade) with f = g + alpha * mismatch. Ties on f go to the
/// lower heuristic, then N, E, S, W generation order, then FIFO. States that
/// dig a cell the goal keeps are dead ends and are never expanded.
Plan astar_plan(const Problem& p, const SearchLimits& limits = {});

/// Runs astar_plan from every dug goal cell and keeps the shortest plan
/// (earliest row-major start on ties).
Plan astar_plan_any_start(const Problem& p, const SearchLimits& limits = {});

struct OracleLimits {
  std::ptrdiff_t max_dug_cells = 24;
  std::int64_t max_states = 20'000'000;
};

/// Exhaustive breadth-first search over (dug set, blade); exact optimum, or
/// nullopt when the goal cannot be reached.
std::optional<std::ptrdiff_t> bfs_oracle(const Problem& p, const OracleLimits& limits = {});

/// Replays actions from the initial state; returns the final state.
PlanState replay(const Problem& p, const std::vector<Move>& actions);

/// Maps plan cells onto a height-map: plan cell (r, c) covers the
/// cell_scale x cell_scale block whose top-left map cell is
/// (origin_row + r * cell_scale, origin_col + c * cell_scale).
struct BridgeLayout {
  std::ptrdiff_t origin_row = 0;
  std::ptrdiff_t origin_col = 0;
  std::ptrdiff_t cell_scale = 1;
};

Point plan_cell_center(Cell c, const GridGeometry& g, const BridgeLayout& layout);

/// Square blade covering one plan cell.
BladeParams bridge_blade(const Problem& p, const GridGeometry& g, const BridgeLayout& layout);

/// Merges runs of equal moves into single strokes at the problem's dig depth.
std::vector<Stroke> plan_to_strokes(const Plan& plan, const Problem& p, const GridGeometry& g,
                                    const BridgeLayout& layout = {});

/// The fixed 7x7 letter goals (A, S, T, R) with their start cells.
struct LetterGoal {
  std::string name;
  std::vector<std::string> rows;
  Cell start;
};
const std::vector<LetterGoal>& letter_suite();

}  // namespace sandshape::planner
