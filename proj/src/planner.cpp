#include "sandshape/planner.hpp"

#include "sandshape/io.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <deque>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sandshape::planner {

char move_letter(Move m) {
  switch (m) {
    case Move::North: return 'N';
    case Move::East: return 'E';
    case Move::South: return 'S';
    case Move::West: return 'W';
  }
  return '?';
}

Cell step(Cell from, Move m) {
  switch (m) {
    case Move::North: return {from.row - 1, from.col};
    case Move::East: return {from.row, from.col + 1};
    case Move::South: return {from.row + 1, from.col};
    case Move::West: return {from.row, from.col - 1};
  }
  return from;
}

BinaryMap::BinaryMap(std::ptrdiff_t rows, std::ptrdiff_t cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw InvalidArgument("BinaryMap: dimensions must be positive");
  words_.assign(static_cast<std::size_t>((rows * cols + 63) / 64), 0);
}

bool BinaryMap::dug(Cell c) const {
  const auto i = index(c);
  return (words_[i / 64] >> (i % 64)) & 1u;
}

void BinaryMap::dig(Cell c) {
  const auto i = index(c);
  words_[i / 64] |= std::uint64_t{1} << (i % 64);
}

std::ptrdiff_t BinaryMap::dug_count() const {
  std::ptrdiff_t n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

std::ptrdiff_t BinaryMap::mismatch(const BinaryMap& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw InvalidArgument("BinaryMap: dimension mismatch");
  }
  std::ptrdiff_t n = 0;
  for (std::size_t i = 0; i < words_.size(); ++i) n += std::popcount(words_[i] ^ other.words_[i]);
  return n;
}

bool BinaryMap::dug_subset_of(const BinaryMap& other) const {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] & ~other.words_[i]) return false;
  }
  return true;
}

std::vector<Cell> BinaryMap::dug_cells() const {
  std::vector<Cell> out;
  for (std::ptrdiff_t r = 0; r < rows_; ++r) {
    for (std::ptrdiff_t c = 0; c < cols_; ++c) {
      if (dug({r, c})) out.push_back({r, c});
    }
  }
  return out;
}

BinaryMap goal_from_rows(const std::vector<std::string>& rows) {
  if (rows.empty()) throw FormatError("goal grid: no rows");
  const auto cols = static_cast<std::ptrdiff_t>(rows.front().size());
  BinaryMap map(static_cast<std::ptrdiff_t>(rows.size()), std::max<std::ptrdiff_t>(cols, 1));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<std::ptrdiff_t>(rows[r].size()) != cols || cols == 0) {
      throw FormatError("goal grid: row " + std::to_string(r) + " has inconsistent length");
    }
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
      const char ch = rows[r][static_cast<std::size_t>(c)];
      if (ch == '0') {
        map.dig({static_cast<std::ptrdiff_t>(r), c});
      } else if (ch != '1') {
        throw FormatError(std::string("goal grid: unexpected character '") + ch + "'");
      }
    }
  }
  return map;
}

BinaryMap parse_goal(std::istream& in) {
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    rows.push_back(line.substr(first, last - first + 1));
  }
  return goal_from_rows(rows);
}

BinaryMap read_goal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open goal file " + path.string());
  return parse_goal(in);
}

std::string format_goal(const BinaryMap& map) {
  std::string out;
  for (std::ptrdiff_t r = 0; r < map.rows(); ++r) {
    for (std::ptrdiff_t c = 0; c < map.cols(); ++c) out += map.dug({r, c}) ? '0' : '1';
    out += '\n';
  }
  return out;
}

namespace {

void check_problem(const Problem& p) {
  if (p.goal.cell_count() == 0) throw InvalidArgument("problem: empty goal");
  if (!p.goal.contains(p.start)) throw InvalidArgument("problem: start cell out of bounds");
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) throw InvalidArgument("problem: alpha must be positive");
  if (!(p.dig_depth >= 0.0)) throw InvalidArgument("problem: dig_depth must be non-negative");
}

struct StateHash {
  std::size_t operator()(const PlanState& s) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    for (auto w : s.map.words()) mix(w);
    mix(static_cast<std::uint64_t>(s.blade.row) * 1315423911ull + static_cast<std::uint64_t>(s.blade.col));
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

PlanState initial_state(const Problem& p) {
  check_problem(p);
  PlanState s{BinaryMap(p.goal.rows(), p.goal.cols()), p.start};
  s.map.dig(p.start);
  return s;
}

std::vector<std::pair<Move, PlanState>> successors(const PlanState& s) {
  std::vector<std::pair<Move, PlanState>> out;
  out.reserve(4);
  for (Move m : kMoveOrder) {
    const Cell next = step(s.blade, m);
    if (!s.map.contains(next)) continue;
    PlanState child{s.map, next};
    child.map.dig(next);
    out.emplace_back(m, std::move(child));
  }
  return out;
}

double heuristic(const PlanState& s, const Problem& p) {
  return p.alpha * static_cast<double>(s.map.mismatch(p.goal));
}

bool single_stroke_solvable(const Problem& p) {
  check_problem(p);
  if (!p.goal.dug(p.start)) return false;
  BinaryMap seen(p.goal.rows(), p.goal.cols());
  std::deque<Cell> queue{p.start};
  seen.dig(p.start);
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (Move m : kMoveOrder) {
      const Cell n = step(c, m);
      if (!p.goal.contains(n) || !p.goal.dug(n) || seen.dug(n)) continue;
      seen.dig(n);
      queue.push_back(n);
    }
  }
  return seen == p.goal;
}

Plan astar_plan(const Problem& p, const SearchLimits& limits) {
  check_problem(p);
  const auto t0 = std::chrono::steady_clock::now();

  struct Node {
    PlanState state;
    std::ptrdiff_t parent;
    Move move;
    std::ptrdiff_t g;
  };
  struct Entry {
    double f;
    double h;
    std::uint64_t seq;
    std::ptrdiff_t node;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.f != b.f) return a.f > b.f;
      if (a.h != b.h) return a.h > b.h;
      return a.seq > b.seq;
    }
  };

  std::vector<Node> nodes;
  std::priority_queue<Entry, std::vector<Entry>, Later> open;
  std::unordered_map<PlanState, std::ptrdiff_t, StateHash> best_g;
  std::unordered_set<PlanState, StateHash> closed;
  std::uint64_t seq = 0;

  Plan plan;
  plan.start = p.start;
  plan.optimal = p.alpha <= 1.0;

  PlanState root = initial_state(p);
  if (root.map.dug_subset_of(p.goal)) {
    const double h0 = heuristic(root, p);
    best_g.emplace(root, 0);
    nodes.push_back({std::move(root), -1, Move::North, 0});
    open.push({h0, h0, seq++, 0});
  }

  while (!open.empty()) {
    const Entry top = open.top();
    open.pop();
    const Node& node = nodes[static_cast<std::size_t>(top.node)];
    if (closed.contains(node.state)) continue;
    closed.insert(node.state);
    ++plan.nodes_opened;
    if (plan.nodes_opened > limits.max_nodes) {
      throw InstanceTooLarge("astar_plan: node budget exhausted");
    }

    if (node.state.map == p.goal) {
      for (auto i = top.node; nodes[static_cast<std::size_t>(i)].parent >= 0;
           i = nodes[static_cast<std::size_t>(i)].parent) {
        plan.actions.push_back(nodes[static_cast<std::size_t>(i)].move);
      }
      std::reverse(plan.actions.begin(), plan.actions.end());
      plan.path_length = static_cast<std::ptrdiff_t>(plan.actions.size());
      plan.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return plan;
    }

    const std::ptrdiff_t g = node.g + 1;
    for (auto& [move, child] : successors(node.state)) {
      // Dug cells cannot be refilled, so digging outside the goal is final.
      if (!p.goal.dug(child.blade)) continue;
      if (closed.contains(child)) continue;
      auto it = best_g.find(child);
      if (it != best_g.end() && it->second <= g) continue;
      const double h = heuristic(child, p);
      const auto parent = top.node;
      best_g.insert_or_assign(child, g);
      nodes.push_back({std::move(child), parent, move, g});
      open.push({static_cast<double>(g) + h, h, seq++, static_cast<std::ptrdiff_t>(nodes.size() - 1)});
    }
  }
  throw UnsolvableError("goal is not reachable in a single stroke from the start cell");
}

Plan astar_plan_any_start(const Problem& p, const SearchLimits& limits) {
  check_problem(p);
  std::optional<Plan> best;
  std::int64_t total_nodes = 0;
  for (const Cell c : p.goal.dug_cells()) {
    Problem q = p;
    q.start = c;
    if (!single_stroke_solvable(q)) continue;
    Plan candidate = astar_plan(q, limits);
    total_nodes += candidate.nodes_opened;
    if (!best || candidate.path_length < best->path_length) best = std::move(candidate);
  }
  if (!best) throw UnsolvableError("goal dug cells are not 4-connected");
  best->nodes_opened = total_nodes;
  return *best;
}

std::optional<std::ptrdiff_t> bfs_oracle(const Problem& p, const OracleLimits& limits) {
  check_problem(p);
  if (!p.goal.dug(p.start)) return std::nullopt;

  // Re-index goal cells so a state packs into one integer: (visited set, blade).
  std::vector<Cell> cells = p.goal.dug_cells();
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
  if (n > limits.max_dug_cells || n > 58) {
    throw InstanceTooLarge("bfs_oracle: goal has " + std::to_string(n) + " dug cells");
  }
  std::vector<std::ptrdiff_t> id(static_cast<std::size_t>(p.goal.cell_count()), -1);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    id[static_cast<std::size_t>(cells[i].row * p.goal.cols() + cells[i].col)] = i;
  }
  std::vector<std::vector<std::ptrdiff_t>> adj(static_cast<std::size_t>(n));
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Cell c = cells[static_cast<std::size_t>(i)];
    const std::array<Cell, 4> around{Cell{c.row - 1, c.col}, Cell{c.row, c.col + 1},
                                     Cell{c.row + 1, c.col}, Cell{c.row, c.col - 1}};
    for (const Cell nb : around) {
      if (!p.goal.contains(nb)) continue;
      const auto j = id[static_cast<std::size_t>(nb.row * p.goal.cols() + nb.col)];
      if (j >= 0) adj[static_cast<std::size_t>(i)].push_back(j);
    }
  }

  const std::uint64_t full = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  const auto start = id[static_cast<std::size_t>(p.start.row * p.goal.cols() + p.start.col)];
  auto key = [](std::uint64_t set, std::ptrdiff_t blade) {
    return (set << 6) | static_cast<std::uint64_t>(blade);
  };

  std::unordered_set<std::uint64_t> seen;
  std::vector<std::uint64_t> frontier{key(std::uint64_t{1} << start, start)};
  seen.insert(frontier.front());
  for (std::ptrdiff_t depth = 0; !frontier.empty(); ++depth) {
    std::vector<std::uint64_t> next;
    for (const auto k : frontier) {
      const std::uint64_t set = k >> 6;
      if (set == full) return depth;
      const auto blade = static_cast<std::ptrdiff_t>(k & 63u);
      for (const auto j : adj[static_cast<std::size_t>(blade)]) {
        const auto nk = key(set | (std::uint64_t{1} << j), j);
        if (seen.insert(nk).second) next.push_back(nk);
      }
      if (static_cast<std::int64_t>(seen.size()) > limits.max_states) {
        throw InstanceTooLarge("bfs_oracle: state budget exhausted");
      }
    }
    frontier = std::move(next);
  }
  return std::nullopt;
}

PlanState replay(const Problem& p, const std::vector<Move>& actions) {
  PlanState s = initial_state(p);
  for (Move m : actions) {
    const Cell next = step(s.blade, m);
    if (!s.map.contains(next)) throw InvalidArgument("replay: move leaves the grid");
    s.blade = next;
    s.map.dig(next);
  }
  return s;
}

Point plan_cell_center(Cell c, const GridGeometry& g, const BridgeLayout& layout) {
  const double s = static_cast<double>(layout.cell_scale);
  return {(static_cast<double>(layout.origin_col) + (static_cast<double>(c.col) + 0.5) * s) * g.dx,
          (static_cast<double>(layout.origin_row) + (static_cast<double>(c.row) + 0.5) * s) * g.dx};
}

BladeParams bridge_blade(const Problem& p, const GridGeometry& g, const BridgeLayout& layout) {
  const double side = static_cast<double>(layout.cell_scale) * g.dx;
  return {side, side, p.dig_depth};
}

std::vector<Stroke> plan_to_strokes(const Plan& plan, const Problem& p, const GridGeometry& g,
                                    const BridgeLayout& layout) {
  if (layout.cell_scale < 1) throw InvalidArgument("plan_to_strokes: cell_scale must be >= 1");
  if (layout.origin_row < 0 || layout.origin_col < 0 ||
      layout.origin_row + p.goal.rows() * layout.cell_scale > g.rows ||
      layout.origin_col + p.goal.cols() * layout.cell_scale > g.cols) {
    throw InvalidArgument("plan_to_strokes: goal does not fit on the height map");
  }
  std::vector<Stroke> strokes;
  Cell at = plan.start;
  std::size_t i = 0;
  while (i < plan.actions.size()) {
    const Move m = plan.actions[i];
    Cell end = at;
    while (i < plan.actions.size() && plan.actions[i] == m) {
      end = step(end, m);
      ++i;
    }
    strokes.push_back({plan_cell_center(at, g, layout), plan_cell_center(end, g, layout), p.dig_depth});
    at = end;
  }
  return strokes;
}

const std::vector<LetterGoal>& letter_suite() {
  // '0' is dug. Strokes are one cell wide so every letter is a thin path.
  static const std::vector<LetterGoal> suite{
      {"A",
       {"1000001", "1011101", "1011101", "1000001", "1011101", "1011101", "1011101"},
       {6, 1}},
      {"S",
       {"1000001", "1011111", "1011111", "1000001", "1111101", "1111101", "1000001"},
       {0, 5}},
      {"T",
       {"0000000", "1110111", "1110111", "1110111", "1110111", "1110111", "1110111"},
       {6, 3}},
      {"R",
       {"1000001", "1011101", "1011101", "1000001", "1010111", "1010011", "1011001"},
       {6, 1}},
  };
  return suite;
}

}  // namespace sandshape::planner
