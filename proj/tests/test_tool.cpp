#include "doctest.h"

#include "helpers.hpp"

#include "sandshape/tool.hpp"

using namespace sandshape;

namespace {

constexpr double kDx = 0.01;

double rel_drift(const HeightMapd& a, const HeightMapd& b) {
  return std::abs(total_volume(a) - total_volume(b)) / total_volume(a);
}

std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>> cells_of(const CellMask& m) {
  std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>> out;
  for (std::ptrdiff_t r = 0; r < m.geometry.rows; ++r)
    for (std::ptrdiff_t c = 0; c < m.geometry.cols; ++c)
      if (m(r, c)) out.emplace_back(r, c);
  return out;
}

}  // namespace

TEST_CASE("blade validation") {
  const GridGeometry g{8, 8, kDx};
  CHECK_NOTHROW(validate(BladeParams{kDx, kDx, kDx}, g));
  CHECK_THROWS_AS(validate(BladeParams{0.5 * kDx, kDx, kDx}, g), InvalidArgument);
  CHECK_THROWS_AS(validate(BladeParams{kDx, 0.0, kDx}, g), InvalidArgument);
  CHECK_THROWS_AS(validate(BladeParams{kDx, kDx, -1.0}, g), InvalidArgument);
}

TEST_CASE("an axis-aligned 3 x 1 blade covers a 3 x 1 block") {
  const GridGeometry g{9, 9, kDx};
  const BladeParams blade{3 * kDx, kDx, kDx};
  const Point center = cell_center(g, 4, 4);
  using Cells = std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>>;
  // Heading 0 moves along +x, so the width spans rows.
  CHECK(cells_of(footprint_cells({center, 0.0, 0.0}, blade, g)) == Cells{{3, 4}, {4, 4}, {5, 4}});
  CHECK(cells_of(footprint_cells({center, std::numbers::pi / 2, 0.0}, blade, g)) == Cells{{4, 3}, {4, 4}, {4, 5}});
}

TEST_CASE("a footprint off the grid is an error") {
  const GridGeometry g{8, 8, kDx};
  CHECK_THROWS_AS(footprint_cells({{-0.05, 0.04}, 0.0, 0.0}, BladeParams{kDx, kDx, kDx}, g), InvalidArgument);
  // Partly on the grid is fine.
  CHECK(footprint_cells({{0.0, 0.005}, 0.0, 0.0}, BladeParams{3 * kDx, 2 * kDx, kDx}, g).count() > 0);
}

TEST_CASE("a blade that misses every cell center occupies the cell under it") {
  const GridGeometry g{8, 8, kDx};
  const BladeParams thin{0.4 * kDx, 0.4 * kDx, kDx};
  CHECK(cells_of(footprint_cells({{0.04, 0.04}, 0.3, 0.0}, thin, g)).size() == 1);
  CHECK(footprint_cells({{0.04, 0.04}, 0.3, 0.0}, thin, g)(4, 4));
  CHECK_THROWS_AS(footprint_cells({{0.085, 0.04}, 0.3, 0.0}, thin, g), InvalidArgument);
}

TEST_CASE("direction split weights") {
  auto east = split_direction(1.0, 0.0);
  CHECK(east.first == 2);
  CHECK(east.first_weight == 1.0);
  CHECK(east.second_weight == 0.0);

  auto half = split_direction(1.0, std::tan(std::numbers::pi / 8));
  CHECK(half.first == 2);
  CHECK(half.second == 3);
  CHECK(half.first_weight == doctest::Approx(0.5));

  auto north = split_direction(0.0, -2.0);
  CHECK(north.first == 0);
  CHECK(north.first_weight == 1.0);

  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const double a = testing::uniform(rng, -4.0, 4.0);
    const auto s = split_direction(std::cos(a), std::sin(a));
    CHECK(s.first_weight + s.second_weight == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.first_weight >= 0.0);
    CHECK(s.second_weight >= 0.0);
    const auto m = split_direction(-std::cos(a), std::sin(a));
    CHECK(m.first_weight == s.first_weight);
  }
}

TEST_CASE("placement above the surface changes nothing") {
  const GridGeometry g{16, 16, kDx};
  const HeightMapd flat = new_heightmap(g, 0.05);
  auto [out, volume] = apply_placement(flat, {{0.08, 0.08}, 0.0, 0.06}, BladeParams{3 * kDx, kDx, kDx}, {});
  CHECK(volume == 0.0);
  CHECK(bit_identical(out, flat));
}

TEST_CASE("centered placement conserves volume and keeps the footprint at the bottom") {
  const GridGeometry g{21, 21, kDx};
  const HeightMapd flat = new_heightmap(g, 0.05);
  const ToolPose pose{cell_center(g, 10, 10), 0.0, 0.04};
  const BladeParams blade{3 * kDx, 3 * kDx, kDx};
  auto [out, volume] = apply_placement(flat, pose, blade, {});
  CHECK(volume == doctest::Approx(9 * 0.01 * kDx * kDx).epsilon(1e-12));
  CHECK(rel_drift(flat, out) <= 1e-9);
  const CellMask fp = footprint_cells(pose, blade, g);
  for (const auto& [r, c] : cells_of(fp)) CHECK(out(r, c) == doctest::Approx(0.04).epsilon(1e-15));
  CHECK(out.heights.maxCoeff() > 0.05);
}

TEST_CASE("a square blade on flat sand leaves a symmetric map") {
  const GridGeometry g{21, 21, kDx};
  const HeightMapd flat = new_heightmap(g, 0.05);
  auto [out, volume] = apply_placement(flat, {cell_center(g, 10, 10), 0.0, 0.035}, BladeParams{3 * kDx, 3 * kDx, kDx}, {});
  const Grid<double>& m = out.heights;
  CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((m - m.colwise().reverse()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((m - m.rowwise().reverse()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("an eastward push deposits just east of the leading edge") {
  const GridGeometry g{5, 5, 1.0};
  HeightMapd h = new_heightmap(g, 1.0);
  const HeightMapd before = h;
  const ToolPose pose{cell_center(g, 2, 2), 0.0, 0.25};
  const CellMask fp = footprint_cells(pose, BladeParams{3.0, 1.0, 0.75}, g);
  const Displacement d = push_along(h, fp, 1.0, 0.0, 0.25);
  CHECK(d.volume == doctest::Approx(3 * 0.75));
  for (std::ptrdiff_t r = 0; r < 5; ++r) {
    for (std::ptrdiff_t c = 0; c < 5; ++c) {
      if (fp(r, c)) {
        CHECK(h(r, c) == 0.25);
      } else if (c == 3 && r >= 1 && r <= 3) {
        CHECK(h(r, c) == 1.75);
      } else {
        CHECK(h(r, c) == before(r, c));
      }
    }
  }
  CHECK(d.modified == Region{1, 3, 2, 3});
}

TEST_CASE("moves") {
  const GridGeometry g{16, 16, kDx};
  const HeightMapd flat = new_heightmap(g, 0.05);
  const BladeParams blade{3 * kDx, kDx, kDx};
  const ToolPose a{cell_center(g, 8, 5), 0.0, 0.04};
  ToolPose b = a;
  b.center.x += kDx;

  auto [high, none] = apply_move(flat, {a.center, 0.0, 0.06}, {b.center, 0.0, 0.06}, blade, {});
  CHECK(none == 0.0);
  CHECK(bit_identical(high, flat));

  const auto placed = apply_placement(flat, a, blade, {}).first;
  auto [moved, volume] = apply_move(placed, a, b, blade, {});
  CHECK(volume > 0.0);
  CHECK(rel_drift(flat, moved) <= 1e-9);

  ToolPose far = a;
  far.center.x += 1.5 * kDx;
  CHECK_THROWS_AS(apply_move(placed, a, far, blade, {}), InvalidArgument);
}

TEST_CASE("rasterization visits the start, every dx, and the end") {
  const auto exact = rasterize(Stroke{{0.1, 0.1}, {0.13, 0.1}, 0.01}, kDx, 0.02);
  REQUIRE(exact.size() == 4);
  CHECK(exact.back().center.x == doctest::Approx(0.13));
  CHECK(exact.front().bottom_height == 0.02);
  const auto ragged = rasterize(Stroke{{0.1, 0.1}, {0.1, 0.135}, 0.01}, kDx, 0.0);
  REQUIRE(ragged.size() == 5);
  CHECK(ragged.back().center == Point{0.1, 0.135});
  CHECK(ragged[1].heading == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("stroke bounds") {
  const GridGeometry g{20, 20, kDx};
  const BladeParams blade{3 * kDx, kDx, kDx};
  // Footprint sweeps columns 5..9 of rows 9..11.
  const Stroke s{cell_center(g, 10, 5), cell_center(g, 10, 9), kDx};
  const Region r = stroke_bounds(s, blade, g, {}, 2);
  CHECK(r == Region{7, 13, 3, 11});
  CHECK(r.cols() == 9);
  CHECK(stroke_bounds(s, blade, g, {}, 100) == full_region(g));
  // Default margin: ceil(depth / (dx tan 29)) + 2 = 4.
  CHECK(stroke_bounds(s, blade, g, {}) == Region{5, 15, 1, 13});
  CHECK_THROWS_AS(stroke_bounds(Stroke{{0.1, 0.1}, {0.1, 0.1}, kDx}, blade, g, {}), InvalidArgument);
}

TEST_CASE("a stroke over sand already at the blade bottom pushes nothing") {
  const GridGeometry g{32, 32, kDx};
  const HeightMapd dug = new_heightmap(g, 0.04);
  ToolConfig config;
  config.reference_level = 0.05;
  auto [out, stats] = execute_stroke(dug, Stroke{{0.08, 0.165}, {0.24, 0.165}, kDx}, {3 * kDx, kDx, kDx}, {}, config);
  CHECK(stats.displaced_volume <= 1e-9);
  CHECK(bit_identical(out, dug));
}

TEST_CASE("a straight stroke digs a trench with berms at repose") {
  const GridGeometry g{32, 32, kDx};
  const HeightMapd flat = new_heightmap(g, 0.05);
  const SoilParams soil;
  auto [out, stats] = execute_stroke(flat, Stroke{{0.08, 0.165}, {0.24, 0.165}, kDx}, {0.05, kDx, kDx}, soil);
  REQUIRE(stats.final_report.converged);
  CHECK(stats.displaced_volume > 0.0);
  CHECK(rel_drift(flat, out) <= 1e-9);
  CHECK(out(16, 16) < 0.05 - 0.5 * kDx);
  CHECK(out.heights.maxCoeff() > 0.05);
  CHECK(local_excess_slope(out, soil, empty_mask(g)) <= slope_tolerance(soil, g));
  CHECK(stats.final_report.iterations <= 100);
}

TEST_CASE("two overlapping parallel strokes make a wider trench") {
  const GridGeometry g{32, 32, kDx};
  const HeightMapd flat = new_heightmap(g, 0.05);
  const BladeParams blade{0.03, kDx, kDx};
  ToolConfig config;
  config.reference_level = 0.05;
  auto [one, s1] = execute_stroke(flat, Stroke{{0.08, 0.155}, {0.24, 0.155}, kDx}, blade, {}, config);
  config.carry_region = s1.active_region;
  auto [two, s2] = execute_stroke(one, Stroke{{0.08, 0.175}, {0.24, 0.175}, kDx}, blade, {}, config);
  auto deep = [](const HeightMapd& h) { return (h.heights.array() < 0.05 - 0.005).count(); };
  CHECK(deep(two) > deep(one));
  CHECK(rel_drift(flat, two) <= 1e-9);
}

TEST_CASE("bounded stroke execution is bit-identical to the full grid") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 12; ++trial) {
    const GridGeometry g{24, 24, kDx};
    const HeightMapd start = testing::noisy_map(g, 0.05, 0.002, rng);
    const BladeParams blade{testing::uniform(rng, 1.0, 4.0) * kDx, kDx, testing::uniform(rng, 0.5, 1.5) * kDx};
    ToolConfig bounded, full;
    full.mode = UpdateMode::Full;
    HeightMapd hb = start, hf = start;
    for (int k = 0; k < 3; ++k) {
      Stroke s{{testing::uniform(rng, 0.02, 0.22), testing::uniform(rng, 0.02, 0.22)},
               {testing::uniform(rng, 0.02, 0.22), testing::uniform(rng, 0.02, 0.22)}, blade.depth};
      if (s.length() < kDx) continue;
      auto [nb, sb] = execute_stroke(hb, s, blade, {}, bounded);
      auto [nf, sf] = execute_stroke(hf, s, blade, {}, full);
      hb = std::move(nb);
      hf = std::move(nf);
      bounded.carry_region = sb.active_region;
      CHECK(sb.cells_touched <= sf.cells_touched);
      REQUIRE(bit_identical(hb, hf));
    }
  }
}

TEST_CASE("stroke execution is deterministic") {
  const GridGeometry g{24, 24, kDx};
  std::mt19937_64 rng(5);
  const HeightMapd start = testing::noisy_map(g, 0.05, 0.003, rng);
  const Stroke s{{0.03, 0.05}, {0.2, 0.17}, kDx};
  const auto a = execute_stroke(start, s, {0.03, kDx, kDx}, {});
  const auto b = execute_stroke(start, s, {0.03, kDx, kDx}, {});
  CHECK(bit_identical(a.first, b.first));
  CHECK(a.second.relax_iterations_total == b.second.relax_iterations_total);
}

TEST_CASE("median height") {
  HeightMapd h = new_heightmap(GridGeometry{2, 3, 1.0}, 0.0);
  h.heights << 5, 1, 3, 2, 4, 9;
  CHECK(median_height(h) == 4.0);
  CHECK(median_height(new_heightmap(GridGeometry{2, 2, 1.0}, 0.5)) == 0.5);
}
