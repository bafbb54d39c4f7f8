#include "doctest.h"

#include "helpers.hpp"
#include "oracles.hpp"

#include "sandshape/erosion.hpp"

using namespace sandshape;

namespace {

// The isolated pair [2, 0] as two identical rows under Four connectivity:
// the vertical pairs are level, so each row relaxes as a 1-D pair.
HeightMapd two_cell_pair(double left, double right) {
  HeightMapd h = new_heightmap(GridGeometry{2, 2, 1.0}, 0.0);
  h(0, 0) = h(1, 0) = left;
  h(0, 1) = h(1, 1) = right;
  return h;
}

SoilParams pair_soil(double k) {
  SoilParams soil;
  soil.repose_angle_deg = 45.0;
  soil.connectivity = Connectivity::Four;
  soil.flow_rate = k;
  return soil;
}

CellMask random_mask(const GridGeometry& g, double density, std::mt19937_64& rng) {
  CellMask m = empty_mask(g);
  for (std::ptrdiff_t r = 0; r < g.rows; ++r)
    for (std::ptrdiff_t c = 0; c < g.cols; ++c) m.occupied(r, c) = testing::uniform(rng, 0, 1) < density;
  return m;
}

Region random_region(const GridGeometry& g, std::mt19937_64& rng) {
  auto pick = [&](std::ptrdiff_t n) { return static_cast<std::ptrdiff_t>(rng() % static_cast<std::uint64_t>(n)); };
  std::ptrdiff_t r0 = pick(g.rows), r1 = pick(g.rows), c0 = pick(g.cols), c1 = pick(g.cols);
  if (r0 > r1) std::swap(r0, r1);
  if (c0 > c1) std::swap(c0, c1);
  return {r0, r1, c0, c1};
}

}  // namespace

TEST_CASE("two-cell pair lands on repose in one step at k = 0.5") {
  const HeightMapd h = two_cell_pair(2.0, 0.0);
  const auto soil = pair_soil(0.5);
  const auto step = relax_step(h, soil, empty_mask(h.geometry), full_region(h.geometry));
  for (std::ptrdiff_t r = 0; r < 2; ++r) {
    CHECK(step.map(r, 0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(step.map(r, 1) == doctest::Approx(0.5).epsilon(1e-12));
  }
  CHECK(step.max_excess == doctest::Approx(1.0));
  CHECK(step.max_delta == doctest::Approx(0.5));
  CHECK(local_excess_slope(step.map, soil, empty_mask(h.geometry)) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("two-cell pair needs more than one step below k = 0.5") {
  for (double k : {0.1, 0.25, 0.4, 0.49}) {
    const HeightMapd h = two_cell_pair(2.0, 0.0);
    const auto soil = pair_soil(k);
    const auto step = relax_step(h, soil, empty_mask(h.geometry), full_region(h.geometry));
    // Closed form: the gap shrinks by 2k per step.
    CHECK(step.map(0, 0) == doctest::Approx(2.0 - k).epsilon(1e-14));
    CHECK(local_excess_slope(step.map, soil, empty_mask(h.geometry)) == doctest::Approx(1.0 - 2.0 * k));
  }
}

TEST_CASE("no sign flip for any k up to the optimum") {
  for (double k = 0.05; k <= 0.5 + 1e-12; k += 0.05) {
    const HeightMapd h = two_cell_pair(3.0, 0.0);
    const auto step = relax_step(h, pair_soil(k), empty_mask(h.geometry), full_region(h.geometry));
    CHECK(step.map(0, 0) - step.map(0, 1) >= 1.0 - 1e-12);
  }
}

TEST_CASE("relax_step matches the pair-by-pair oracle bit for bit") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 400; ++trial) {
    const GridGeometry g{2 + static_cast<std::ptrdiff_t>(rng() % 14), 2 + static_cast<std::ptrdiff_t>(rng() % 14),
                         testing::uniform(rng, 0.005, 0.05)};
    const HeightMapd h = testing::noisy_map(g, 0.05, testing::uniform(rng, 0.0, 0.1), rng);
    SoilParams soil;
    soil.connectivity = rng() % 2 ? Connectivity::Eight : Connectivity::Four;
    soil.boundary = rng() % 3 == 0 ? Boundary::Open : Boundary::Closed;
    soil.repose_angle_deg = testing::uniform(rng, 20.0, 40.0);
    const CellMask mask = rng() % 2 ? random_mask(g, 0.2, rng) : empty_mask(g);
    const Region region = rng() % 2 ? random_region(g, rng) : full_region(g);

    const auto fast = relax_step(h, soil, mask, region);
    const auto slow = oracle::naive_relax_step(h, soil, mask, region);
    REQUIRE(bit_identical(fast.map, slow.map));
    CHECK(fast.max_excess == slow.max_excess);
    CHECK(fast.max_delta == slow.max_delta);
    CHECK(fast.changed == slow.changed);

    const HeightMapf hf = h.cast<float>();
    REQUIRE(bit_identical(relax_step(hf, soil, mask, region).map, oracle::naive_relax_step(hf, soil, mask, region).map));
  }
}

TEST_CASE("masked cells and cells outside the region do not change") {
  std::mt19937_64 rng(8);
  const GridGeometry g{12, 12, 0.01};
  const HeightMapd h = testing::noisy_map(g, 0.0, 0.05, rng);
  const CellMask mask = random_mask(g, 0.3, rng);
  const Region region{3, 8, 2, 9};
  const auto step = relax_step(h, SoilParams{}, mask, region);
  for (std::ptrdiff_t r = 0; r < g.rows; ++r)
    for (std::ptrdiff_t c = 0; c < g.cols; ++c)
      if (mask(r, c) || !region.contains(r, c)) CHECK(step.map(r, c) == h(r, c));
}

TEST_CASE("closed-boundary relaxation conserves volume") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const GridGeometry g{16, 16, 0.01};
    const HeightMapd h = testing::noisy_map(g, 0.05, 0.03, rng);
    SoilParams soil;
    soil.connectivity = trial % 2 ? Connectivity::Four : Connectivity::Eight;
    const CellMask mask = trial % 3 == 0 ? random_mask(g, 0.1, rng) : empty_mask(g);
    const auto [out, report] = relax_to_steady(h, soil, mask, full_region(g));
    CHECK(std::abs(total_volume(out) - total_volume(h)) / total_volume(h) <= 1e-12);
    CHECK(report.converged);
  }
}

TEST_CASE("open boundary only drains sand") {
  std::mt19937_64 rng(9);
  const GridGeometry g{10, 10, 0.01};
  const HeightMapd h = testing::noisy_map(g, 0.02, 0.002, rng);
  SoilParams soil;
  soil.boundary = Boundary::Open;
  const auto step = relax_step(h, soil, empty_mask(g), full_region(g));
  CHECK(total_volume(step.map) < total_volume(h));
}

TEST_CASE("converged maps are within the slope tolerance") {
  std::mt19937_64 rng(31);
  for (auto conn : {Connectivity::Four, Connectivity::Eight}) {
    const GridGeometry g{20, 24, 0.01};
    const HeightMapd h = testing::noisy_map(g, 0.05, 0.04, rng);
    SoilParams soil;
    soil.connectivity = conn;
    const auto [out, report] = relax_to_steady(h, soil, empty_mask(g), full_region(g));
    REQUIRE(report.converged);
    CHECK(report.final_excess_slope <= slope_tolerance(soil, g));
    CHECK(report.final_excess_slope == local_excess_slope(out, soil, empty_mask(g)));
    CHECK(report.iterations <= effective_max_iters(soil, g));
    CHECK(report.cells_touched == report.iterations * g.cell_count());
  }
}

TEST_CASE("a map at repose takes one verification step") {
  const GridGeometry g{8, 8, 0.01};
  const HeightMapd flat = new_heightmap(g, 0.05);
  const auto [out, report] = relax_to_steady(flat, SoilParams{}, empty_mask(g), full_region(g));
  CHECK(report.converged);
  CHECK(report.iterations == 1);
  CHECK(bit_identical(out, flat));
}

TEST_CASE("non-convergence is reported, not thrown") {
  const GridGeometry g{16, 16, 0.01};
  HeightMapd h = new_heightmap(g, 0.0);
  h(8, 8) = 0.5;
  RelaxOptions options;
  options.max_iters = 3;
  const auto [out, report] = relax_to_steady(h, SoilParams{}, empty_mask(g), full_region(g), options);
  CHECK_FALSE(report.converged);
  CHECK(report.iterations == 3);
  CHECK(report.final_excess_slope > slope_tolerance(SoilParams{}, g));
}

TEST_CASE("relaxation commutes with a transpose") {
  std::mt19937_64 rng(12);
  const GridGeometry g{14, 14, 0.01};
  const HeightMapd h = testing::noisy_map(g, 0.05, 0.03, rng);
  const HeightMapd t{g, h.heights.transpose()};
  const auto a = relax_to_steady(h, SoilParams{}, empty_mask(g), full_region(g));
  const auto b = relax_to_steady(t, SoilParams{}, empty_mask(g), full_region(g));
  CHECK(a.second.iterations == b.second.iterations);
  CHECK((a.first.heights - b.first.heights.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("a growing region reproduces the full-grid result") {
  const GridGeometry g{40, 40, 0.01};
  HeightMapd h = new_heightmap(g, 0.05);
  for (std::ptrdiff_t r = 18; r < 22; ++r)
    for (std::ptrdiff_t c = 18; c < 22; ++c) h(r, c) = 0.09;
  RelaxOptions grow;
  grow.grow_region = true;
  const auto bounded = relax_to_steady(h, SoilParams{}, empty_mask(g), Region{16, 23, 16, 23}, grow);
  const auto full = relax_to_steady(h, SoilParams{}, empty_mask(g), full_region(g));
  CHECK(bounded.second.converged);
  CHECK(bit_identical(bounded.first, full.first));
  CHECK(bounded.second.cells_touched < full.second.cells_touched);
  CHECK(bounded.second.final_region.cell_count() < g.cell_count());
}

TEST_CASE("a sand column collapses to a cone at repose") {
  const GridGeometry g{41, 41, 0.01};
  HeightMapd h = new_heightmap(g, 0.0);
  h(20, 20) = 0.2;
  SoilParams soil;
  soil.max_relax_iters = 5000;
  const auto [cone, report] = relax_to_steady(h, soil, empty_mask(g), full_region(g));
  REQUIRE(report.converged);
  CHECK(report.final_excess_slope <= 0.01 * soil.repose_slope());
  CHECK(cone(20, 20) == cone.heights.maxCoeff());
  CHECK(total_volume(cone) == doctest::Approx(total_volume(h)).epsilon(1e-12));
  CHECK(cone(20, 25) == doctest::Approx(cone(25, 20)).epsilon(1e-9));
}
