#include "doctest.h"

#include "helpers.hpp"

#include "sandshape/io.hpp"
#include "sandshape/trenchlab.hpp"

#include <fstream>
#include <sstream>

using namespace sandshape;
using namespace sandshape::trenchlab;

namespace {

const GridGeometry kDesk{64, 64, 0.0025};

TowRun desk_run(double h0, double beta) { return {h0, beta, {0.03, 0.08}, {0.11, 0.08}}; }

TowResult desk_tow(double h0, double beta) {
  return tow_wheel(new_heightmap(kDesk, 0.1), WheelParams{}, desk_run(h0, beta), trench_soil());
}

double trench_depth(const HeightMapd& h, double reference) { return reference - h.heights.minCoeff(); }

Profile profile(std::vector<double> stations, std::vector<double> heights) {
  return {std::move(stations), std::move(heights)};
}

}  // namespace

TEST_CASE("wheel and run validation") {
  CHECK_NOTHROW(validate(WheelParams{}));
  CHECK_THROWS_AS(validate(WheelParams{0.0, 0.05, 0.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(validate(WheelParams{0.05, 0.05, 0.0, 1.5}), InvalidArgument);
  CHECK_THROWS_AS(validate(desk_run(0.0, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(validate(desk_run(0.01, 91.0)), InvalidArgument);
  CHECK_THROWS_AS(validate(desk_run(0.01, -1.0)), InvalidArgument);
  CHECK(trench_soil().repose_angle_deg == 29.0);
  CHECK(trench_soil().cohesion == 0.0);
}

TEST_CASE("contact chord") {
  CHECK(chord_length(0.048, 0.015) == doctest::Approx(2.0 * std::sqrt(2 * 0.048 * 0.015 - 0.015 * 0.015)));
  CHECK(chord_length(0.048, 0.048) == doctest::Approx(0.096));
  CHECK(chord_length(0.048, 0.2) == doctest::Approx(0.096));
  CHECK(chord_length(0.048, 0.0) == 0.0);
  const BladeParams fp = wheel_footprint(WheelParams{}, 0.005);
  CHECK(fp.width == 0.05);
  CHECK(fp.thickness == doctest::Approx(chord_length(0.048, 0.005)));
  CHECK(fp.depth == 0.005);
}

TEST_CASE("tow poses head along travel plus slip") {
  const auto poses = tow_poses(desk_run(0.01, 45.0), 0.01, 0.09);
  REQUIRE(poses.size() == 9);
  for (const auto& p : poses) {
    CHECK(p.heading == doctest::Approx(std::numbers::pi / 4));
    CHECK(p.bottom_height == 0.09);
  }
  TowRun up{0.01, 0.0, {0.05, 0.02}, {0.05, 0.1}};
  CHECK(tow_poses(up, 0.01, 0.0).front().heading == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("a tow conserves volume and leaves walls at repose") {
  for (double beta : {0.0, 45.0, 90.0}) {
    const TowResult r = desk_tow(0.01, beta);
    REQUIRE(r.stats.final_report.converged);
    CHECK_FALSE(r.skipped);
    CHECK(r.excavated_volume > 0.0);
    CHECK(std::abs(r.excavated_volume - r.berm_volume) / r.excavated_volume <= 1e-6);
    CHECK(std::abs(total_volume(r.map) - 0.1 * kDesk.cell_count() * kDesk.cell_area()) <= 1e-15);
    CHECK(local_excess_slope(r.map, trench_soil(), empty_mask(kDesk)) <= 0.01 * trench_soil().repose_slope());
    CHECK(r.reference_level == 0.1);
  }
}

TEST_CASE("trench depth grows with sinkage") {
  for (double beta : {0.0, 67.5}) {
    double last = 0.0;
    for (double h0 : {0.003, 0.008, 0.015}) {
      const TowResult r = desk_tow(h0, beta);
      const double depth = trench_depth(r.map, r.reference_level);
      CHECK(depth >= last);
      CHECK(depth <= h0 + 1e-12);
      last = depth;
    }
  }
}

TEST_CASE("sinkage below the tolerance is skipped") {
  const TowResult r = desk_tow(1e-7, 0.0);
  CHECK(r.skipped);
  CHECK(r.excavated_volume == 0.0);
  CHECK(bit_identical(r.map, new_heightmap(kDesk, 0.1)));
}

TEST_CASE("tow paths must stay on the grid") {
  TowRun off{0.01, 0.0, {0.03, 0.08}, {0.2, 0.08}};
  CHECK_THROWS_AS(tow_wheel(new_heightmap(kDesk, 0.1), WheelParams{}, off, trench_soil()), InvalidArgument);
}

TEST_CASE("towing along y mirrors towing along x") {
  const HeightMapd flat = new_heightmap(kDesk, 0.1);
  const TowRun x{0.01, 0.0, {0.03, 0.08}, {0.11, 0.08}};
  const TowRun y{0.01, 0.0, {0.08, 0.03}, {0.08, 0.11}};
  const auto a = tow_wheel(flat, WheelParams{}, x, trench_soil());
  const auto b = tow_wheel(flat, WheelParams{}, y, trench_soil());
  CHECK((a.map.heights - b.map.heights.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("repeated tows are identical") {
  const TowResult a = desk_tow(0.008, 22.5);
  const TowResult b = desk_tow(0.008, 22.5);
  CHECK(bit_identical(a.map, b.map));
  const Profile pa = cross_section(a.map, 0.07);
  const ProfileErrors e = profile_errors(pa, cross_section(b.map, 0.07));
  CHECK(e.avg_error_mm == 0.0);
  CHECK(e.median_error_mm == 0.0);
  CHECK(e.depth_error_mm == 0.0);
}

TEST_CASE("cross sections") {
  HeightMapd h = new_heightmap(GridGeometry{4, 5, 0.01}, 0.0);
  for (std::ptrdiff_t r = 0; r < 4; ++r) h(r, 2) = static_cast<double>(r);
  const Profile across_x = cross_section(h, 0.025);
  CHECK(across_x.stations == std::vector<double>{0.005, 0.015, 0.025, 0.035});
  CHECK(across_x.heights == std::vector<double>{0, 1, 2, 3});
  const Profile across_y = cross_section(h, 0.005, Travel::AlongY);
  CHECK(across_y.heights.size() == 5);
  CHECK(across_y.heights[2] == 0.0);
  CHECK_THROWS_AS(cross_section(h, 0.2), InvalidArgument);
}

TEST_CASE("profile comparison") {
  const Profile a = profile({0.0, 0.01, 0.02, 0.03}, {0.0, -0.002, -0.004, 0.0});
  const ProfileErrors self = profile_errors(a, a);
  CHECK(self.avg_error_mm == 0.0);
  CHECK(self.depth_error_mm == 0.0);

  Profile shifted = a;
  for (auto& v : shifted.heights) v += 0.001;
  const ProfileErrors one = profile_errors(a, shifted);
  CHECK(one.avg_error_mm == doctest::Approx(1.0));
  CHECK(one.median_error_mm == doctest::Approx(1.0));
  CHECK(one.depth_error_mm == doctest::Approx(1.0));
  CHECK(profile_rms(a, shifted) == doctest::Approx(0.001));

  // The reference is resampled onto the simulated stations it spans.
  const Profile coarse = profile({0.0, 0.02, 0.04}, {0.0, -0.004, 0.0});
  const ProfileErrors interp = profile_errors(a, coarse);
  CHECK(interp.avg_error_mm == doctest::Approx(0.5));
  CHECK(interp.median_error_mm == doctest::Approx(0.0));

  CHECK_THROWS_AS(profile_errors(a, profile({1.0, 2.0}, {0.0, 0.0})), InvalidArgument);
  CHECK_THROWS_AS(validate(profile({0.0, 0.0}, {0.0, 1.0})), InvalidArgument);
  CHECK_THROWS_AS(profile_rms(a, coarse), InvalidArgument);
}

TEST_CASE("profile CSV round trip") {
  const Profile p = profile({0.0, 0.0025, 0.005}, {0.1, 0.095, 0.1025});
  std::stringstream ss;
  write_profile_csv(p, ss);
  const Profile back = read_profile_csv(ss);
  REQUIRE(back.stations.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.stations[i] == doctest::Approx(p.stations[i]).epsilon(1e-15));
    CHECK(back.heights[i] == doctest::Approx(p.heights[i]).epsilon(1e-15));
  }
  std::istringstream bare("0,1\n2.5,-3\n");
  const Profile nh = read_profile_csv(bare);
  CHECK(nh.heights[1] == doctest::Approx(-0.003));
  for (const char* bad : {"station_mm,height_mm\n1;2\n", "1,x\n", "2,0\n1,0\n", ""}) {
    std::istringstream in(bad);
    CHECK_THROWS_AS(read_profile_csv(in), FormatError);
  }
}

TEST_CASE("mid-path stations and run names") {
  const auto st = mid_path_stations(TowRun{0.01, 0.0, {0.0, 0.1}, {1.0, 0.1}}, 5);
  REQUIRE(st.size() == 5);
  CHECK(st.front() == doctest::Approx(0.4));
  CHECK(st.back() == doctest::Approx(0.6));
  CHECK(reference_name(0.0, 0.005) == "b0_h5");
  CHECK(reference_name(22.5, 0.015) == "b22.5_h15");
}

TEST_CASE("sweep table and files") {
  CHECK(sweep(SweepConfig{{}, {}}).empty());

  const auto dir = testing::scratch_dir("sweep");
  const auto refs = dir / "refs";
  std::filesystem::create_directories(refs);
  SweepConfig cfg;
  cfg.slip_angles_deg = {0.0, 90.0};
  cfg.sinkages = {0.005, 0.01};
  cfg.geometry = kDesk;
  cfg.start_margin = 0.03;
  cfg.end_margin = 0.05;

  // A reference equal to the simulated profile of one run.
  const auto first = sweep(SweepConfig{{0.0}, {0.005}, cfg.wheel, cfg.soil, kDesk, 0.1, 0.03, 0.05});
  REQUIRE(first.size() == 1);
  write_profile_csv(first.front().profile, refs / ("ref_" + reference_name(0.0, 0.005) + ".csv"));
  cfg.reference_dir = refs;

  const auto rows = sweep(cfg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].slip_angle_deg == 0.0);
  CHECK(rows[1].sinkage == 0.01);
  REQUIRE(rows[0].errors.has_value());
  CHECK(rows[0].errors->avg_error_mm <= 1e-6);
  CHECK_FALSE(rows[1].errors.has_value());
  for (const auto& r : rows) {
    CHECK(r.converged);
    CHECK(r.conservation_error <= 1e-6);
    CHECK(r.max_excess_slope <= 0.01 * trench_soil().repose_slope());
  }
  CHECK(rows[1].depth_mm >= rows[0].depth_mm);

  write_sweep(rows, dir / "out");
  std::size_t profiles = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "out"))
    if (e.path().filename().string().starts_with("profile_")) ++profiles;
  CHECK(profiles == 4);
  std::ifstream summary(dir / "out" / "summary.csv");
  std::string header;
  std::getline(summary, header);
  CHECK(header.starts_with("trench_type,avg_error_mm,median_error_mm,depth_error_mm"));
  std::size_t lines = 0;
  for (std::string l; std::getline(summary, l);) ++lines;
  CHECK(lines == 4);
  CHECK(std::filesystem::exists(dir / "out" / "group_means.csv"));
}
