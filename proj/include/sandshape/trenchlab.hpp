#pragma once

#include "sandshape/heightmap.hpp"
#include "sandshape/tool.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sandshape::trenchlab {

/// Single-wheel geometry in meters. Grousers are recorded but not simulated.
struct WheelParams {
  double radius = 0.048;
  double width = 0.050;
  double grouser_height = 0.005;
  double grouser_fraction = 0.1;
};

void validate(const WheelParams& wheel);

/// Repose 29 deg, no cohesion, and a relaxation cap high enough for the
/// slow collapse of 160 x 160 trench walls.
SoilParams trench_soil();

struct TowRun {
  double sinkage = 0.015;     // h0, meters below the reference surface
  double slip_angle_deg = 0;  // beta, wheel plane relative to travel
  Point start;
  Point end;
  double speed = 0.03;        // m/s; the tow is quasi-static, so unused
};

void validate(const TowRun& run);

/// Contact chord of a circle of `radius` cut at depth h0, capped at the diameter.
double chord_length(double radius, double sinkage);

/// Chord x width rectangle used as the wheel's blade footprint.
BladeParams wheel_footprint(const WheelParams& wheel, double sinkage);

/// Poses along the tow path, one every dx, headed travel + beta, with the
/// bottom at reference - h0.
std::vector<ToolPose> tow_poses(const TowRun& run, double dx, double bottom);

struct TowResult {
  HeightMapd map;
  StrokeStats stats;
  double excavated_volume = 0.0;  // m^3 below the initial surface
  double berm_volume = 0.0;       // m^3 above it
  double reference_level = 0.0;
  bool skipped = false;           // sinkage below the convergence tolerance
};

/// Sweeps the wheel footprint along the run and relaxes once it lifts.
/// `config.reference_level` defaults to the median height.
TowResult tow_wheel(const HeightMapd& h, const WheelParams& wheel, const TowRun& run,
                    const SoilParams& soil, const ToolConfig& config = {});

struct Profile {
  std::vector<double> stations;  // meters, strictly increasing
  std::vector<double> heights;   // meters
};

void validate(const Profile& p);

enum class Travel { AlongX, AlongY };

/// Heights across the travel direction through the cell column (AlongX) or
/// row (AlongY) nearest `station`.
Profile cross_section(const HeightMapd& h, double station, Travel travel = Travel::AlongX);

/// Root-mean-square height difference of two profiles on the same stations.
double profile_rms(const Profile& a, const Profile& b);

struct ProfileErrors {
  double avg_error_mm = 0.0;
  double median_error_mm = 0.0;
  double depth_error_mm = 0.0;
};

/// The reference is resampled onto the simulated stations it spans by linear
/// interpolation; simulated stations outside it are ignored.
ProfileErrors profile_errors(const Profile& simulated, const Profile& reference);

/// Two-column CSV, station_mm,height_mm, with an optional header row.
Profile read_profile_csv(std::istream& in);
Profile read_profile_csv(const std::filesystem::path& path);
void write_profile_csv(const Profile& p, std::ostream& out);
void write_profile_csv(const Profile& p, const std::filesystem::path& path);

struct SweepConfig {
  std::vector<double> slip_angles_deg{0.0, 22.5, 45.0, 67.5, 90.0};
  std::vector<double> sinkages{0.005, 0.015, 0.025};
  WheelParams wheel{};
  SoilParams soil = trench_soil();
  GridGeometry geometry{160, 160, 0.0025};
  double initial_height = 0.1;
  double start_margin = 0.06;  // path start, from the left edge
  double end_margin = 0.10;    // path end, from the right edge
  int station_count = 5;       // mid-path stations for the steadiness check
  int step_relax_iters = 10;   // relaxation cap between wheel steps
  std::optional<std::filesystem::path> reference_dir;  // ref_b<beta>_h<mm>.csv
};

struct SweepRow {
  double slip_angle_deg = 0.0;
  double sinkage = 0.0;
  std::optional<ProfileErrors> errors;  // present when a reference exists
  double depth_mm = 0.0;
  double excavated_volume = 0.0;
  double berm_volume = 0.0;
  double conservation_error = 0.0;  // |excavated - berm| / excavated
  double steadiness_rms_mm = 0.0;   // worst pairwise RMS over mid-path stations
  double max_excess_slope = 0.0;
  int final_iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  Profile profile;  // central mid-path station
};

/// Mid-path station positions, spread over the middle fifth of the path.
std::vector<double> mid_path_stations(const TowRun& run, int count);

std::string reference_name(double slip_angle_deg, double sinkage);

std::vector<SweepRow> sweep(const SweepConfig& config);

/// summary.csv with the error columns first plus the property columns, and one
/// profile_b<beta>_h<mm>.csv per run.
void write_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& dir);

}  // namespace sandshape::trenchlab
