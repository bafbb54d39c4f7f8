#include "sandshape/trenchlab.hpp"

#include "sandshape/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sandshape::trenchlab {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double interpolate(const Profile& p, double x) {
  const auto it = std::upper_bound(p.stations.begin(), p.stations.end(), x);
  if (it == p.stations.begin()) return p.heights.front();
  if (it == p.stations.end()) return p.heights.back();
  const auto i = static_cast<std::size_t>(it - p.stations.begin());
  const double x0 = p.stations[i - 1];
  const double x1 = p.stations[i];
  const double t = (x - x0) / (x1 - x0);
  return p.heights[i - 1] + t * (p.heights[i] - p.heights[i - 1]);
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void validate(const WheelParams& wheel) {
  if (!(wheel.radius > 0.0) || !(wheel.width > 0.0)) {
    throw InvalidArgument("wheel: radius and width must be positive");
  }
  if (wheel.grouser_height < 0.0 || wheel.grouser_fraction < 0.0 || wheel.grouser_fraction > 1.0) {
    throw InvalidArgument("wheel: grouser height and fraction out of range");
  }
}

SoilParams trench_soil() {
  SoilParams soil;
  soil.repose_angle_deg = 29.0;
  soil.cohesion = 0.0;
  soil.max_relax_iters = 12000;
  return soil;
}

void validate(const TowRun& run) {
  if (!(run.sinkage > 0.0)) throw InvalidArgument("tow run: sinkage must be positive");
  if (!(run.slip_angle_deg >= 0.0 && run.slip_angle_deg <= 90.0)) {
    throw InvalidArgument("tow run: slip angle must be in [0, 90] degrees");
  }
}

double chord_length(double radius, double sinkage) {
  const double h = std::min(sinkage, radius);
  return std::min(2.0 * std::sqrt(std::max(0.0, 2.0 * radius * h - h * h)), 2.0 * radius);
}

BladeParams wheel_footprint(const WheelParams& wheel, double sinkage) {
  return {wheel.width, chord_length(wheel.radius, sinkage), sinkage};
}

std::vector<ToolPose> tow_poses(const TowRun& run, double dx, double bottom) {
  const Stroke path{run.start, run.end, run.sinkage};
  if (path.length() < dx) throw InvalidArgument("tow run: path shorter than dx");
  auto poses = rasterize(path, dx, bottom);
  const double travel = std::atan2(run.end.y - run.start.y, run.end.x - run.start.x);
  for (auto& p : poses) p.heading = travel + run.slip_angle_deg * kDeg;
  return poses;
}

TowResult tow_wheel(const HeightMapd& h, const WheelParams& wheel, const TowRun& run,
                    const SoilParams& soil, const ToolConfig& config) {
  validate(wheel);
  validate(run);
  const auto& g = h.geometry;
  validate(soil, g);
  const Region inner{1, g.rows - 2, 1, g.cols - 2};
  const auto inside = [&](Point p) {
    return p.x >= 0.0 && p.x <= g.width() && p.y >= 0.0 && p.y <= g.height() &&
           inner.contains(static_cast<std::ptrdiff_t>(p.y / g.dx), static_cast<std::ptrdiff_t>(p.x / g.dx));
  };
  if (!inside(run.start) || !inside(run.end)) throw InvalidArgument("tow run: path leaves the grid");

  TowResult out;
  out.reference_level = config.reference_level ? *config.reference_level : median_height(h);
  if (run.sinkage <= slope_tolerance(soil, g) * g.dx) {
    out.map = h;
    out.skipped = true;
    return out;
  }

  const BladeParams blade = wheel_footprint(wheel, run.sinkage);
  const auto poses = tow_poses(run, g.dx, out.reference_level - run.sinkage);
  Region bounds{};
  for (const auto& p : poses) {
    const CellMask m = footprint_cells(p, blade, g);
    for (std::ptrdiff_t r = 0; r < g.rows; ++r) {
      for (std::ptrdiff_t c = 0; c < g.cols; ++c) {
        if (m(r, c)) bounds = merge(bounds, Region{r, r, c, c});
      }
    }
  }
  const auto margin = config.margin ? *config.margin
                                    : static_cast<std::ptrdiff_t>(std::ceil(run.sinkage / (g.dx * soil.repose_slope()))) + 2;
  bounds = dilate(bounds, margin, g);

  auto [map, stats] = execute_path(h, poses, blade, soil, config, bounds);
  const Grid<double> diff = map.heights - h.heights;
  out.excavated_volume = (-diff.array()).max(0.0).sum() * g.cell_area();
  out.berm_volume = diff.array().max(0.0).sum() * g.cell_area();
  out.map = std::move(map);
  out.stats = stats;
  return out;
}

void validate(const Profile& p) {
  if (p.stations.size() != p.heights.size()) throw InvalidArgument("profile: length mismatch");
  if (p.stations.empty()) throw InvalidArgument("profile: no stations");
  for (std::size_t i = 1; i < p.stations.size(); ++i) {
    if (!(p.stations[i] > p.stations[i - 1])) throw InvalidArgument("profile: stations must increase");
  }
}

Profile cross_section(const HeightMapd& h, double station, Travel travel) {
  const auto& g = h.geometry;
  const double extent = travel == Travel::AlongX ? g.width() : g.height();
  if (!(station >= 0.0 && station <= extent)) throw InvalidArgument("cross_section: station out of bounds");
  const auto count = travel == Travel::AlongX ? g.cols : g.rows;
  const auto index = std::clamp(static_cast<std::ptrdiff_t>(std::floor(station / g.dx)), std::ptrdiff_t{0},
                                count - 1);
  Profile p;
  const auto across = travel == Travel::AlongX ? g.rows : g.cols;
  for (std::ptrdiff_t i = 0; i < across; ++i) {
    p.stations.push_back((static_cast<double>(i) + 0.5) * g.dx);
    p.heights.push_back(travel == Travel::AlongX ? h(i, index) : h(index, i));
  }
  return p;
}

double profile_rms(const Profile& a, const Profile& b) {
  validate(a);
  validate(b);
  if (a.stations != b.stations) throw InvalidArgument("profile_rms: stations differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.heights.size(); ++i) {
    const double d = a.heights[i] - b.heights[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.heights.size()));
}

ProfileErrors profile_errors(const Profile& simulated, const Profile& reference) {
  validate(simulated);
  validate(reference);
  std::vector<double> abs_err;
  double sim_min = std::numeric_limits<double>::infinity();
  double ref_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < simulated.stations.size(); ++i) {
    const double x = simulated.stations[i];
    if (x < reference.stations.front() || x > reference.stations.back()) continue;
    const double r = interpolate(reference, x);
    abs_err.push_back(std::abs(simulated.heights[i] - r));
    sim_min = std::min(sim_min, simulated.heights[i]);
    ref_min = std::min(ref_min, r);
  }
  if (abs_err.empty()) throw InvalidArgument("profile_errors: station ranges do not overlap");
  ProfileErrors e;
  double sum = 0.0;
  for (double v : abs_err) sum += v;
  e.avg_error_mm = 1000.0 * sum / static_cast<double>(abs_err.size());
  e.median_error_mm = 1000.0 * median_of(abs_err);
  e.depth_error_mm = 1000.0 * std::abs(sim_min - ref_min);
  return e;
}

Profile read_profile_csv(std::istream& in) {
  Profile p;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("profile csv line " + std::to_string(line_no) + ": expected two columns");
    const auto parse = [&](std::string s, double& v) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(v);
    };
    double station = 0.0;
    double height = 0.0;
    const bool ok = parse(line.substr(0, comma), station) && parse(line.substr(comma + 1), height);
    if (!ok) {
      if (p.stations.empty() && line_no == 1) continue;  // header row
      throw FormatError("profile csv line " + std::to_string(line_no) + ": bad number");
    }
    p.stations.push_back(station / 1000.0);
    p.heights.push_back(height / 1000.0);
  }
  try {
    validate(p);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("profile csv: ") + e.what());
  }
  return p;
}

Profile read_profile_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open profile " + path.string());
  return read_profile_csv(in);
}

void write_profile_csv(const Profile& p, std::ostream& out) {
  validate(p);
  out << "station_mm,height_mm\n";
  for (std::size_t i = 0; i < p.stations.size(); ++i) {
    out << format_number(p.stations[i] * 1000.0) << ',' << format_number(p.heights[i] * 1000.0) << '\n';
  }
}

void write_profile_csv(const Profile& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write profile " + path.string());
  write_profile_csv(p, out);
}

std::vector<double> mid_path_stations(const TowRun& run, int count) {
  if (count < 1) throw InvalidArgument("mid_path_stations: count must be >= 1");
  std::vector<double> out;
  const double a = run.start.x + 0.4 * (run.end.x - run.start.x);
  const double b = run.start.x + 0.6 * (run.end.x - run.start.x);
  for (int i = 0; i < count; ++i) {
    out.push_back(count == 1 ? 0.5 * (a + b) : a + (b - a) * i / (count - 1));
  }
  return out;
}

std::string reference_name(double slip_angle_deg, double sinkage) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "b%g_h%g", slip_angle_deg, sinkage * 1000.0);
  return buf;
}

std::vector<SweepRow> sweep(const SweepConfig& config) {
  std::vector<SweepRow> rows;
  const auto& g = config.geometry;
  if (config.slip_angles_deg.empty() || config.sinkages.empty()) return rows;
  validate(g);
  const HeightMapd flat = new_heightmap(g, config.initial_height);
  const double y = 0.5 * g.height();

  for (double beta : config.slip_angles_deg) {
    for (double h0 : config.sinkages) {
      const auto t0 = std::chrono::steady_clock::now();
      TowRun run{h0, beta, {config.start_margin, y}, {g.width() - config.end_margin, y}};
      ToolConfig tool;
      tool.reference_level = config.initial_height;
      tool.step_relax_iters = config.step_relax_iters;
      const TowResult res = tow_wheel(flat, config.wheel, run, config.soil, tool);

      SweepRow row;
      row.slip_angle_deg = beta;
      row.sinkage = h0;
      row.excavated_volume = res.excavated_volume;
      row.berm_volume = res.berm_volume;
      row.conservation_error = res.excavated_volume > 0.0
                                   ? std::abs(res.excavated_volume - res.berm_volume) / res.excavated_volume
                                   : 0.0;
      row.final_iterations = res.stats.final_report.iterations;
      row.converged = res.skipped || res.stats.final_report.converged;
      row.max_excess_slope = local_excess_slope(res.map, config.soil, empty_mask(g));

      std::vector<Profile> profiles;
      for (double s : mid_path_stations(run, config.station_count)) profiles.push_back(cross_section(res.map, s));
      for (std::size_t i = 0; i < profiles.size(); ++i) {
        for (std::size_t j = i + 1; j < profiles.size(); ++j) {
          row.steadiness_rms_mm = std::max(row.steadiness_rms_mm, 1000.0 * profile_rms(profiles[i], profiles[j]));
        }
      }
      row.profile = profiles[profiles.size() / 2];
      const double floor = *std::min_element(row.profile.heights.begin(), row.profile.heights.end());
      row.depth_mm = 1000.0 * std::max(0.0, config.initial_height - floor);

      if (config.reference_dir) {
        const auto file = *config.reference_dir / ("ref_" + reference_name(beta, h0) + ".csv");
        if (std::filesystem::exists(file)) row.errors = profile_errors(row.profile, read_profile_csv(file));
      }
      row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "summary.csv");
  if (!out) throw FormatError("cannot write sweep summary in " + dir.string());
  out << "trench_type,avg_error_mm,median_error_mm,depth_error_mm,beta_deg,h0_mm,depth_mm,"
         "excavated_m3,berm_m3,conservation_error,steadiness_rms_mm,max_excess_slope,final_iterations,converged\n";
  const auto err = [](const std::optional<ProfileErrors>& e, double ProfileErrors::*field) {
    return e ? format_number((*e).*field) : std::string();
  };
  for (const auto& r : rows) {
    out << "beta=" << format_number(r.slip_angle_deg) << " h0=" << format_number(r.sinkage * 1000.0) << "mm,"
        << err(r.errors, &ProfileErrors::avg_error_mm) << ',' << err(r.errors, &ProfileErrors::median_error_mm)
        << ',' << err(r.errors, &ProfileErrors::depth_error_mm) << ',' << format_number(r.slip_angle_deg) << ','
        << format_number(r.sinkage * 1000.0) << ',' << format_number(r.depth_mm) << ','
        << format_number(r.excavated_volume) << ',' << format_number(r.berm_volume) << ','
        << format_number(r.conservation_error) << ',' << format_number(r.steadiness_rms_mm) << ','
        << format_number(r.max_excess_slope) << ',' << r.final_iterations << ',' << (r.converged ? 1 : 0) << '\n';
    write_profile_csv(r.profile, dir / ("profile_" + reference_name(r.slip_angle_deg, r.sinkage) + ".csv"));
  }

  // Group means: all runs, then per beta, then per h0.
  std::ofstream table(dir / "group_means.csv");
  if (!table) throw FormatError("cannot write sweep table in " + dir.string());
  table << "trench_type,avg_error_mm,median_error_mm,depth_error_mm,runs_with_reference\n";
  const auto group = [&](const std::string& name, auto&& pick) {
    double avg = 0.0, med = 0.0, dep = 0.0;
    int n = 0;
    for (const auto& r : rows) {
      if (!pick(r) || !r.errors) continue;
      avg += r.errors->avg_error_mm;
      med += r.errors->median_error_mm;
      dep += r.errors->depth_error_mm;
      ++n;
    }
    table << name << ',';
    if (n > 0) table << format_number(avg / n) << ',' << format_number(med / n) << ',' << format_number(dep / n);
    else table << ",,";
    table << ',' << n << '\n';
  };
  if (rows.empty()) return;
  group("All trenches", [](const SweepRow&) { return true; });
  std::vector<double> betas, sinks;
  for (const auto& r : rows) {
    if (std::find(betas.begin(), betas.end(), r.slip_angle_deg) == betas.end()) betas.push_back(r.slip_angle_deg);
    if (std::find(sinks.begin(), sinks.end(), r.sinkage) == sinks.end()) sinks.push_back(r.sinkage);
  }
  for (double b : betas) {
    group("beta=" + format_number(b), [b](const SweepRow& r) { return r.slip_angle_deg == b; });
  }
  for (double h : sinks) {
    group("h0=" + format_number(h * 1000.0) + "mm", [h](const SweepRow& r) { return r.sinkage == h; });
  }
}

}  // namespace sandshape::trenchlab
