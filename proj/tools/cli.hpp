#pragma once

#include "sandshape/core.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace sandshape::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kBadInput = 2,
  kUnsolvable = 3,
  kNotConverged = 4,
  kInvariantFailed = 5,
};

struct RunConfig {
  GridGeometry geometry{32, 32, 0.01};
  SoilParams soil;
  double initial_height = 0.05;
  std::string initial_map;  // HMAP path; overrides geometry and initial_height
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
};

/// Fields left out of the JSON keep their defaults. `boundary` may sit at the
/// top level or inside `soil`.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Default output directory: $SANDSHAPE_OUT_DIR, else the working directory.
std::filesystem::path default_out_dir();

/// Entry point behind the sandshape executable.
int run(int argc, const char* const* argv);

}  // namespace sandshape::cli
