#pragma once

#include "sandshape/heightmap.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace sandshape {

/// Malformed input file: bad header, wrong value count, non-finite value.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// HMAP v1:
//   HMAP 1
//   <rows> <cols> <dx>
//   <rows lines of cols space-separated heights, %.17g>
void write_heightmap(const HeightMapd& h, std::ostream& out);
void write_heightmap(const HeightMapd& h, const std::filesystem::path& path);
HeightMapd read_heightmap(std::istream& in);
HeightMapd read_heightmap(const std::filesystem::path& path);

std::string to_hmap_string(const HeightMapd& h);

/// Body only, comma-separated, no header.
void write_csv(const HeightMapd& h, const std::filesystem::path& path);

/// Plain PGM (P2), heights scaled linearly to 0..255 over [min, max].
void write_pgm(const HeightMapd& h, const std::filesystem::path& path);

/// FNV-1a over the HMAP text; used to name sidecar map files.
std::string content_hash(const HeightMapd& h);

}  // namespace sandshape
