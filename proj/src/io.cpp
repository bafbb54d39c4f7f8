#include "sandshape/io.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace sandshape {
namespace {

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

double parse_double(const std::string& token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  // from_chars rejects a leading '+'.
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw FormatError("HMAP: malformed number '" + token + "'");
  if (!std::isfinite(v)) throw FormatError("HMAP: non-finite value '" + token + "'");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

}  // namespace

void write_heightmap(const HeightMapd& h, std::ostream& out) {
  out << "HMAP 1\n" << h.rows() << ' ' << h.cols() << ' ' << format_double(h.geometry.dx) << '\n';
  for (std::ptrdiff_t r = 0; r < h.rows(); ++r) {
    for (std::ptrdiff_t c = 0; c < h.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(h(r, c));
    }
    out << '\n';
  }
}

void write_heightmap(const HeightMapd& h, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_heightmap(h, out);
}

std::string to_hmap_string(const HeightMapd& h) {
  std::ostringstream out;
  write_heightmap(h, out);
  return out.str();
}

HeightMapd read_heightmap(std::istream& in) {
  std::string magic;
  std::string version;
  if (!(in >> magic >> version) || magic != "HMAP" || version != "1") {
    throw FormatError("HMAP: missing 'HMAP 1' header");
  }
  std::string rows_tok, cols_tok, dx_tok;
  if (!(in >> rows_tok >> cols_tok >> dx_tok)) throw FormatError("HMAP: truncated geometry line");
  GridGeometry g;
  try {
    std::size_t used = 0;
    g.rows = std::stol(rows_tok, &used);
    if (used != rows_tok.size()) throw FormatError("");
    g.cols = std::stol(cols_tok, &used);
    if (used != cols_tok.size()) throw FormatError("");
  } catch (const std::exception&) {
    throw FormatError("HMAP: malformed geometry line");
  }
  g.dx = parse_double(dx_tok);
  try {
    validate(g);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("HMAP: ") + e.what());
  }

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(g.cell_count()));
  std::string token;
  while (in >> token) values.push_back(parse_double(token));
  if (static_cast<std::ptrdiff_t>(values.size()) != g.cell_count()) {
    throw FormatError("HMAP: dimension mismatch, header says " + std::to_string(g.rows) + "x" +
                      std::to_string(g.cols) + " but " + std::to_string(values.size()) +
                      " values follow");
  }
  HeightMapd h{g, Grid<double>(g.rows, g.cols)};
  std::copy(values.begin(), values.end(), h.heights.data());
  return h;
}

HeightMapd read_heightmap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_heightmap(in);
}

void write_csv(const HeightMapd& h, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (std::ptrdiff_t r = 0; r < h.rows(); ++r) {
    for (std::ptrdiff_t c = 0; c < h.cols(); ++c) {
      if (c) out << ',';
      out << format_double(h(r, c));
    }
    out << '\n';
  }
}

void write_pgm(const HeightMapd& h, const std::filesystem::path& path) {
  auto out = open_out(path);
  const double lo = h.heights.minCoeff();
  const double hi = h.heights.maxCoeff();
  const double span = hi - lo;
  out << "P2\n" << h.cols() << ' ' << h.rows() << "\n255\n";
  for (std::ptrdiff_t r = 0; r < h.rows(); ++r) {
    for (std::ptrdiff_t c = 0; c < h.cols(); ++c) {
      const int level = span > 0.0 ? static_cast<int>(std::lround((h(r, c) - lo) / span * 255.0)) : 0;
      if (c) out << ' ';
      out << level;
    }
    out << '\n';
  }
}

std::string content_hash(const HeightMapd& h) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (const unsigned char ch : to_hmap_string(h)) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace sandshape
