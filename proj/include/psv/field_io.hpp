#pragma once

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "psv/grid.hpp"

namespace psv {

// PSFIELD v1: one text header line
//   PSFIELD v1 nx ny ncomp x0 x1 y0 y1
// followed by nx*ny*ncomp little-endian IEEE-754 binary64 values, row-major
// (j outer, i inner, component innermost). Header floats use %.17g so the
// format round-trips bit-exactly.

namespace detail {

inline std::uint64_t to_le64(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  return u;
}

inline double from_le64(std::uint64_t u) {
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  double v;
  std::memcpy(&v, &u, sizeof v);
  return v;
}

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace detail

inline void write_psfield(const std::filesystem::path& path, const GridFunction& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw validation_error("write_psfield: cannot open " + path.string());
  os << "PSFIELD v1 " << f.grid.nx << ' ' << f.grid.ny << ' ' << f.ncomp << ' '
     << detail::fmt_g17(f.grid.x0) << ' ' << detail::fmt_g17(f.grid.x1) << ' '
     << detail::fmt_g17(f.grid.y0) << ' ' << detail::fmt_g17(f.grid.y1) << '\n';
  std::vector<std::uint64_t> raw(f.values.size());
  for (std::size_t k = 0; k < f.values.size(); ++k) raw[k] = detail::to_le64(f.values[k]);
  os.write(reinterpret_cast<const char*>(raw.data()),
           static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)));
  if (!os) throw validation_error("write_psfield: write failed for " + path.string());
}

inline GridFunction read_psfield(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw validation_error("read_psfield: cannot open " + path.string());
  std::string header;
  std::getline(is, header);
  std::istringstream hs(header);
  std::string magic, version;
  int nx = 0, ny = 0, ncomp = 0;
  double x0, x1, y0, y1;
  hs >> magic >> version >> nx >> ny >> ncomp >> x0 >> x1 >> y0 >> y1;
  if (!hs || magic != "PSFIELD" || version != "v1")
    throw validation_error("read_psfield: bad header in " + path.string());
  GridFunction f(make_grid(nx, ny, x0, x1, y0, y1), ncomp);
  std::vector<std::uint64_t> raw(f.values.size());
  is.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)));
  if (is.gcount() != static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)))
    throw validation_error("read_psfield: truncated payload in " + path.string());
  for (std::size_t k = 0; k < raw.size(); ++k) f.values[k] = detail::from_le64(raw[k]);
  return f;
}

} // namespace psv
