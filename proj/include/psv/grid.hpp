#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "psv/errors.hpp"

namespace psv {

/// Uniform cell-centered 2D grid on a rectangle.
struct Grid {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;

  double hx() const { return (x1 - x0) / nx; }
  double hy() const { return (y1 - y0) / ny; }
  double xc(int i) const { return x0 + (i + 0.5) * hx(); }
  double yc(int j) const { return y0 + (j + 0.5) * hy(); }
  long cell_count() const { return static_cast<long>(nx) * ny; }
  double cell_measure() const { return hx() * hy(); }

  bool operator==(const Grid&) const = default;
};

inline Grid make_grid(int nx, int ny, double x0, double x1, double y0, double y1) {
  if (nx < 1 || ny < 1)
    throw validation_error("make_grid: cell counts must be >= 1");
  if (!(x1 > x0) || !(y1 > y0))
    throw validation_error("make_grid: degenerate extent");
  return Grid{nx, ny, x0, x1, y0, y1};
}

inline Grid make_unit_grid(int nx, int ny) { return make_grid(nx, ny, 0.0, 1.0, 0.0, 1.0); }

/// Subset of the components of a grid function, as a bitmask.
struct ComponentMask {
  std::uint32_t bits = 0;

  static ComponentMask single(int c) { return ComponentMask{1u << c}; }
  static ComponentMask first_n(int n) {
    return ComponentMask{n >= 32 ? ~0u : ((1u << n) - 1u)};
  }
  /// Density is component 0 of a conserved state vector.
  static ComponentMask density() { return single(0); }

  bool contains(int c) const { return (bits >> c) & 1u; }
  bool empty() const { return bits == 0; }
  int count() const {
    int n = 0;
    for (std::uint32_t b = bits; b; b >>= 1) n += static_cast<int>(b & 1u);
    return n;
  }
};

/// Multi-component field sampled at cell centers, row-major by (j, i),
/// component index fastest. Treated as an immutable value once filled.
struct GridFunction {
  Grid grid;
  int ncomp = 1;
  std::vector<double> values;

  GridFunction() = default;
  GridFunction(const Grid& g, int ncomp_, double fill = 0.0)
      : grid(g), ncomp(ncomp_),
        values(static_cast<std::size_t>(g.cell_count()) * ncomp_, fill) {
    if (ncomp_ < 1) throw validation_error("GridFunction: ncomp must be >= 1");
  }

  std::size_t index(int i, int j, int c) const {
    return (static_cast<std::size_t>(j) * grid.nx + i) * ncomp + c;
  }
  double operator()(int i, int j, int c) const { return values[index(i, j, c)]; }
  double& operator()(int i, int j, int c) { return values[index(i, j, c)]; }

  bool same_layout(const GridFunction& other) const {
    return grid == other.grid && ncomp == other.ncomp;
  }

  bool is_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline void require_same_layout(const GridFunction& a, const GridFunction& b,
                                const char* where) {
  if (!a.same_layout(b))
    throw validation_error(std::string(where) + ": grid/ncomp mismatch");
}

inline void require_mask(const GridFunction& f, ComponentMask mask, const char* where) {
  if (mask.empty()) throw validation_error(std::string(where) + ": empty component mask");
  if (mask.bits >> f.ncomp)
    throw validation_error(std::string(where) + ": mask selects nonexistent component");
}

/// a - b, elementwise.
inline GridFunction subtract(const GridFunction& a, const GridFunction& b) {
  require_same_layout(a, b, "subtract");
  GridFunction out(a.grid, a.ncomp);
  for (std::size_t k = 0; k < a.values.size(); ++k) out.values[k] = a.values[k] - b.values[k];
  return out;
}

/// dst += w * src, elementwise.
inline void add_scaled(GridFunction& dst, double w, const GridFunction& src) {
  require_same_layout(dst, src, "add_scaled");
  for (std::size_t k = 0; k < dst.values.size(); ++k) dst.values[k] += w * src.values[k];
}

inline GridFunction scaled(const GridFunction& a, double w) {
  GridFunction out(a.grid, a.ncomp);
  for (std::size_t k = 0; k < a.values.size(); ++k) out.values[k] = w * a.values[k];
  return out;
}

} // namespace psv
