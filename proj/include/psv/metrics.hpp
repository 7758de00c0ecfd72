#pragma once

#include <algorithm>
#include <cmath>

#include "psv/grid.hpp"

namespace psv {

/// Options for the discrete L2 geometry. The default weights every cell by its
/// measure hx*hy so that norms are comparable across grid resolutions; the
/// unweighted plain vector norm is kept behind the flag for sensitivity checks.
struct NormOptions {
  ComponentMask mask = ComponentMask::density();
  bool cell_measure_weighted = true;
};

inline double dot(const GridFunction& f, const GridFunction& g, const NormOptions& opt = {}) {
  require_same_layout(f, g, "dot");
  require_mask(f, opt.mask, "dot");
  const double w = opt.cell_measure_weighted ? f.grid.cell_measure() : 1.0;
  double acc = 0.0;
  const int nc = f.ncomp;
  const std::size_t ncells = static_cast<std::size_t>(f.grid.cell_count());
  for (int c = 0; c < nc; ++c) {
    if (!opt.mask.contains(c)) continue;
    double s = 0.0;
    for (std::size_t k = 0; k < ncells; ++k) s += f.values[k * nc + c] * g.values[k * nc + c];
    acc += s;
  }
  return acc * w;
}

inline double l2_norm(const GridFunction& f, const NormOptions& opt = {}) {
  return std::sqrt(std::max(0.0, dot(f, f, opt)));
}

inline double distance(const GridFunction& f, const GridFunction& g,
                       const NormOptions& opt = {}) {
  require_same_layout(f, g, "distance");
  require_mask(f, opt.mask, "distance");
  const double w = opt.cell_measure_weighted ? f.grid.cell_measure() : 1.0;
  double acc = 0.0;
  const int nc = f.ncomp;
  const std::size_t ncells = static_cast<std::size_t>(f.grid.cell_count());
  for (int c = 0; c < nc; ++c) {
    if (!opt.mask.contains(c)) continue;
    double s = 0.0;
    for (std::size_t k = 0; k < ncells; ++k) {
      const double d = f.values[k * nc + c] - g.values[k * nc + c];
      s += d * d;
    }
    acc += s;
  }
  return std::sqrt(acc * w);
}

/// Angle in [0, pi]. The cosine is clamped to [-1, 1] to absorb roundoff;
/// a zero-norm argument is rejected rather than returning NaN.
inline double angle_between(const GridFunction& f, const GridFunction& g,
                            const NormOptions& opt = {}) {
  const double nf = l2_norm(f, opt);
  const double ng = l2_norm(g, opt);
  if (nf == 0.0 || ng == 0.0)
    throw validation_error("angle_between: undefined for zero-norm field");
  const double c = std::clamp(dot(f, g, opt) / (nf * ng), -1.0, 1.0);
  return std::acos(c);
}

} // namespace psv
