#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "psv/estimators.hpp"

namespace psv {

// Randomized checks of the provable estimator bounds on synthetic vectors.
// Vectors live on a small grid (one component) so they exercise the same
// metric and estimator code paths as real fields.

namespace detail {

/// Uniform in [0, 1) built directly from the generator output so results do
/// not depend on the standard library's distribution implementation.
inline double uniform01(std::mt19937_64& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline double gaussian(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 == 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
}

inline GridFunction gaussian_field(const Grid& g, std::mt19937_64& rng, double scale) {
  GridFunction f(g, 1);
  for (double& v : f.values) v = scale * gaussian(rng);
  return f;
}

} // namespace detail

struct SyntheticReport {
  std::uint64_t seed = 0;
  long trials = 0;
  long angle_bound_checked = 0;
  long angle_bound_violations = 0;
  long ordering_checked = 0;
  long ordering_violations = 0;
  long width_checked = 0;
  long width_violations = 0;

  bool all_pass() const {
    return angle_bound_violations == 0 && ordering_violations == 0 && width_violations == 0;
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "synthetic suite  seed " << seed << "  trials " << trials << "\n";
    os << "  angle bound (exact angle >= 5 deg): " << angle_bound_checked - angle_bound_violations
       << "/" << angle_bound_checked << " hold\n";
    os << "  norm-ordering majorant (2x premise): " << ordering_checked - ordering_violations
       << "/" << ordering_checked << " hold\n";
    os << "  orthogonal-construction width enclosure: " << width_checked - width_violations
       << "/" << width_checked << " hold\n";
    os << (all_pass() ? "  all bounds hold\n" : "  BOUND VIOLATION DETECTED\n");
    return os.str();
  }
};

/// Error-pair bound check: with the exact angle between two synthetic errors,
/// the distance-over-sin(angle/2) bound must majorize both error norms.
inline void synthetic_angle_bound_trials(SyntheticReport& rep, std::mt19937_64& rng,
                                         long trials) {
  const Grid g = make_unit_grid(10, 10); // vectors in R^100
  const NormOptions norm{ComponentMask::first_n(1), true};
  for (long t = 0; t < trials; ++t) {
    const GridFunction truth = detail::gaussian_field(g, rng, 1.0);
    const GridFunction e1 =
        detail::gaussian_field(g, rng, detail::uniform(rng, 0.1, 10.0));
    const GridFunction e2 =
        detail::gaussian_field(g, rng, detail::uniform(rng, 0.1, 10.0));
    const double alpha = angle_between(e1, e2, norm);
    if (alpha < deg2rad(5.0) || alpha >= pi) continue;
    GridFunction u1 = truth, u2 = truth;
    add_scaled(u1, 1.0, e1);
    add_scaled(u2, 1.0, e2);
    const double bound = angle_estimate(u1, u2, alpha, norm);
    ++rep.angle_bound_checked;
    if (!(l2_norm(e1, norm) < bound) || !(l2_norm(e2, norm) < bound))
      ++rep.angle_bound_violations;
  }
}

/// Norm-ordering majorant: when one error norm is at least twice the other,
/// the distance between the solutions bounds the smaller error.
inline void synthetic_ordering_trials(SyntheticReport& rep, std::mt19937_64& rng, long trials) {
  const Grid g = make_unit_grid(10, 10);
  const NormOptions norm{ComponentMask::first_n(1), true};
  for (long t = 0; t < trials; ++t) {
    const GridFunction e2 = detail::gaussian_field(g, rng, 1.0);
    GridFunction e1 = detail::gaussian_field(g, rng, 1.0);
    const double n2 = l2_norm(e2, norm);
    const double n1 = l2_norm(e1, norm);
    if (n1 == 0.0 || n2 == 0.0) continue;
    const double factor = detail::uniform(rng, 2.0, 5.0);
    for (double& v : e1.values) v *= factor * n2 / n1;
    const GridFunction d12 = subtract(e1, e2); // truth cancels in u1 - u2
    ++rep.ordering_checked;
    if (!(n2 <= l2_norm(d12, norm) + 1e-12)) ++rep.ordering_violations;
  }
}

/// Width enclosure on constructed ensembles with mutually orthogonal errors:
/// the maximum pairwise distance majorizes every error norm.
inline void synthetic_width_trials(SyntheticReport& rep, std::mt19937_64& rng, long trials) {
  const Grid g = make_unit_grid(10, 10);
  const NormOptions norm{ComponentMask::first_n(1), true};
  for (long t = 0; t < trials; ++t) {
    const int n = 2 + static_cast<int>(detail::uniform(rng, 0.0, 4.999));
    // Gram-Schmidt a random batch into mutually orthogonal errors.
    std::vector<GridFunction> errs;
    for (int k = 0; k < n; ++k) {
      GridFunction e = detail::gaussian_field(g, rng, 1.0);
      for (const GridFunction& prev : errs) {
        const double coef = dot(e, prev, norm) / dot(prev, prev, norm);
        add_scaled(e, -coef, prev);
      }
      const double nk = l2_norm(e, norm);
      if (nk < 1e-12) continue;
      const double target = detail::uniform(rng, 0.1, 5.0);
      for (double& v : e.values) v *= target / nk;
      errs.push_back(std::move(e));
    }
    if (errs.size() < 2) continue;

    const GridFunction truth = detail::gaussian_field(g, rng, 1.0);
    SolutionEnsemble ens;
    ens.grid = g;
    ens.ncomp = 1;
    double max_err = 0.0;
    for (std::size_t k = 0; k < errs.size(); ++k) {
      GridFunction u = truth;
      add_scaled(u, 1.0, errs[k]);
      max_err = std::max(max_err, l2_norm(errs[k], norm));
      ens.insert("m" + std::to_string(k), std::move(u));
    }
    const EnsembleWidth w = ensemble_width(ens, norm);
    ++rep.width_checked;
    if (!(w.d_max + 1e-12 >= max_err)) ++rep.width_violations;
  }
}

inline SyntheticReport run_synthetic_suite(std::uint64_t seed, long trials) {
  if (trials < 1) throw validation_error("synthetic suite: trials must be >= 1");
  SyntheticReport rep;
  rep.seed = seed;
  rep.trials = trials;
  std::mt19937_64 rng(seed);
  synthetic_angle_bound_trials(rep, rng, trials);
  synthetic_ordering_trials(rep, rng, trials);
  synthetic_width_trials(rep, rng, std::max(1L, trials / 10));
  return rep;
}

} // namespace psv
