#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "psv/gas.hpp"

namespace psv {

inline constexpr double pi = std::numbers::pi;

inline double deg2rad(double d) { return d * pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / pi; }

enum class ShockBranch { weak, strong };

/// Static pressure ratio across a normal shock at upstream normal Mach mn.
inline double normal_shock_pressure_ratio(double mn, const GasModel& gas) {
  const double g = gas.gamma;
  return 1.0 + 2.0 * g / (g + 1.0) * (mn * mn - 1.0);
}

inline double normal_shock_density_ratio(double mn, const GasModel& gas) {
  const double g = gas.gamma;
  return (g + 1.0) * mn * mn / ((g - 1.0) * mn * mn + 2.0);
}

inline double normal_shock_downstream_mach(double mn, const GasModel& gas) {
  const double g = gas.gamma;
  return std::sqrt((1.0 + 0.5 * (g - 1.0) * mn * mn) / (g * mn * mn - 0.5 * (g - 1.0)));
}

/// Flow deflection produced by a shock of angle beta at upstream Mach m
/// (the theta-beta-M relation).
inline double deflection_of_shock_angle(double m, double beta, const GasModel& gas) {
  const double g = gas.gamma;
  const double s = std::sin(beta);
  const double num = m * m * s * s - 1.0;
  const double den = m * m * (g + std::cos(2.0 * beta)) + 2.0;
  return std::atan(2.0 / std::tan(beta) * num / den);
}

namespace detail {

/// Shock angle of the deflection maximum, by ternary search on theta(beta).
inline double shock_angle_at_max_deflection(double m, const GasModel& gas) {
  double lo = std::asin(1.0 / m);
  double hi = 0.5 * pi;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (deflection_of_shock_angle(m, m1, gas) < deflection_of_shock_angle(m, m2, gas))
      lo = m1;
    else
      hi = m2;
  }
  return 0.5 * (lo + hi);
}

} // namespace detail

/// Largest attached-shock deflection at upstream Mach m.
inline double max_deflection(double m, const GasModel& gas) {
  if (!(m > 1.0)) throw validation_error("max_deflection: upstream Mach must exceed 1");
  return deflection_of_shock_angle(m, detail::shock_angle_at_max_deflection(m, gas), gas);
}

struct ObliqueShockSolution {
  double beta = 0.0;            ///< shock angle from the upstream flow direction
  PrimitiveState downstream;    ///< velocity rotated by +deflection from upstream direction
  ShockBranch branch = ShockBranch::weak;
};

/// Oblique shock for a given deflection. The upstream state carries an
/// arbitrary planar velocity; positive deflection rotates the flow
/// counterclockwise, negative clockwise (mirror symmetry). The shock angle is
/// found by bisection on the theta-beta-M relation, then the downstream state
/// follows from the normal-shock relations applied to the normal velocity
/// component. Zero deflection returns the Mach-wave limit exactly.
inline ObliqueShockSolution oblique_shock(const PrimitiveState& upstream, double deflection,
                                          const GasModel& gas,
                                          ShockBranch branch = ShockBranch::weak) {
  gas.validate();
  if (!upstream.physical())
    throw validation_error("oblique_shock: nonphysical upstream state");
  const double m1 = upstream.mach(gas);
  if (!(m1 > 1.0)) throw validation_error("oblique_shock: subsonic upstream");

  const double sign = deflection < 0.0 ? -1.0 : 1.0;
  const double theta = std::abs(deflection);

  if (theta == 0.0 && branch == ShockBranch::weak) {
    return ObliqueShockSolution{std::asin(1.0 / m1), upstream, branch};
  }

  double beta;
  if (theta == 0.0) {
    beta = 0.5 * pi; // strong-branch limit: normal shock
  } else {
    const double beta_peak = detail::shock_angle_at_max_deflection(m1, gas);
    const double theta_max = deflection_of_shock_angle(m1, beta_peak, gas);
    if (theta >= theta_max)
      throw validation_error("oblique_shock: detached shock, deflection " +
                             std::to_string(rad2deg(theta)) + " deg exceeds maximum " +
                             std::to_string(rad2deg(theta_max)) + " deg at Mach " +
                             std::to_string(m1));

    double lo, hi;
    if (branch == ShockBranch::weak) {
      lo = std::asin(1.0 / m1);
      hi = beta_peak;
    } else {
      lo = beta_peak;
      hi = 0.5 * pi;
    }
    // theta(beta) is monotone on each branch: increasing (weak), decreasing (strong).
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const bool below = deflection_of_shock_angle(m1, mid, gas) < theta;
      const bool move_lo = (branch == ShockBranch::weak) ? below : !below;
      (move_lo ? lo : hi) = mid;
    }
    beta = 0.5 * (lo + hi);
    // Newton polish on theta(beta) - theta.
    for (int it = 0; it < 4; ++it) {
      const double h = 1e-7;
      const double f = deflection_of_shock_angle(m1, beta, gas) - theta;
      const double df = (deflection_of_shock_angle(m1, beta + h, gas) -
                         deflection_of_shock_angle(m1, beta - h, gas)) / (2.0 * h);
      if (df == 0.0) break;
      const double next = beta - f / df;
      if (next > lo - 1e-12 && next < hi + 1e-12) beta = next;
    }
  }

  const double mn1 = m1 * std::sin(beta);
  const double pr = normal_shock_pressure_ratio(mn1, gas);
  const double rr = normal_shock_density_ratio(mn1, gas);

  // Rotate to the frame aligned with the upstream flow, jump, rotate back.
  const double phi = upstream.flow_angle();
  const double vmag = upstream.speed();
  const double vt = vmag * std::cos(beta);          // tangential, preserved
  const double vn2 = vmag * std::sin(beta) / rr;    // normal, compressed
  const double speed2 = std::sqrt(vt * vt + vn2 * vn2);
  const double dir2 = phi + sign * theta;

  PrimitiveState down;
  down.rho = upstream.rho * rr;
  down.p = upstream.p * pr;
  down.u = speed2 * std::cos(dir2);
  down.v = speed2 * std::sin(dir2);
  return ObliqueShockSolution{beta, down, branch};
}

/// Prandtl-Meyer function nu(M) for M >= 1.
inline double prandtl_meyer(double mach, const GasModel& gas) {
  gas.validate();
  if (!(mach >= 1.0)) throw validation_error("prandtl_meyer: Mach must be >= 1");
  const double g = gas.gamma;
  const double a = std::sqrt((g + 1.0) / (g - 1.0));
  const double m2 = mach * mach - 1.0;
  return a * std::atan(std::sqrt(m2 / (a * a))) - std::atan(std::sqrt(m2));
}

/// Inverse of the Prandtl-Meyer function, residual below 1e-12.
inline double prandtl_meyer_inverse(double nu, const GasModel& gas) {
  gas.validate();
  const double g = gas.gamma;
  const double nu_max = 0.5 * pi * (std::sqrt((g + 1.0) / (g - 1.0)) - 1.0);
  if (nu < 0.0 || nu >= nu_max)
    throw validation_error("prandtl_meyer_inverse: angle outside [0, nu_max)");
  if (nu == 0.0) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (prandtl_meyer(hi, gas) < nu) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (prandtl_meyer(mid, gas) < nu ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Isentropic expansion (turn > 0) of a supersonic state by the given turn
/// angle; returns the downstream state in the upstream flow frame rotated by
/// +sign*turn. Used for centered fans.
inline PrimitiveState prandtl_meyer_expand(const PrimitiveState& s, double turn, double sign,
                                           const GasModel& gas) {
  const double g = gas.gamma;
  const double m1 = s.mach(gas);
  const double m2 = prandtl_meyer_inverse(prandtl_meyer(m1, gas) + turn, gas);
  const double t1 = 1.0 + 0.5 * (g - 1.0) * m1 * m1;
  const double t2 = 1.0 + 0.5 * (g - 1.0) * m2 * m2;
  PrimitiveState out;
  out.p = s.p * std::pow(t1 / t2, g / (g - 1.0));
  out.rho = s.rho * std::pow(t1 / t2, 1.0 / (g - 1.0));
  const double c2 = std::sqrt(g * out.p / out.rho);
  const double dir = s.flow_angle() + sign * turn;
  out.u = m2 * c2 * std::cos(dir);
  out.v = m2 * c2 * std::sin(dir);
  return out;
}

} // namespace psv
