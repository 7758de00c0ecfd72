#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "psv/grid.hpp"
#include "psv/shock.hpp"

namespace psv {

// Piecewise-constant shock-interaction patterns. All waves of a pattern are
// straight rays through a single origin, so every region is an angular sector
// with a constant state (a centered expansion fan is the one smooth sector).
// Such a field is an exact steady weak solution of the Euler equations on the
// whole plane, which makes projecting it onto any rectangle trivial.

enum class WaveKind { shock, slipline, expansion_fan };

inline const char* wave_kind_name(WaveKind k) {
  switch (k) {
    case WaveKind::shock: return "shock";
    case WaveKind::slipline: return "slipline";
    case WaveKind::expansion_fan: return "expansion_fan";
  }
  return "?";
}

struct Wave {
  WaveKind kind = WaveKind::shock;
  double ray = 0.0;        ///< ray angle; fan: head ray
  double ray_tail = 0.0;   ///< fan only: tail ray
  int upstream = -1;       ///< region index before the wave (flow order)
  int downstream = -1;
  double residual = 0.0;   ///< matching residual recorded at build time
  std::string name;
};

/// Centered Prandtl-Meyer fan turning the flow from angle theta_pre to
/// theta_post (counterclockwise for sign = +1). Rays satisfy
/// ray = theta - sign * mach_angle(theta).
struct FanSector {
  PrimitiveState pre;
  double theta_pre = 0.0;
  double theta_post = 0.0;
  double sign = 1.0;
};

struct Region {
  double lo = 0.0, hi = 0.0; ///< sector [lo, hi) in unrolled angle coordinates
  PrimitiveState state;      ///< constant-state sectors
  std::optional<FanSector> fan;
  std::string name;
};

struct PatternGeometry {
  double ox = 0.25;
  double oy = 0.5;
};

struct FlowPattern {
  std::string label;
  GasModel gas;
  double ox = 0.0, oy = 0.0;
  /// Regions sorted CCW; regions[k] covers [regions[k].lo, regions[k].hi),
  /// with regions.back().hi == regions.front().lo + 2*pi.
  std::vector<Region> regions;
  std::vector<Wave> waves;

  PrimitiveState state_in_fan(const FanSector& fan, double phi) const {
    // Solve ray(theta) = phi by bisection; ray is monotone across the fan.
    double lo = fan.theta_pre, hi = fan.theta_post;
    const double nu_pre = prandtl_meyer(fan.pre.mach(gas), gas);
    auto ray = [&](double theta) {
      const double m =
          prandtl_meyer_inverse(nu_pre + fan.sign * (theta - fan.theta_pre), gas);
      return theta - fan.sign * std::asin(1.0 / m);
    };
    // The query angle may be unrolled by full turns relative to the fan rays.
    const double head = ray(lo);
    phi = head + std::remainder(phi - head, 2.0 * pi);
    const bool increasing = ray(hi) > head;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      const bool below = ray(mid) < phi;
      ((below == increasing) ? lo : hi) = mid;
    }
    const double theta = 0.5 * (lo + hi);
    return prandtl_meyer_expand(fan.pre, fan.sign * (theta - fan.theta_pre), fan.sign, gas);
  }

  PrimitiveState eval(double x, double y) const {
    const double base = regions.front().lo;
    double phi = std::atan2(y - oy, x - ox);
    phi = std::fmod(phi - base, 2.0 * pi);
    if (phi < 0.0) phi += 2.0 * pi;
    phi += base;
    for (const Region& r : regions) {
      if (phi >= r.lo && phi < r.hi) {
        if (r.fan) return state_in_fan(*r.fan, phi);
        return r.state;
      }
    }
    return regions.back().fan ? state_in_fan(*regions.back().fan, phi)
                              : regions.back().state;
  }
};

namespace detail {

inline double wrap_2pi(double a) {
  a = std::fmod(a, 2.0 * pi);
  if (a < 0.0) a += 2.0 * pi;
  return a;
}

/// Builds the sector list from CCW-ordered boundaries starting at bounds[0].
/// bounds[k] may be given unwrapped; each must exceed the previous one and the
/// total span must be exactly 2*pi (last boundary = bounds[0] + 2*pi).
inline void assign_sectors(FlowPattern& p, const std::vector<double>& bounds,
                           std::vector<Region>& regions, const std::string& context) {
  if (bounds.size() != regions.size() + 1)
    throw validation_error(context + ": sector bookkeeping mismatch");
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    if (!(bounds[k + 1] > bounds[k]))
      throw validation_error(context + ": degenerate or misordered wave sectors");
    regions[k].lo = bounds[k];
    regions[k].hi = bounds[k + 1];
  }
  if (std::abs(bounds.back() - bounds.front() - 2.0 * pi) > 1e-12)
    throw validation_error(context + ": sectors do not tile the full circle");
  p.regions = regions;
}

} // namespace detail

inline FlowPattern build_freestream_pattern(const PrimitiveState& fs, const GasModel& gas,
                                            PatternGeometry geom = {0.5, 0.5}) {
  FlowPattern p;
  p.label = "freestream";
  p.gas = gas;
  p.ox = geom.ox;
  p.oy = geom.oy;
  Region r;
  r.lo = 0.0;
  r.hi = 2.0 * pi;
  r.state = fs;
  r.name = "freestream";
  p.regions = {r};
  return p;
}

/// Single oblique shock attached at the origin, flow deflected counterclockwise
/// by chi. Upstream fills the CCW side of the shock ray.
inline FlowPattern build_single_wedge(const PrimitiveState& fs, double chi, const GasModel& gas,
                                      PatternGeometry geom = {0.0, 0.0}) {
  if (chi <= 0.0) return build_freestream_pattern(fs, gas, geom);
  const ObliqueShockSolution sol = oblique_shock(fs, chi, gas); // throws if detached
  FlowPattern p;
  p.label = "single_wedge";
  p.gas = gas;
  p.ox = geom.ox;
  p.oy = geom.oy;
  const double beta = sol.beta;
  std::vector<Region> regions(2);
  regions[0].state = fs;
  regions[0].name = "freestream";
  regions[1].state = sol.downstream;
  regions[1].name = "post-shock";
  detail::assign_sectors(p, {beta, beta + pi, beta + 2.0 * pi}, regions, "single_wedge");
  Wave w;
  w.kind = WaveKind::shock;
  w.ray = beta;
  w.upstream = 0;
  w.downstream = 1;
  w.name = "attached shock";
  p.waves = {w};
  return p;
}

/// Crossing shocks of opposite families: the upper wedge deflects the flow
/// down by chi_upper, the lower wedge up by chi_lower. The refracted shocks
/// downstream of the crossing are separated by a slip line whose direction is
/// found by a pressure-match root solve.
inline FlowPattern build_edney1(const PrimitiveState& fs, double chi_upper, double chi_lower,
                                const GasModel& gas, PatternGeometry geom = {0.25, 0.5}) {
  gas.validate();
  if (chi_upper < 0.0 || chi_lower < 0.0)
    throw validation_error("build_edney1: wedge angles must be nonnegative");
  if (chi_upper == 0.0 && chi_lower == 0.0) return build_freestream_pattern(fs, gas, geom);

  ObliqueShockSolution up, low;
  try {
    up = oblique_shock(fs, -chi_upper, gas);
  } catch (const validation_error& e) {
    throw validation_error(std::string("build_edney1: upper incident shock: ") + e.what());
  }
  try {
    low = oblique_shock(fs, chi_lower, gas);
  } catch (const validation_error& e) {
    throw validation_error(std::string("build_edney1: lower incident shock: ") + e.what());
  }
  const PrimitiveState r2 = up.downstream;  // flow angle -chi_upper
  const PrimitiveState r3 = low.downstream; // flow angle +chi_lower

  // Slip direction theta_s: flow 2 is deflected up by theta_s + chi_upper,
  // flow 3 down by chi_lower - theta_s, to a common pressure.
  double theta_s;
  ObliqueShockSolution t24, t35;
  if (chi_upper == 0.0) {
    theta_s = chi_lower;
    t24 = oblique_shock(r2, chi_lower, gas);
    t35 = oblique_shock(r3, 0.0, gas);
  } else if (chi_lower == 0.0) {
    theta_s = -chi_upper;
    t24 = oblique_shock(r2, 0.0, gas);
    t35 = oblique_shock(r3, -chi_upper, gas);
  } else {
    const double m2 = r2.mach(gas), m3 = r3.mach(gas);
    const double margin = 1e-9;
    const double lo_lim = std::max(-chi_upper, chi_lower - max_deflection(m3, gas)) + margin;
    const double hi_lim = std::min(chi_lower, -chi_upper + max_deflection(m2, gas)) - margin;
    auto mismatch = [&](double ths) {
      const double p4 = oblique_shock(r2, ths + chi_upper, gas).downstream.p;
      const double p5 = oblique_shock(r3, -(chi_lower - ths), gas).downstream.p;
      return p4 - p5;
    };
    if (!(hi_lim > lo_lim) || !(mismatch(lo_lim) < 0.0) || !(mismatch(hi_lim) > 0.0))
      throw validation_error(
          "build_edney1: slip-line pressure match has no root in the attached bracket "
          "(shock crossing)");
    double lo = lo_lim, hi = hi_lim;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mismatch(mid) < 0.0 ? lo : hi) = mid;
    }
    theta_s = 0.5 * (lo + hi);
    t24 = oblique_shock(r2, theta_s + chi_upper, gas);
    t35 = oblique_shock(r3, -(chi_lower - theta_s), gas);
  }
  const PrimitiveState r4 = t24.downstream;
  const PrimitiveState r5 = t35.downstream;
  const double slip_residual = std::abs(r4.p - r5.p);

  // Rays, CCW from the slip line.
  const double a_slip = theta_s;
  const double a_t24 = -chi_upper + t24.beta;      // refracted shock into region 2
  const double a_up = pi - up.beta;                // incident upper shock
  const double a_low = pi + low.beta;              // incident lower shock
  const double a_t35 = chi_lower - t35.beta;       // refracted shock into region 3

  FlowPattern p;
  p.label = "edney1";
  p.gas = gas;
  p.ox = geom.ox;
  p.oy = geom.oy;
  std::vector<Region> regions(5);
  regions[0] = {0, 0, r4, std::nullopt, "post-refraction upper path"};
  regions[1] = {0, 0, r2, std::nullopt, "post incident upper shock"};
  regions[2] = {0, 0, fs, std::nullopt, "freestream"};
  regions[3] = {0, 0, r3, std::nullopt, "post incident lower shock"};
  regions[4] = {0, 0, r5, std::nullopt, "post-refraction lower path"};
  detail::assign_sectors(
      p, {a_slip, a_t24, a_up, a_low, a_t35 + 2.0 * pi, a_slip + 2.0 * pi}, regions,
      "build_edney1");

  p.waves.push_back({WaveKind::shock, a_up, 0, 2, 1, 0.0, "incident upper shock"});
  p.waves.push_back({WaveKind::shock, a_low, 0, 2, 3, 0.0, "incident lower shock"});
  p.waves.push_back({WaveKind::shock, a_t24, 0, 1, 0, 0.0, "refracted shock, upper path"});
  p.waves.push_back(
      {WaveKind::shock, detail::wrap_2pi(a_t35), 0, 3, 4, 0.0, "refracted shock, lower path"});
  p.waves.push_back({WaveKind::slipline, detail::wrap_2pi(a_slip), 0, 0, 4, slip_residual,
                     "slip line"});
  return p;
}

/// Same-family shock coalescence: consecutive wedge angles chi1 < chi2
/// (both from the freestream direction). Above the triple point a single
/// merged shock processes the freestream; the twice-shocked stream matches it
/// through an expansion fan or a weak shock, selected by the pressure
/// mismatch sign at the slip line.
inline FlowPattern build_edney6(const PrimitiveState& fs, double chi1, double chi2,
                                const GasModel& gas, PatternGeometry geom = {0.25, 0.3}) {
  gas.validate();
  if (chi1 < 0.0 || chi2 < 0.0)
    throw validation_error("build_edney6: wedge angles must be nonnegative");
  if (chi2 == 0.0 || chi2 == chi1) {
    FlowPattern p = build_single_wedge(fs, chi1, gas, geom);
    p.label = "edney6";
    return p;
  }
  if (chi1 == 0.0) {
    FlowPattern p = build_single_wedge(fs, chi2, gas, geom);
    p.label = "edney6";
    return p;
  }
  if (chi2 < chi1)
    throw validation_error("build_edney6: second angle must not be below the first "
                           "(consecutive compressions)");

  ObliqueShockSolution s1, s2;
  try {
    s1 = oblique_shock(fs, chi1, gas);
  } catch (const validation_error& e) {
    throw validation_error(std::string("build_edney6: first incident shock: ") + e.what());
  }
  const PrimitiveState r2 = s1.downstream;
  try {
    s2 = oblique_shock(r2, chi2 - chi1, gas);
  } catch (const validation_error& e) {
    throw validation_error(std::string("build_edney6: second incident shock: ") + e.what());
  }
  const PrimitiveState r3 = s2.downstream;
  const double m3 = r3.mach(gas);

  // Matched state behind the slip line on the twice-shocked side.
  auto matched = [&](double ths) -> PrimitiveState {
    if (ths >= chi2) return prandtl_meyer_expand(r3, ths - chi2, +1.0, gas);
    return oblique_shock(r3, -(chi2 - ths), gas).downstream;
  };
  auto mismatch = [&](double ths) { return oblique_shock(fs, ths, gas).downstream.p - matched(ths).p; };

  const double margin = 1e-9;
  const double f_at_chi2 = mismatch(chi2);
  double theta_s;
  bool fan_branch;
  if (f_at_chi2 == 0.0) {
    theta_s = chi2;
    fan_branch = true;
  } else if (f_at_chi2 < 0.0) {
    // Merged shock is weaker than the two-shock compression: expansion fan.
    fan_branch = true;
    double lo = chi2, hi = max_deflection(fs.mach(gas), gas) - margin;
    if (!(mismatch(hi) > 0.0))
      throw validation_error("build_edney6: merged-shock pressure match has no root "
                             "(triple point, fan branch)");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mismatch(mid) < 0.0 ? lo : hi) = mid;
    }
    theta_s = 0.5 * (lo + hi);
  } else {
    fan_branch = false;
    double lo = std::max(margin, chi2 - max_deflection(m3, gas) + margin), hi = chi2;
    if (!(mismatch(lo) < 0.0))
      throw validation_error("build_edney6: merged-shock pressure match has no root "
                             "(triple point, shock branch)");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mismatch(mid) < 0.0 ? lo : hi) = mid;
    }
    theta_s = 0.5 * (lo + hi);
  }

  const ObliqueShockSolution merged = oblique_shock(fs, theta_s, gas);
  const PrimitiveState r4 = merged.downstream;
  const PrimitiveState r5 = matched(theta_s);
  const double slip_residual = std::abs(r4.p - r5.p);

  const double a_slip = theta_s;
  const double a_merged = merged.beta;
  const double a_s1 = pi + s1.beta;
  const double a_s2 = pi + chi1 + s2.beta;

  FlowPattern p;
  p.label = "edney6";
  p.gas = gas;
  p.ox = geom.ox;
  p.oy = geom.oy;

  std::vector<Region> regions;
  std::vector<double> bounds;
  regions.push_back({0, 0, r4, std::nullopt, "post merged shock"});
  regions.push_back({0, 0, fs, std::nullopt, "freestream"});
  regions.push_back({0, 0, r2, std::nullopt, "post first shock"});
  regions.push_back({0, 0, r3, std::nullopt, "post second shock"});
  if (fan_branch && theta_s > chi2) {
    const double mu3 = std::asin(1.0 / m3);
    const double mu5 = std::asin(1.0 / r5.mach(gas));
    const double fan_head = chi2 - mu3;
    const double fan_tail = theta_s - mu5;
    Region fanr;
    fanr.fan = FanSector{r3, chi2, theta_s, +1.0};
    fanr.state = r5;
    fanr.name = "matching fan";
    regions.push_back(fanr);
    regions.push_back({0, 0, r5, std::nullopt, "matched stream"});
    bounds = {a_slip,          a_merged,           a_s1,
              a_s2,            fan_head + 2.0 * pi, fan_tail + 2.0 * pi,
              a_slip + 2.0 * pi};
    detail::assign_sectors(p, bounds, regions, "build_edney6");
    p.waves.push_back({WaveKind::expansion_fan, detail::wrap_2pi(fan_head),
                       detail::wrap_2pi(fan_tail), 3, 5, slip_residual, "matching fan"});
  } else {
    const ObliqueShockSolution match_shock = oblique_shock(r3, -(chi2 - theta_s), gas);
    const double a_match = chi2 - match_shock.beta;
    regions.push_back({0, 0, r5, std::nullopt, "matched stream"});
    bounds = {a_slip, a_merged, a_s1, a_s2, a_match + 2.0 * pi, a_slip + 2.0 * pi};
    detail::assign_sectors(p, bounds, regions, "build_edney6");
    p.waves.push_back({WaveKind::shock, detail::wrap_2pi(a_match), 0, 3, 4, slip_residual,
                       "matching shock"});
  }
  p.waves.push_back({WaveKind::shock, a_s1, 0, 1, 2, 0.0, "first incident shock"});
  p.waves.push_back({WaveKind::shock, a_s2, 0, 2, 3, 0.0, "second incident shock"});
  p.waves.push_back({WaveKind::shock, a_merged, 0, 1, 0, 0.0, "merged shock"});
  p.waves.push_back({WaveKind::slipline, detail::wrap_2pi(a_slip), 0, 0,
                     static_cast<int>(p.regions.size()) - 1, slip_residual, "slip line"});
  return p;
}

inline PrimitiveState eval_pattern(const FlowPattern& p, double x, double y) {
  return p.eval(x, y);
}

/// Projection of the pattern onto a grid: pointwise evaluation at cell
/// centers, stored as conserved variables.
inline GridFunction project_pattern(const FlowPattern& p, const Grid& grid,
                                    const GasModel& gas) {
  GridFunction f(grid, 4);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Conserved c = to_conserved(p.eval(grid.xc(i), grid.yc(j)), gas);
      for (int k = 0; k < 4; ++k) f(i, j, k) = c[k];
    }
  }
  return f;
}

/// Worst Rankine-Hugoniot / slip / fan-continuity residual over the pattern's
/// waves, all in nondimensional units. A correctly built pattern stays below
/// 1e-10.
inline double check_pattern(const FlowPattern& p) {
  double worst = 0.0;
  const double g = p.gas.gamma;
  for (const Wave& w : p.waves) {
    const Region& ru = p.regions[w.upstream];
    const Region& rd = p.regions[w.downstream];
    const PrimitiveState a = ru.fan ? p.state_in_fan(*ru.fan, w.ray) : ru.state;
    const PrimitiveState b = rd.fan ? p.state_in_fan(*rd.fan, w.ray) : rd.state;
    switch (w.kind) {
      case WaveKind::shock: {
        const double dx = std::cos(w.ray), dy = std::sin(w.ray);
        // Normal pointing from the upstream side to the downstream side.
        double nxv = -dy, nyv = dx;
        const double mid_u = 0.5 * (ru.lo + ru.hi);
        if (std::sin(mid_u - w.ray) > 0.0) { nxv = -nxv; nyv = -nyv; }
        const double vnu = a.u * nxv + a.v * nyv;
        const double vnd = b.u * nxv + b.v * nyv;
        const double vtu = a.u * dx + a.v * dy;
        const double vtd = b.u * dx + b.v * dy;
        const double mass = a.rho * vnu - b.rho * vnd;
        const double mom = (a.p + a.rho * vnu * vnu) - (b.p + b.rho * vnd * vnd);
        const double hu = g / (g - 1.0) * a.p / a.rho + 0.5 * vnu * vnu;
        const double hd = g / (g - 1.0) * b.p / b.rho + 0.5 * vnd * vnd;
        worst = std::max({worst, std::abs(mass), std::abs(mom), std::abs(hu - hd),
                          std::abs(vtu - vtd)});
        // Entropy must not decrease across an admissible shock.
        const double su = a.p / std::pow(a.rho, g);
        const double sd = b.p / std::pow(b.rho, g);
        worst = std::max(worst, std::max(0.0, su - sd));
        break;
      }
      case WaveKind::slipline: {
        worst = std::max(worst, std::abs(a.p - b.p));
        const double da = std::remainder(a.flow_angle() - b.flow_angle(), 2.0 * pi);
        worst = std::max(worst, std::abs(da));
        break;
      }
      case WaveKind::expansion_fan: {
        // Continuity of the fan state with both neighbouring constant states.
        const Region* fanreg = nullptr;
        for (const Region& r : p.regions)
          if (r.fan) fanreg = &r;
        if (!fanreg) break;
        const PrimitiveState head = p.state_in_fan(*fanreg->fan, fanreg->lo);
        const PrimitiveState tail = p.state_in_fan(*fanreg->fan, fanreg->hi);
        auto diff = [](const PrimitiveState& s, const PrimitiveState& t) {
          return std::max({std::abs(s.rho - t.rho), std::abs(s.u - t.u),
                           std::abs(s.v - t.v), std::abs(s.p - t.p)});
        };
        worst = std::max(worst, diff(head, a));
        worst = std::max(worst, diff(tail, b));
        break;
      }
    }
  }
  return worst;
}

/// Plain-text report of regions and waves for documentation and regression
/// snapshots.
inline std::string pattern_summary(const FlowPattern& p) {
  std::ostringstream os;
  os.precision(10);
  os << "pattern " << p.label << "  origin (" << p.ox << ", " << p.oy << ")\n";
  os << "regions:\n";
  for (std::size_t k = 0; k < p.regions.size(); ++k) {
    const Region& r = p.regions[k];
    os << "  [" << k << "] " << r.name << "  sector " << rad2deg(detail::wrap_2pi(r.lo))
       << " .. " << rad2deg(detail::wrap_2pi(r.hi)) << " deg";
    if (r.fan) {
      os << "  (fan, turn " << rad2deg(r.fan->theta_post - r.fan->theta_pre) << " deg)\n";
    } else {
      os << "  rho=" << r.state.rho << " u=" << r.state.u << " v=" << r.state.v
         << " p=" << r.state.p << " M=" << r.state.mach(p.gas) << "\n";
    }
  }
  os << "waves:\n";
  for (const Wave& w : p.waves) {
    os << "  " << wave_kind_name(w.kind) << " '" << w.name << "' ray "
       << rad2deg(detail::wrap_2pi(w.ray));
    if (w.kind == WaveKind::expansion_fan) os << " .. " << rad2deg(detail::wrap_2pi(w.ray_tail));
    os << " deg  regions " << w.upstream << " -> " << w.downstream
       << "  residual " << w.residual << "\n";
  }
  os << "max jump-condition residual: " << check_pattern(p) << "\n";
  return os.str();
}

} // namespace psv
