#pragma once

#include <array>
#include <cmath>

#include "psv/errors.hpp"

namespace psv {

/// Perfect gas with ratio of specific heats gamma and gas constant R,
/// both nondimensional. State equation p = rho * R * T.
struct GasModel {
  double gamma = 1.4;
  double gas_constant = 1.0;

  void validate() const {
    if (!(gamma > 1.0)) throw validation_error("GasModel: gamma must exceed 1");
  }
};

/// Primitive flow state (rho, u, v, p), nondimensional.
struct PrimitiveState {
  double rho = 1.0;
  double u = 0.0;
  double v = 0.0;
  double p = 1.0;

  double speed() const { return std::sqrt(u * u + v * v); }
  double sound_speed(const GasModel& gas) const { return std::sqrt(gas.gamma * p / rho); }
  double mach(const GasModel& gas) const { return speed() / sound_speed(gas); }
  double flow_angle() const { return std::atan2(v, u); }
  bool physical() const {
    return rho > 0.0 && p > 0.0 && std::isfinite(rho) && std::isfinite(u) &&
           std::isfinite(v) && std::isfinite(p);
  }
};

using Conserved = std::array<double, 4>; // rho, rho*u, rho*v, rho*E

inline Conserved to_conserved(const PrimitiveState& s, const GasModel& gas) {
  const double e = s.p / ((gas.gamma - 1.0) * s.rho);
  const double E = e + 0.5 * (s.u * s.u + s.v * s.v);
  return {s.rho, s.rho * s.u, s.rho * s.v, s.rho * E};
}

inline PrimitiveState to_primitive(const Conserved& c, const GasModel& gas) {
  PrimitiveState s;
  s.rho = c[0];
  s.u = c[1] / c[0];
  s.v = c[2] / c[0];
  s.p = (gas.gamma - 1.0) * (c[3] - 0.5 * (c[1] * c[1] + c[2] * c[2]) / c[0]);
  return s;
}

/// Freestream at Mach M along +x in the nondimensionalization rho = 1,
/// p = 1/gamma (unit sound speed, velocity numerically equal to M).
inline PrimitiveState freestream(double mach, const GasModel& gas) {
  return PrimitiveState{1.0, mach, 0.0, 1.0 / gas.gamma};
}

} // namespace psv
