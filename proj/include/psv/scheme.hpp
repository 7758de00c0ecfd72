#pragma once

#include <array>
#include <string>

#include "psv/errors.hpp"

namespace psv {

/// The solver roster. Labels follow the usual shorthand: S1 is the
/// Courant-Isaacson-Rees first-order flux splitting, S2H is MUSCL
/// reconstruction with an HLLC Riemann solver, MC* are MacCormack variants
/// distinguished by their artificial viscosity, LW is the two-step
/// Lax-Wendroff scheme.
enum class SchemeId { S1, S2H, MC, MC1, MC2, MC4, LW };

inline constexpr std::array<SchemeId, 7> all_schemes = {
    SchemeId::S1, SchemeId::S2H, SchemeId::MC,  SchemeId::MC1,
    SchemeId::MC2, SchemeId::MC4, SchemeId::LW};

inline const char* scheme_label(SchemeId id) {
  switch (id) {
    case SchemeId::S1: return "S1";
    case SchemeId::S2H: return "S2H";
    case SchemeId::MC: return "MC";
    case SchemeId::MC1: return "MC1";
    case SchemeId::MC2: return "MC2";
    case SchemeId::MC4: return "MC4";
    case SchemeId::LW: return "LW";
  }
  return "?";
}

inline SchemeId parse_scheme(const std::string& s) {
  for (SchemeId id : all_schemes)
    if (s == scheme_label(id)) return id;
  throw validation_error("unknown scheme label '" + s + "'");
}

struct ArtificialViscosity {
  int order = 0;   // 0 = none, 2 or 4
  double mu = 0.0; // coefficient, fixed per scheme id
};

inline ArtificialViscosity scheme_viscosity(SchemeId id) {
  switch (id) {
    case SchemeId::MC1: return {2, 0.01};
    case SchemeId::MC2: return {2, 0.002};
    case SchemeId::MC4: return {4, 0.01};
    case SchemeId::LW: return {2, 0.01};
    default: return {0, 0.0};
  }
}

inline double scheme_default_cfl(SchemeId id) {
  switch (id) {
    case SchemeId::S1:
    case SchemeId::S2H:
      return 0.45;
    default:
      return 0.30; // predictor-corrector schemes with added viscosity
  }
}

} // namespace psv
