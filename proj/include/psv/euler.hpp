#pragma once

#include <algorithm>
#include <cmath>

#include "psv/gas.hpp"

namespace psv {

// Pointwise Euler flux kernels on conserved states [rho, rho*u, rho*v, rho*E].
// The y-direction is handled by the same kernels with the two momentum
// components swapped (axis = 0 for x, 1 for y).

namespace euler {

struct Decoded {
  double rho, u, v, p, c;
};

inline Decoded decode(const double* q, double gamma, int axis) {
  Decoded d;
  d.rho = q[0];
  const double mu_n = q[1 + axis];
  const double mu_t = q[2 - axis];
  d.u = mu_n / d.rho; // normal velocity
  d.v = mu_t / d.rho; // tangential velocity
  d.p = (gamma - 1.0) * (q[3] - 0.5 * (mu_n * mu_n + mu_t * mu_t) / d.rho);
  d.c = std::sqrt(gamma * std::max(d.p, 1e-300) / d.rho);
  return d;
}

/// Physical flux of the conserved state q through a face with normal along
/// `axis`, in the axis-local ordering [mass, normal momentum, tangential
/// momentum, energy].
inline void flux_from_state(const double* q, double gamma, int axis, double* f) {
  const Decoded s = decode(q, gamma, axis);
  const double rhoE = q[3];
  f[0] = s.rho * s.u;
  f[1] = s.rho * s.u * s.u + s.p;
  f[2] = s.rho * s.u * s.v;
  f[3] = s.u * (rhoE + s.p);
}

/// Courant-Isaacson-Rees upwind flux: central flux plus characteristic
/// dissipation |A| dU evaluated at the arithmetic average of the two states.
inline void cir_flux(const double* ql, const double* qr, double gamma, int axis, double* f) {
  const Decoded L = decode(ql, gamma, axis);
  const Decoded R = decode(qr, gamma, axis);

  double fl[4], fr[4];
  flux_from_state(ql, gamma, axis, fl);
  flux_from_state(qr, gamma, axis, fr);

  const double rho = 0.5 * (L.rho + R.rho);
  const double u = 0.5 * (L.u + R.u);
  const double v = 0.5 * (L.v + R.v);
  const double p = 0.5 * (L.p + R.p);
  const double c = std::sqrt(gamma * p / rho);
  const double H = c * c / (gamma - 1.0) + 0.5 * (u * u + v * v);

  const double drho = R.rho - L.rho;
  const double du = R.u - L.u;
  const double dv = R.v - L.v;
  const double dp = R.p - L.p;

  const double a1 = (dp - rho * c * du) / (2.0 * c * c); // u - c wave
  const double a2 = drho - dp / (c * c);                 // entropy wave
  const double a3 = rho * dv;                            // shear wave
  const double a4 = (dp + rho * c * du) / (2.0 * c * c); // u + c wave

  // Entropy floor keeps the dissipation away from zero at sonic points.
  auto fix = [&](double lambda) {
    const double eps = 0.05 * c;
    const double al = std::abs(lambda);
    return al < eps ? 0.5 * (lambda * lambda / eps + eps) : al;
  };
  const double l1 = fix(u - c), l2 = fix(u), l4 = fix(u + c);

  double diss[4];
  diss[0] = l1 * a1 + l2 * a2;
  diss[1] = l1 * a1 * (u - c) + l2 * a2 * u;
  diss[2] = (l1 * a1 + l2 * a2) * v + l2 * a3;
  diss[3] = l1 * a1 * (H - u * c) + l2 * a2 * 0.5 * (u * u + v * v) + l2 * a3 * v;
  diss[0] += l4 * a4;
  diss[1] += l4 * a4 * (u + c);
  diss[2] += l4 * a4 * v;
  diss[3] += l4 * a4 * (H + u * c);

  for (int k = 0; k < 4; ++k) f[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * diss[k];
}

/// HLLC flux with Davis wave-speed bounds.
inline void hllc_flux(const double* ql, const double* qr, double gamma, int axis, double* f) {
  const Decoded L = decode(ql, gamma, axis);
  const Decoded R = decode(qr, gamma, axis);

  const double sl = std::min(L.u - L.c, R.u - R.c);
  const double sr = std::max(L.u + L.c, R.u + R.c);

  double fl[4], fr[4];
  flux_from_state(ql, gamma, axis, fl);
  flux_from_state(qr, gamma, axis, fr);

  if (sl >= 0.0) {
    for (int k = 0; k < 4; ++k) f[k] = fl[k];
    return;
  }
  if (sr <= 0.0) {
    for (int k = 0; k < 4; ++k) f[k] = fr[k];
    return;
  }

  const double ml = L.rho * (sl - L.u);
  const double mr = R.rho * (sr - R.u);
  const double sstar = (R.p - L.p + L.u * ml - R.u * mr) / (ml - mr);

  auto star_state = [&](const Decoded& s, const double* q, double swave, double* ustar) {
    const double coef = s.rho * (swave - s.u) / (swave - sstar);
    ustar[0] = coef;
    ustar[1] = coef * sstar;
    ustar[2] = coef * s.v;
    ustar[3] = coef * (q[3] / s.rho + (sstar - s.u) * (sstar + s.p / (s.rho * (swave - s.u))));
  };

  double qs[4];
  if (sstar >= 0.0) {
    double qla[4] = {ql[0], 0, 0, ql[3]};
    qla[1] = L.rho * L.u;
    qla[2] = L.rho * L.v;
    star_state(L, qla, sl, qs);
    for (int k = 0; k < 4; ++k) f[k] = fl[k] + sl * (qs[k] - qla[k]);
  } else {
    double qra[4] = {qr[0], 0, 0, qr[3]};
    qra[1] = R.rho * R.u;
    qra[2] = R.rho * R.v;
    star_state(R, qra, sr, qs);
    for (int k = 0; k < 4; ++k) f[k] = fr[k] + sr * (qs[k] - qra[k]);
  }
}

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

inline double van_leer_slope(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

} // namespace euler
} // namespace psv
