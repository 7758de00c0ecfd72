#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "psv/euler.hpp"
#include "psv/grid.hpp"
#include "psv/pattern.hpp"
#include "psv/scheme.hpp"

namespace psv {

enum class Limiter { minmod, van_leer };

inline Limiter parse_limiter(const std::string& s) {
  if (s == "minmod") return Limiter::minmod;
  if (s == "van_leer") return Limiter::van_leer;
  throw validation_error("unknown limiter '" + s + "'");
}

enum class InitField { pattern, freestream, given };

/// One marching run: scheme, grid, gas, and the analytic pattern that supplies
/// boundary traces (supersonic inflow on the left; zero-order extrapolation at
/// supersonic outflow; top/bottom prescribed where the pattern flows inward).
struct SolverConfig {
  SchemeId scheme = SchemeId::S1;
  Grid grid;
  GasModel gas;
  FlowPattern pattern;
  /// Overrides the pattern as the boundary-trace field when set (exact
  /// steady-profile harnesses).
  std::function<PrimitiveState(double, double)> boundary_field;
  double cfl = 0.0; ///< <= 0 selects the per-scheme default
  long min_steps = 0;
  long max_steps = 50000;
  double steady_tol = 1e-8;
  Limiter limiter = Limiter::minmod;
  InitField init = InitField::pattern;
  bool prescribe_all_boundaries = false; ///< exact-profile harness mode
  bool track_conservation = false;
  bool record_history = true;

  double effective_cfl() const { return cfl > 0.0 ? cfl : scheme_default_cfl(scheme); }

  void validate() const {
    if (grid.nx < 3 || grid.ny < 3)
      throw validation_error("SolverConfig: grid must be at least 3x3");
    if (!(effective_cfl() > 0.0) || effective_cfl() > 1.0)
      throw validation_error("SolverConfig: cfl must lie in (0, 1]");
    if (!(steady_tol > 0.0)) throw validation_error("SolverConfig: steady_tol must be > 0");
    if (max_steps < 1) throw validation_error("SolverConfig: max_steps must be >= 1");
  }
};

struct ConvergenceSample {
  long step;
  double residual; ///< density change per step, relative to the first step
  double dt;
};

struct ConvergenceLog {
  bool converged = false;
  long steps = 0;
  double final_residual = 0.0;
  double first_step_change = 0.0; ///< absolute density-change norm of step 1
  double max_mass_balance_error = 0.0;
  long positivity_fallback_cells = 0; ///< cell-updates rescued by the local first-order fallback
  std::vector<ConvergenceSample> history;
  std::string warning;
};

struct SolveResult {
  GridFunction field;
  ConvergenceLog log;
};

namespace detail {

/// Explicit pseudo-time marcher on a two-ghost-ring padded state array.
/// Every scheme is expressed through face fluxes so the cell update (and with
/// it conservation and the source hook) is shared.
class EulerMarcher {
public:
  EulerMarcher(const SolverConfig& cfg, const GridFunction* source)
      : cfg_(cfg), source_(source), nx_(cfg.grid.nx), ny_(cfg.grid.ny),
        W_(nx_ + 4), H_(ny_ + 4), gamma_(cfg.gas.gamma),
        hx_(cfg.grid.hx()), hy_(cfg.grid.hy()) {
    cfg_.validate();
    if (source_ && !(source_->grid == cfg.grid && source_->ncomp == 4))
      throw validation_error("run_scheme_with_source: source layout mismatch");
    u_.assign(static_cast<std::size_t>(W_) * H_ * 4, 0.0);
    unew_ = u_;
    ustage_ = u_;
    fstage_x_ = u_;
    fstage_y_ = u_;
    fstage_x2_ = u_;
    fstage_y2_ = u_;
    fluxx_.assign(static_cast<std::size_t>(nx_ + 1) * ny_ * 4, 0.0);
    fluxy_.assign(static_cast<std::size_t>(nx_) * (ny_ + 1) * 4, 0.0);
    build_ghost_rules();
  }

  PrimitiveState boundary_state(double x, double y) const {
    return cfg_.boundary_field ? cfg_.boundary_field(x, y) : cfg_.pattern.eval(x, y);
  }

  std::size_t cell(int i, int j) const {
    return (static_cast<std::size_t>(j + 2) * W_ + (i + 2)) * 4;
  }
  std::size_t fxi(int fi, int j) const {
    return (static_cast<std::size_t>(j) * (nx_ + 1) + fi) * 4;
  }
  std::size_t fyi(int i, int fj) const {
    return (static_cast<std::size_t>(fj) * nx_ + i) * 4;
  }

  void load(const GridFunction& f) {
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i)
        for (int c = 0; c < 4; ++c) u_[cell(i, j) + c] = f(i, j, c);
  }

  GridFunction extract() const {
    GridFunction f(cfg_.grid, 4);
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i)
        for (int c = 0; c < 4; ++c) f(i, j, c) = u_[cell(i, j) + c];
    return f;
  }

  GridFunction initial_field() const {
    switch (cfg_.init) {
      case InitField::pattern:
        return project_pattern(cfg_.pattern, cfg_.grid, cfg_.gas);
      case InitField::freestream: {
        const PrimitiveState fs =
            boundary_state(cfg_.grid.x0 - 10.0 * (cfg_.grid.x1 - cfg_.grid.x0),
                           0.5 * (cfg_.grid.y0 + cfg_.grid.y1));
        GridFunction f(cfg_.grid, 4);
        const Conserved c = to_conserved(fs, cfg_.gas);
        for (int j = 0; j < ny_; ++j)
          for (int i = 0; i < nx_; ++i)
            for (int k = 0; k < 4; ++k) f(i, j, k) = c[k];
        return f;
      }
      case InitField::given:
        throw validation_error("initial field required but not supplied");
    }
    throw validation_error("bad init mode");
  }

  void fill_ghosts(std::vector<double>& a) const {
    for (const CopyRule& r : copies_)
      for (int c = 0; c < 4; ++c) a[r.dst + c] = a[r.src + c];
    for (const PrescribeRule& r : prescribes_)
      for (int c = 0; c < 4; ++c) a[r.dst + c] = r.value[c];
  }

  double stable_dt() const {
    double inv_max = 0.0;
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const double* q = &u_[cell(i, j)];
        const double rho = q[0];
        const double uu = q[1] / rho, vv = q[2] / rho;
        const double p = (gamma_ - 1.0) * (q[3] - 0.5 * (q[1] * q[1] + q[2] * q[2]) / rho);
        const double c = std::sqrt(gamma_ * std::max(p, 1e-300) / rho);
        const double r = (std::abs(uu) + c) / hx_ + (std::abs(vv) + c) / hy_;
        inv_max = std::max(inv_max, r);
      }
    }
    if (!(inv_max > 0.0) || !std::isfinite(inv_max))
      throw divergence_error("stable_dt: nonfinite wave speeds", -1, -1, -1);
    return cfg_.effective_cfl() / inv_max;
  }

  /// Fills fluxx_/fluxy_ with the scheme's total face fluxes for the current
  /// state (including artificial viscosity; stage computations use dt).
  void compute_face_fluxes(double dt) {
    fill_ghosts(u_);
    switch (cfg_.scheme) {
      case SchemeId::S1: godunov_type_fluxes(/*hllc=*/false); break;
      case SchemeId::S2H: muscl_hllc_fluxes(); break;
      case SchemeId::MC:
      case SchemeId::MC1:
      case SchemeId::MC2:
      case SchemeId::MC4: maccormack_fluxes(dt); break;
      case SchemeId::LW: lax_wendroff_fluxes(dt); break;
    }
    const ArtificialViscosity av = scheme_viscosity(cfg_.scheme);
    if (av.order != 0) add_artificial_viscosity(av);
  }

  struct StepStats {
    double density_change_l2 = 0.0;
    double mass_balance_error = 0.0;
    long fallback_cells = 0;
  };

  bool cell_physical(const double* q) const {
    const double rho = q[0];
    if (!std::isfinite(rho) || rho <= 1e-10) return false;
    const double p =
        (gamma_ - 1.0) * (q[3] - 0.5 * (q[1] * q[1] + q[2] * q[2]) / rho);
    return std::isfinite(p) && p > 1e-12 && std::isfinite(q[1]) && std::isfinite(q[2]);
  }

  void update_cell(int i, int j, double dt) {
    const double dtx = dt / hx_, dty = dt / hy_;
    const std::size_t q = cell(i, j);
    const std::size_t fx0 = fxi(i, j), fx1 = fxi(i + 1, j);
    const std::size_t fy0 = fyi(i, j), fy1 = fyi(i, j + 1);
    for (int c = 0; c < 4; ++c) {
      double v = u_[q + c] - dtx * (fluxx_[fx1 + c] - fluxx_[fx0 + c]) -
                 dty * (fluxy_[fy1 + c] - fluxy_[fy0 + c]);
      if (source_) v += dt * (*source_)(i, j, c);
      unew_[q + c] = v;
    }
  }

  /// Rusanov flux, the local fallback for positivity rescue.
  void rusanov_face(const double* ql, const double* qr, int axis, double* f_local) const {
    const euler::Decoded L = euler::decode(ql, gamma_, axis);
    const euler::Decoded R = euler::decode(qr, gamma_, axis);
    const double smax = std::max(std::abs(L.u) + L.c, std::abs(R.u) + R.c);
    double fl[4], fr[4];
    euler::flux_from_state(ql, gamma_, axis, fl);
    euler::flux_from_state(qr, gamma_, axis, fr);
    double dq[4] = {qr[0] - ql[0], 0, 0, qr[3] - ql[3]};
    dq[1] = qr[1 + axis] - ql[1 + axis];
    dq[2] = qr[2 - axis] - ql[2 - axis];
    for (int k = 0; k < 4; ++k) f_local[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * smax * dq[k];
  }

  /// Replaces the four faces of a crisis cell with first-order Rusanov fluxes
  /// from the pre-update state. Face-level replacement keeps the flux arrays
  /// single-valued, so discrete conservation is untouched.
  void replace_cell_faces(int i, int j) {
    double f[4];
    rusanov_face(&u_[cell(i - 1, j)], &u_[cell(i, j)], 0, f);
    store_face_x(i, j, f);
    rusanov_face(&u_[cell(i, j)], &u_[cell(i + 1, j)], 0, f);
    store_face_x(i + 1, j, f);
    rusanov_face(&u_[cell(i, j - 1)], &u_[cell(i, j)], 1, f);
    store_face_y(i, j, f);
    rusanov_face(&u_[cell(i, j)], &u_[cell(i, j + 1)], 1, f);
    store_face_y(i, j + 1, f);
  }

  /// Conservative update from the prepared face fluxes; returns the step
  /// statistics. Cells whose update would leave the physical state space are
  /// retried with local first-order fluxes before declaring divergence.
  StepStats apply_update(double dt, long step_index) {
    StepStats st;
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i) update_cell(i, j, dt);

    // Positivity rescue rounds.
    for (int round = 0; round < 5; ++round) {
      std::vector<std::pair<int, int>> crisis;
      for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i)
          if (!cell_physical(&unew_[cell(i, j)])) crisis.emplace_back(i, j);
      if (crisis.empty()) break;
      if (round == 4) {
        const auto [ci, cj] = crisis.front();
        throw divergence_error("solver diverged (" + std::string(scheme_label(cfg_.scheme)) +
                                   "): nonphysical state at step " + std::to_string(step_index) +
                                   ", cell (" + std::to_string(ci) + ", " + std::to_string(cj) +
                                   ")",
                               step_index, ci, cj);
      }
      st.fallback_cells += static_cast<long>(crisis.size());
      for (auto [ci, cj] : crisis) replace_cell_faces(ci, cj);
      // Recompute every cell that touches a replaced face.
      for (auto [ci, cj] : crisis)
        for (auto [di, dj] : {std::pair{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const int ii = ci + di, jj = cj + dj;
          if (ii >= 0 && ii < nx_ && jj >= 0 && jj < ny_) update_cell(ii, jj, dt);
        }
    }

    double change2 = 0.0;
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const double d0 = unew_[cell(i, j)] - u_[cell(i, j)];
        change2 += d0 * d0;
      }
    }
    st.density_change_l2 = std::sqrt(change2 * hx_ * hy_);

    if (cfg_.track_conservation) {
      double dmass = 0.0;
      for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i) dmass += unew_[cell(i, j)] - u_[cell(i, j)];
      dmass *= hx_ * hy_;
      double outflux = 0.0;
      for (int j = 0; j < ny_; ++j)
        outflux += (fluxx_[fxi(nx_, j)] - fluxx_[fxi(0, j)]) * hy_;
      for (int i = 0; i < nx_; ++i)
        outflux += (fluxy_[fyi(i, ny_)] - fluxy_[fyi(i, 0)]) * hx_;
      double src = 0.0;
      if (source_)
        for (int j = 0; j < ny_; ++j)
          for (int i = 0; i < nx_; ++i) src += (*source_)(i, j, 0);
      src *= hx_ * hy_;
      st.mass_balance_error = std::abs(dmass + dt * outflux - dt * src);
    }

    std::swap(u_, unew_);
    return st;
  }

  /// Steady spatial residual (flux divergence minus source) of the scheme's
  /// discrete operator on the current state.
  GridFunction flux_divergence_minus_source(double dt) {
    compute_face_fluxes(dt);
    GridFunction r(cfg_.grid, 4);
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const std::size_t fx0 = fxi(i, j), fx1 = fxi(i + 1, j);
        const std::size_t fy0 = fyi(i, j), fy1 = fyi(i, j + 1);
        for (int c = 0; c < 4; ++c) {
          double v = (fluxx_[fx1 + c] - fluxx_[fx0 + c]) / hx_ +
                     (fluxy_[fy1 + c] - fluxy_[fy0 + c]) / hy_;
          if (source_) v -= (*source_)(i, j, c);
          r(i, j, c) = v;
        }
      }
    }
    return r;
  }

private:
  struct CopyRule {
    std::size_t dst, src;
  };
  struct PrescribeRule {
    std::size_t dst;
    double value[4];
  };

  void build_ghost_rules() {
    const Grid& g = cfg_.grid;
    auto ghost_center_x = [&](int i) { return g.x0 + (i + 0.5) * hx_; };
    auto ghost_center_y = [&](int j) { return g.y0 + (j + 0.5) * hy_; };
    for (int j = -2; j < ny_ + 2; ++j) {
      for (int i = -2; i < nx_ + 2; ++i) {
        const bool interior = i >= 0 && i < nx_ && j >= 0 && j < ny_;
        if (interior) continue;
        const double x = ghost_center_x(i), y = ghost_center_y(j);
        const PrimitiveState s = boundary_state(x, y);
        auto prescribe = [&]() {
          PrescribeRule r;
          r.dst = cell(i, j);
          const Conserved c = to_conserved(s, cfg_.gas);
          for (int k = 0; k < 4; ++k) r.value[k] = c[k];
          prescribes_.push_back(r);
        };
        auto copy_from = [&](int si, int sj) {
          copies_.push_back({cell(i, j), cell(si, sj)});
        };
        if (cfg_.prescribe_all_boundaries) {
          prescribe();
          continue;
        }
        if (i < 0) {
          prescribe(); // supersonic inflow
        } else if (i >= nx_) {
          copy_from(nx_ - 1, std::clamp(j, 0, ny_ - 1)); // supersonic outflow
        } else if (j < 0) {
          if (s.v > 0.0) prescribe();
          else copy_from(i, 0);
        } else {
          if (s.v < 0.0) prescribe();
          else copy_from(i, ny_ - 1);
        }
      }
    }
  }

  void store_face_x(int fi, int j, const double* f_local) {
    const std::size_t q = fxi(fi, j);
    fluxx_[q + 0] = f_local[0];
    fluxx_[q + 1] = f_local[1];
    fluxx_[q + 2] = f_local[2];
    fluxx_[q + 3] = f_local[3];
  }
  void store_face_y(int i, int fj, const double* f_local) {
    const std::size_t q = fyi(i, fj);
    fluxy_[q + 0] = f_local[0];
    fluxy_[q + 1] = f_local[2]; // tangential (x) momentum
    fluxy_[q + 2] = f_local[1]; // normal (y) momentum
    fluxy_[q + 3] = f_local[3];
  }

  void godunov_type_fluxes(bool hllc) {
    double f[4];
    for (int j = 0; j < ny_; ++j)
      for (int fi = 0; fi <= nx_; ++fi) {
        const double* ql = &u_[cell(fi - 1, j)];
        const double* qr = &u_[cell(fi, j)];
        if (hllc) euler::hllc_flux(ql, qr, gamma_, 0, f);
        else euler::cir_flux(ql, qr, gamma_, 0, f);
        store_face_x(fi, j, f);
      }
    for (int fj = 0; fj <= ny_; ++fj)
      for (int i = 0; i < nx_; ++i) {
        const double* ql = &u_[cell(i, fj - 1)];
        const double* qr = &u_[cell(i, fj)];
        if (hllc) euler::hllc_flux(ql, qr, gamma_, 1, f);
        else euler::cir_flux(ql, qr, gamma_, 1, f);
        store_face_y(i, fj, f);
      }
  }

  void primitive_at(const std::vector<double>& a, int i, int j, double* w) const {
    const double* q = &a[cell(i, j)];
    w[0] = q[0];
    w[1] = q[1] / q[0];
    w[2] = q[2] / q[0];
    w[3] = (gamma_ - 1.0) * (q[3] - 0.5 * (q[1] * q[1] + q[2] * q[2]) / q[0]);
  }

  void conserved_from_primitive(const double* w, double* q) const {
    q[0] = w[0];
    q[1] = w[0] * w[1];
    q[2] = w[0] * w[2];
    q[3] = w[3] / (gamma_ - 1.0) + 0.5 * w[0] * (w[1] * w[1] + w[2] * w[2]);
  }

  double slope(double a, double b) const {
    return cfg_.limiter == Limiter::minmod ? euler::minmod(a, b) : euler::van_leer_slope(a, b);
  }

  void muscl_hllc_fluxes() {
    double wm[4], w0[4], wp[4], wpp[4], wl[4], wr[4], ql[4], qr[4], f[4];
    for (int j = 0; j < ny_; ++j) {
      for (int fi = 0; fi <= nx_; ++fi) {
        primitive_at(u_, fi - 2, j, wm);
        primitive_at(u_, fi - 1, j, w0);
        primitive_at(u_, fi, j, wp);
        primitive_at(u_, fi + 1, j, wpp);
        for (int c = 0; c < 4; ++c) {
          wl[c] = w0[c] + 0.5 * slope(w0[c] - wm[c], wp[c] - w0[c]);
          wr[c] = wp[c] - 0.5 * slope(wp[c] - w0[c], wpp[c] - wp[c]);
        }
        if (wl[0] <= 0.0 || wl[3] <= 0.0) { wl[0] = w0[0]; wl[1] = w0[1]; wl[2] = w0[2]; wl[3] = w0[3]; }
        if (wr[0] <= 0.0 || wr[3] <= 0.0) { wr[0] = wp[0]; wr[1] = wp[1]; wr[2] = wp[2]; wr[3] = wp[3]; }
        conserved_from_primitive(wl, ql);
        conserved_from_primitive(wr, qr);
        euler::hllc_flux(ql, qr, gamma_, 0, f);
        store_face_x(fi, j, f);
      }
    }
    for (int fj = 0; fj <= ny_; ++fj) {
      for (int i = 0; i < nx_; ++i) {
        primitive_at(u_, i, fj - 2, wm);
        primitive_at(u_, i, fj - 1, w0);
        primitive_at(u_, i, fj, wp);
        primitive_at(u_, i, fj + 1, wpp);
        for (int c = 0; c < 4; ++c) {
          wl[c] = w0[c] + 0.5 * slope(w0[c] - wm[c], wp[c] - w0[c]);
          wr[c] = wp[c] - 0.5 * slope(wp[c] - w0[c], wpp[c] - wp[c]);
        }
        if (wl[0] <= 0.0 || wl[3] <= 0.0) { wl[0] = w0[0]; wl[1] = w0[1]; wl[2] = w0[2]; wl[3] = w0[3]; }
        if (wr[0] <= 0.0 || wr[3] <= 0.0) { wr[0] = wp[0]; wr[1] = wp[1]; wr[2] = wp[2]; wr[3] = wp[3]; }
        conserved_from_primitive(wl, ql);
        conserved_from_primitive(wr, qr);
        euler::hllc_flux(ql, qr, gamma_, 1, f);
        store_face_y(i, fj, f);
      }
    }
  }

  /// Physical cell fluxes F(U), G(U) in global component ordering for all
  /// padded cells of `a`.
  void cell_fluxes(const std::vector<double>& a, std::vector<double>& fx,
                   std::vector<double>& fy) const {
    for (int j = -2; j < ny_ + 2; ++j) {
      for (int i = -2; i < nx_ + 2; ++i) {
        const std::size_t q = cell(i, j);
        const double rho = a[q];
        const double uu = a[q + 1] / rho, vv = a[q + 2] / rho;
        const double p = (gamma_ - 1.0) * (a[q + 3] - 0.5 * rho * (uu * uu + vv * vv));
        fx[q + 0] = a[q + 1];
        fx[q + 1] = a[q + 1] * uu + p;
        fx[q + 2] = a[q + 1] * vv;
        fx[q + 3] = uu * (a[q + 3] + p);
        fy[q + 0] = a[q + 2];
        fy[q + 1] = a[q + 2] * uu;
        fy[q + 2] = a[q + 2] * vv + p;
        fy[q + 3] = vv * (a[q + 3] + p);
      }
    }
  }

  /// MacCormack: forward-difference predictor, backward-difference corrector;
  /// the averaged step is expressed as the face flux
  /// 0.5 * (F(U^n_{right cell}) + F(U*_{left cell})).
  void maccormack_fluxes(double dt) {
    const double dtx = dt / hx_, dty = dt / hy_;
    cell_fluxes(u_, fstage_x_, fstage_y_);
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const std::size_t q = cell(i, j);
        const std::size_t qe = cell(i + 1, j);
        const std::size_t qn = cell(i, j + 1);
        for (int c = 0; c < 4; ++c) {
          double v = u_[q + c] - dtx * (fstage_x_[qe + c] - fstage_x_[q + c]) -
                     dty * (fstage_y_[qn + c] - fstage_y_[q + c]);
          if (source_) v += dt * (*source_)(i, j, c);
          ustage_[q + c] = v;
        }
      }
    }
    fill_ghosts(ustage_);
    // Predictor fluxes: only the stage values in cells [-1, nx) x [-1, ny)
    // are read below, all covered by the ghost fill.
    cell_fluxes(ustage_, fstage_x2_, fstage_y2_);
    for (int j = 0; j < ny_; ++j)
      for (int fi = 0; fi <= nx_; ++fi) {
        const std::size_t qr = cell(fi, j);
        const std::size_t ql = cell(fi - 1, j);
        const std::size_t d = fxi(fi, j);
        for (int c = 0; c < 4; ++c)
          fluxx_[d + c] = 0.5 * (fstage_x_[qr + c] + fstage_x2_[ql + c]);
      }
    for (int fj = 0; fj <= ny_; ++fj)
      for (int i = 0; i < nx_; ++i) {
        const std::size_t qr = cell(i, fj);
        const std::size_t ql = cell(i, fj - 1);
        const std::size_t d = fyi(i, fj);
        for (int c = 0; c < 4; ++c)
          fluxy_[d + c] = 0.5 * (fstage_y_[qr + c] + fstage_y2_[ql + c]);
      }
  }

  /// Two-step Lax-Wendroff: per-direction Richtmyer half states on faces,
  /// physical flux of the half state.
  void lax_wendroff_fluxes(double dt) {
    cell_fluxes(u_, fstage_x_, fstage_y_);
    double uh[4], f[4];
    for (int j = 0; j < ny_; ++j)
      for (int fi = 0; fi <= nx_; ++fi) {
        const std::size_t ql = cell(fi - 1, j);
        const std::size_t qr = cell(fi, j);
        for (int c = 0; c < 4; ++c)
          uh[c] = 0.5 * (u_[ql + c] + u_[qr + c]) -
                  0.5 * dt / hx_ * (fstage_x_[qr + c] - fstage_x_[ql + c]);
        euler::flux_from_state(uh, gamma_, 0, f);
        store_face_x(fi, j, f);
      }
    for (int fj = 0; fj <= ny_; ++fj)
      for (int i = 0; i < nx_; ++i) {
        const std::size_t ql = cell(i, fj - 1);
        const std::size_t qr = cell(i, fj);
        for (int c = 0; c < 4; ++c)
          uh[c] = 0.5 * (u_[ql + c] + u_[qr + c]) -
                  0.5 * dt / hy_ * (fstage_y_[qr + c] - fstage_y_[ql + c]);
        euler::flux_from_state(uh, gamma_, 1, f);
        store_face_y(i, fj, f);
      }
  }

  double face_lambda(int axis, const double* ql, const double* qr) const {
    const euler::Decoded L = euler::decode(ql, gamma_, axis);
    const euler::Decoded R = euler::decode(qr, gamma_, axis);
    return std::max(std::abs(L.u) + L.c, std::abs(R.u) + R.c);
  }

  /// Conservative artificial dissipation added to the face fluxes:
  /// second order  f -= mu * lambda * (U_R - U_L),
  /// fourth order  f += mu * lambda * (U_RR - 3 U_R + 3 U_L - U_LL).
  /// Both vanish identically on constant states.
  void add_artificial_viscosity(const ArtificialViscosity& av) {
    for (int j = 0; j < ny_; ++j)
      for (int fi = 0; fi <= nx_; ++fi) {
        const std::size_t ll = cell(fi - 2, j);
        const std::size_t l = cell(fi - 1, j);
        const std::size_t r = cell(fi, j);
        const std::size_t rr = cell(fi + 1, j);
        const double lam = face_lambda(0, &u_[l], &u_[r]);
        const std::size_t d = fxi(fi, j);
        for (int c = 0; c < 4; ++c) {
          if (av.order == 2)
            fluxx_[d + c] -= av.mu * lam * (u_[r + c] - u_[l + c]);
          else
            fluxx_[d + c] += av.mu * lam *
                             (u_[rr + c] - 3.0 * u_[r + c] + 3.0 * u_[l + c] - u_[ll + c]);
        }
      }
    for (int fj = 0; fj <= ny_; ++fj)
      for (int i = 0; i < nx_; ++i) {
        const std::size_t ll = cell(i, fj - 2);
        const std::size_t l = cell(i, fj - 1);
        const std::size_t r = cell(i, fj);
        const std::size_t rr = cell(i, fj + 1);
        const double lam = face_lambda(1, &u_[l], &u_[r]);
        const std::size_t d = fyi(i, fj);
        for (int c = 0; c < 4; ++c) {
          if (av.order == 2)
            fluxy_[d + c] -= av.mu * lam * (u_[r + c] - u_[l + c]);
          else
            fluxy_[d + c] += av.mu * lam *
                             (u_[rr + c] - 3.0 * u_[r + c] + 3.0 * u_[l + c] - u_[ll + c]);
        }
      }
  }

  SolverConfig cfg_;
  const GridFunction* source_;
  int nx_, ny_, W_, H_;
  double gamma_, hx_, hy_;
  std::vector<double> u_, unew_, ustage_;
  std::vector<double> fstage_x_, fstage_y_, fstage_x2_, fstage_y2_;
  std::vector<double> fluxx_, fluxy_;
  std::vector<CopyRule> copies_;
  std::vector<PrescribeRule> prescribes_;
};

} // namespace detail

/// Marches the configured scheme to steady state (relative density residual
/// below steady_tol) or until max_steps. An optional source field is added to
/// every cell update; a null source is bit-identical to a zero source. Non-
/// convergence is reported in the log, nonphysical states throw
/// divergence_error.
inline SolveResult run_scheme_with_source(const SolverConfig& cfg, const GridFunction* source,
                                          const GridFunction* initial = nullptr) {
  detail::EulerMarcher m(cfg, source);

  GridFunction init;
  if (cfg.init == InitField::given) {
    if (!initial) throw validation_error("run_scheme: init mode 'given' needs a field");
    if (!(initial->grid == cfg.grid && initial->ncomp == 4))
      throw validation_error("run_scheme: initial field layout mismatch");
    init = *initial;
  } else {
    init = m.initial_field();
  }
  m.load(init);

  // Supersonic-inflow precondition on the left boundary trace.
  for (int j = 0; j < cfg.grid.ny; ++j) {
    const double x = cfg.grid.x0 - 0.5 * cfg.grid.hx();
    const double y = cfg.grid.yc(j);
    const PrimitiveState s =
        cfg.boundary_field ? cfg.boundary_field(x, y) : cfg.pattern.eval(x, y);
    if (!(s.u > s.sound_speed(cfg.gas)))
      throw validation_error("run_scheme: left-boundary trace is not supersonic inflow");
  }

  ConvergenceLog log;
  double first_change = 0.0;
  for (long step = 1; step <= cfg.max_steps; ++step) {
    const double dt = m.stable_dt();
    m.compute_face_fluxes(dt);
    const auto st = m.apply_update(dt, step);
    log.max_mass_balance_error = std::max(log.max_mass_balance_error, st.mass_balance_error);
    log.positivity_fallback_cells += st.fallback_cells;
    if (step == 1) {
      first_change = st.density_change_l2;
      log.first_step_change = first_change;
    }
    const double rel =
        first_change > 1e-300 ? st.density_change_l2 / first_change : 0.0;
    if (cfg.record_history) log.history.push_back({step, rel, dt});
    log.steps = step;
    log.final_residual = rel;
    if (step >= cfg.min_steps && rel < cfg.steady_tol) {
      log.converged = true;
      break;
    }
  }
  if (!log.converged)
    log.warning = "not converged to steady_tol within " + std::to_string(cfg.max_steps) +
                  " steps (final relative residual " + std::to_string(log.final_residual) + ")";

  return SolveResult{m.extract(), std::move(log)};
}

inline SolveResult run_scheme(const SolverConfig& cfg) {
  return run_scheme_with_source(cfg, nullptr);
}

/// Steady spatial residual of the scheme's discrete operator on u (flux
/// divergence minus the problem source). Marching with this field as the
/// source makes u an exact steady state of the same configuration.
inline GridFunction scheme_steady_residual(const SolverConfig& cfg, const GridFunction& u,
                                           const GridFunction* source = nullptr) {
  if (!(u.grid == cfg.grid && u.ncomp == 4))
    throw validation_error("scheme_steady_residual: field layout mismatch");
  detail::EulerMarcher m(cfg, source);
  m.load(u);
  const double dt = m.stable_dt();
  return m.flux_divergence_minus_source(dt);
}

} // namespace psv
