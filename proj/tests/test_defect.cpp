#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "psv/defect.hpp"
#include "psv/estimators.hpp"

using namespace psv;

namespace {

const GasModel gas{1.4, 1.0};

// Monotone smooth shear: an exact steady Euler solution with no interior
// extrema, so limited reconstructions stay second order on it.
PrimitiveState shear_state(double, double y) {
  PrimitiveState s;
  s.rho = 1.0 + 0.15 * std::tanh(2.0 * (y - 0.5));
  s.u = 3.0 + 0.2 * std::sin(0.5 * pi * y);
  s.v = 0.0;
  s.p = 1.0 / 1.4;
  return s;
}

SolverConfig shear_config(int n) {
  SolverConfig cfg;
  cfg.scheme = SchemeId::S1;
  cfg.grid = make_unit_grid(n, n);
  cfg.gas = gas;
  cfg.pattern = build_freestream_pattern(freestream(3.0, gas), gas);
  cfg.boundary_field = shear_state;
  cfg.prescribe_all_boundaries = true;
  cfg.record_history = false;
  return cfg;
}

GridFunction project_callable(const Grid& g,
                              PrimitiveState (*f)(double, double)) {
  GridFunction out(g, 4);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Conserved c = to_conserved(f(g.xc(i), g.yc(j)), gas);
      for (int k = 0; k < 4; ++k) out(i, j, k) = c[k];
    }
  return out;
}

// ---- independent stencil oracle for the first-order upwind operator ----
// Reassembles the characteristic dissipation as R * |Lambda| * R^{-1} * dU
// with a numerically inverted eigenvector matrix (Gauss elimination), instead
// of the closed-form wave strengths used by the implementation.

std::array<double, 4> solve4(std::array<std::array<double, 4>, 4> A,
                             std::array<double, 4> b) {
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[piv], A[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < 4; ++r) {
      const double f = A[r][col] / A[col][col];
      for (int c = col; c < 4; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  std::array<double, 4> x{};
  for (int r = 3; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < 4; ++c) acc -= A[r][c] * x[c];
    x[r] = acc / A[r][r];
  }
  return x;
}

// Axis-local conserved state and physical flux.
std::array<double, 4> local_state(const Conserved& q, int axis) {
  return {q[0], q[1 + axis], q[2 - axis], q[3]};
}

std::array<double, 4> local_flux(const std::array<double, 4>& q) {
  const double rho = q[0], un = q[1] / rho, ut = q[2] / rho;
  const double p = 0.4 * (q[3] - 0.5 * (q[1] * q[1] + q[2] * q[2]) / rho);
  return {q[1], q[1] * un + p, q[1] * ut, un * (q[3] + p)};
}

std::array<double, 4> oracle_cir_face(const std::array<double, 4>& ql,
                                      const std::array<double, 4>& qr) {
  auto prim = [](const std::array<double, 4>& q) {
    const double rho = q[0], un = q[1] / rho, ut = q[2] / rho;
    const double p = 0.4 * (q[3] - 0.5 * rho * (un * un + ut * ut));
    return std::array<double, 4>{rho, un, ut, p};
  };
  const auto L = prim(ql), R = prim(qr);
  const double rho = 0.5 * (L[0] + R[0]);
  const double u = 0.5 * (L[1] + R[1]);
  const double v = 0.5 * (L[2] + R[2]);
  const double p = 0.5 * (L[3] + R[3]);
  const double c = std::sqrt(1.4 * p / rho);
  const double H = c * c / 0.4 + 0.5 * (u * u + v * v);

  // Eigenvector matrix (columns: u-c, entropy, shear, u+c).
  std::array<std::array<double, 4>, 4> Rm{{{1, 1, 0, 1},
                                           {u - c, u, 0, u + c},
                                           {v, v, 1, v},
                                           {H - u * c, 0.5 * (u * u + v * v), v, H + u * c}}};
  const std::array<double, 4> dU = {qr[0] - ql[0], qr[1] - ql[1], qr[2] - ql[2],
                                    qr[3] - ql[3]};
  const std::array<double, 4> alpha = solve4(Rm, dU);
  auto fix = [&](double lam) {
    const double eps = 0.05 * c;
    const double al = std::abs(lam);
    return al < eps ? 0.5 * (lam * lam / eps + eps) : al;
  };
  const std::array<double, 4> lam = {fix(u - c), fix(u), fix(u), fix(u + c)};
  const auto fl = local_flux(ql);
  const auto fr = local_flux(qr);
  std::array<double, 4> f{};
  for (int r = 0; r < 4; ++r) {
    double diss = 0.0;
    for (int k = 0; k < 4; ++k) diss += Rm[r][k] * lam[k] * alpha[k];
    f[r] = 0.5 * (fl[r] + fr[r]) - 0.5 * diss;
  }
  return f;
}

} // namespace

TEST_CASE("truncation estimate matches an independent stencil oracle") {
  const Grid g = make_unit_grid(8, 6);
  SolverConfig cfg;
  cfg.scheme = SchemeId::S1;
  cfg.grid = g;
  cfg.gas = gas;
  cfg.pattern = build_freestream_pattern(freestream(3.0, gas), gas);
  cfg.boundary_field = shear_state;
  cfg.prescribe_all_boundaries = true;

  // Random bounded physical field near the shear profile.
  std::mt19937_64 rng(321);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  GridFunction u = project_callable(g, shear_state);
  for (double& v : u.values) v *= 1.0 + jitter(rng);

  const GridFunction delta = estimate_truncation(u, SchemeId::S1, cfg);

  // Oracle: padded array with prescribed ghosts, direct flux divergence.
  const int nx = g.nx, ny = g.ny;
  auto state_at = [&](int i, int j) -> Conserved {
    if (i >= 0 && i < nx && j >= 0 && j < ny)
      return {u(i, j, 0), u(i, j, 1), u(i, j, 2), u(i, j, 3)};
    return to_conserved(shear_state(g.x0 + (i + 0.5) * g.hx(), g.y0 + (j + 0.5) * g.hy()),
                        gas);
  };
  double worst = 0.0;
  double scale = 0.0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      std::array<double, 4> div{};
      for (int c = 0; c < 4; ++c) div[c] = 0.0;
      // x faces
      {
        const auto fl = oracle_cir_face(local_state(state_at(i - 1, j), 0),
                                        local_state(state_at(i, j), 0));
        const auto fr = oracle_cir_face(local_state(state_at(i, j), 0),
                                        local_state(state_at(i + 1, j), 0));
        div[0] += (fr[0] - fl[0]) / g.hx();
        div[1] += (fr[1] - fl[1]) / g.hx();
        div[2] += (fr[2] - fl[2]) / g.hx();
        div[3] += (fr[3] - fl[3]) / g.hx();
      }
      // y faces (swap momentum components into axis-local order and back)
      {
        const auto fl = oracle_cir_face(local_state(state_at(i, j - 1), 1),
                                        local_state(state_at(i, j), 1));
        const auto fr = oracle_cir_face(local_state(state_at(i, j), 1),
                                        local_state(state_at(i, j + 1), 1));
        div[0] += (fr[0] - fl[0]) / g.hy();
        div[2] += (fr[1] - fl[1]) / g.hy(); // normal = y momentum
        div[1] += (fr[2] - fl[2]) / g.hy(); // tangential = x momentum
        div[3] += (fr[3] - fl[3]) / g.hy();
      }
      for (int c = 0; c < 4; ++c) {
        worst = std::max(worst, std::abs(div[c] - delta(i, j, c)));
        scale = std::max(scale, std::abs(div[c]));
      }
    }
  CHECK(worst <= 1e-13 * std::max(1.0, scale));
}

TEST_CASE("own-scheme residual at convergence is uninformative") {
  SolverConfig cfg = shear_config(20);
  cfg.pattern = build_edney1(freestream(4.0, gas), deg2rad(20.0), deg2rad(15.0), gas,
                             {0.25, 0.5});
  cfg.boundary_field = nullptr;
  cfg.prescribe_all_boundaries = false;
  cfg.scheme = SchemeId::S1;
  cfg.steady_tol = 1e-10;
  cfg.max_steps = 30000;
  const auto res = run_scheme(cfg);
  REQUIRE(res.log.converged);

  const NormOptions all{ComponentMask::first_n(4), true};
  const GridFunction own = estimate_truncation(res.field, SchemeId::S1, cfg);
  const GridFunction cross = estimate_truncation(res.field, SchemeId::S2H, cfg);
  CHECK(l2_norm(own, all) <= 1e-4 * l2_norm(cross, all));
}

TEST_CASE("truncation residual drops at the scheme's order between two grids") {
  auto residual_norm = [&](SchemeId ref, int n) {
    SolverConfig cfg = shear_config(n);
    const GridFunction u = project_callable(cfg.grid, shear_state);
    const GridFunction delta = estimate_truncation(u, ref, cfg);
    return l2_norm(delta, NormOptions{ComponentMask::first_n(4), true});
  };
  const double s1_order =
      std::log2(residual_norm(SchemeId::S1, 50) / residual_norm(SchemeId::S1, 100));
  CHECK(s1_order > 0.5);
  CHECK(s1_order < 1.5);
  const double s2h_order =
      std::log2(residual_norm(SchemeId::S2H, 50) / residual_norm(SchemeId::S2H, 100));
  CHECK(s2h_order > 1.5);
  CHECK(s2h_order < 2.5);
}

TEST_CASE("defect displacement equals the direct linear solve on a 1D advection harness") {
  // Scalar steady advection a u_x = s discretized by first-order upwind with a
  // prescribed inflow value. The displacement produced by marching with an
  // extra source equals the direct algebraic solve of A dx = delta.
  const int n = 40;
  const double h = 1.0 / n, a = 1.0;
  auto source_term = [&](double x) { return std::cos(3.0 * x); };

  // Converged discrete solution by forward substitution: a(u_i - u_{i-1})/h = s_i.
  std::vector<double> u(n);
  double upstream = 0.7; // inflow value
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) * h;
    u[i] = upstream + h / a * source_term(x);
    upstream = u[i];
  }

  // Arbitrary smooth extra source (stands in for a truncation estimate).
  std::vector<double> delta(n);
  for (int i = 0; i < n; ++i) delta[i] = 0.3 * std::sin(5.0 * (i + 0.5) * h);

  // Direct solve of A dx = delta with the same lower-bidiagonal operator.
  std::vector<double> dx(n);
  double prev = 0.0;
  for (int i = 0; i < n; ++i) {
    dx[i] = prev + h / a * delta[i];
    prev = dx[i];
  }

  // Marching realization: pseudo-time stepping of the sourced problem, warm
  // started at the converged solution.
  std::vector<double> v = u;
  const double dt = 0.4 * h / a;
  for (int step = 0; step < 20000; ++step) {
    std::vector<double> w(n);
    double max_change = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = (i + 0.5) * h;
      const double left = i == 0 ? 0.7 : v[i - 1];
      const double rhs = source_term(x) + delta[i] - a * (v[i] - left) / h;
      w[i] = v[i] + dt * rhs;
      max_change = std::max(max_change, std::abs(w[i] - v[i]));
    }
    v = w;
    if (max_change < 1e-15) break;
  }
  for (int i = 0; i < n; ++i) CHECK(v[i] - u[i] == Catch::Approx(dx[i]).margin(1e-10));
}

TEST_CASE("error basis on a small shock-interaction ensemble") {
  const FlowPattern pat =
      build_edney1(freestream(4.0, gas), deg2rad(20.0), deg2rad(15.0), gas, {0.25, 0.5});
  std::vector<SolverConfig> configs;
  for (SchemeId id : {SchemeId::S1, SchemeId::S2H, SchemeId::MC1}) {
    SolverConfig cfg;
    cfg.scheme = id;
    cfg.grid = make_unit_grid(32, 32);
    cfg.gas = gas;
    cfg.pattern = pat;
    cfg.steady_tol = 1e-9;
    cfg.max_steps = 12000;
    cfg.record_history = false;
    configs.push_back(cfg);
  }
  const SolutionEnsemble ens = run_ensemble(configs);
  REQUIRE(ens.size() == 3);

  DefectOptions opt;
  opt.reference = SchemeId::S2H;
  opt.steady_tol = 1e-8;
  opt.max_steps = 12000;
  const ErrorBasis basis = build_error_basis(ens, configs.front(), opt);

  // The reference member's own residual is degenerate; the others are usable.
  CHECK(basis.entries.at("S2H").degenerate);
  CHECK(basis.usable("S1"));
  CHECK(basis.usable("MC1"));

  // Construction identity: approx = corrected - member, cellwise.
  for (const std::string& l : {std::string("S1"), std::string("MC1")}) {
    const ErrorBasisEntry& e = basis.entry(l);
    const GridFunction recon = subtract(e.corrected, ens.member(l));
    for (std::size_t k = 0; k < recon.values.size(); ++k)
      CHECK(recon.values[k] == e.approx.values[k]);
  }

  // Orientation: the estimate points toward the true error (angle < 60 deg).
  const GridFunction truth = project_pattern(pat, ens.grid, gas);
  const NormOptions dens{ComponentMask::density(), true};
  const GridFunction true_err_s1 = subtract(ens.member("S1"), truth);
  const double ang = angle_between(basis.entry("S1").approx, true_err_s1, dens);
  CHECK(rad2deg(ang) < 60.0);

  // Truncation angle table: symmetric, zero diagonal, reference excluded.
  const TruncationAngles ta = truncation_angle_table(basis, dens);
  CHECK(ta.excluded == std::vector<std::string>{"S2H"});
  REQUIRE(ta.table.labels.size() == 2);
  CHECK(ta.table.values[0][0] == 0.0);
  CHECK(ta.table.values[0][1] == ta.table.values[1][0]);
  CHECK(ta.table.values[0][1] >= 0.0);
  CHECK(ta.table.values[0][1] <= pi);
}

TEST_CASE("defect correction on a smooth exact solution") {
  // The shear profile is an exact steady solution; discretization errors are
  // smooth and the second-order reference is far more accurate than the
  // first-order member.
  SolverConfig cfg = shear_config(40);
  cfg.init = InitField::freestream;
  cfg.steady_tol = 1e-11;
  cfg.max_steps = 40000;
  const auto s1_run = run_scheme(cfg);
  REQUIRE(s1_run.log.converged);

  const GridFunction truth = project_callable(cfg.grid, shear_state);
  const NormOptions all{ComponentMask::first_n(4), true};

  SolutionEnsemble ens;
  ens.grid = cfg.grid;
  MemberRecord rec;
  rec.scheme = SchemeId::S1;
  rec.ok = true;
  ens.insert("S1", s1_run.field, rec);

  DefectOptions opt;
  opt.reference = SchemeId::S2H;
  opt.steady_tol = 1e-10;
  opt.max_steps = 40000;
  const ErrorBasis basis = build_error_basis(ens, cfg, opt);
  REQUIRE(basis.usable("S1"));

  // Subtracting the estimate moves the member toward the exact projection.
  GridFunction corrected_toward = ens.member("S1");
  add_scaled(corrected_toward, -1.0, basis.entry("S1").approx);
  const double before = distance(ens.member("S1"), truth, all);
  const double after = distance(corrected_toward, truth, all);
  CHECK(after <= 0.5 * before);

  // A member equal to the exact projection gets a near-zero estimate.
  SolutionEnsemble exact_ens;
  exact_ens.grid = cfg.grid;
  exact_ens.insert("S1", truth, rec);
  const ErrorBasis exact_basis = build_error_basis(exact_ens, cfg, opt);
  REQUIRE(exact_basis.entries.count("S1"));
  const ErrorBasisEntry& e = exact_basis.entry("S1");
  if (e.ok && !e.degenerate)
    CHECK(l2_norm(e.approx, all) <= 0.1 * before);
}

TEST_CASE("truncation angle table on synthetic deltas") {
  const Grid g = make_unit_grid(6, 6);
  ErrorBasis basis;
  basis.grid = g;
  basis.labels = {"a", "b", "c"};
  auto mk = [&](auto fill) {
    ErrorBasisEntry e;
    e.delta = GridFunction(g, 1);
    fill(e.delta);
    e.approx = e.delta;
    e.corrected = e.delta;
    e.ok = true;
    return e;
  };
  // identical deltas -> 0 angle; disjoint supports -> right angle
  basis.entries.emplace("a", mk([](GridFunction& f) {
    for (int i = 0; i < 3; ++i) f(i, 0, 0) = 1.0 + i;
  }));
  basis.entries.emplace("b", mk([](GridFunction& f) {
    for (int i = 0; i < 3; ++i) f(i, 0, 0) = 1.0 + i;
  }));
  basis.entries.emplace("c", mk([](GridFunction& f) {
    for (int i = 3; i < 6; ++i) f(i, 3, 0) = 2.0 * i;
  }));
  const NormOptions one{ComponentMask::first_n(1), true};
  const TruncationAngles ta = truncation_angle_table(basis, one);
  CHECK(ta.table.at("a", "b") == Catch::Approx(0.0).margin(1e-7));
  CHECK(ta.table.at("a", "c") == Catch::Approx(0.5 * pi).margin(1e-12));
}
