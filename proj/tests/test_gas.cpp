#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "psv/gas.hpp"
#include "psv/shock.hpp"

using namespace psv;

namespace {

// Test-side oracle for the theta-beta-M relation, written against the
// sin/cos form (not the implementation's tan form) and solved by plain
// bisection after a linear scan for the deflection maximum.
double oracle_theta(double m, double beta, double gamma) {
  const double s2 = std::sin(beta) * std::sin(beta);
  const double num = m * m * s2 - 1.0;
  const double den = m * m * (gamma + 1.0) / 2.0 - (m * m * s2 - 1.0);
  return std::atan(num / (den * std::tan(beta)));
}

struct OracleShock {
  double beta, p_ratio, rho_ratio, mach2;
};

OracleShock oracle_weak_shock(double m, double theta, double gamma) {
  const double mu = std::asin(1.0 / m);
  double best_beta = mu, best_theta = 0.0;
  for (int k = 0; k <= 20000; ++k) {
    const double b = mu + (0.5 * pi - mu) * k / 20000.0;
    const double t = oracle_theta(m, b, gamma);
    if (t > best_theta) {
      best_theta = t;
      best_beta = b;
    }
  }
  REQUIRE(theta < best_theta);
  double lo = mu, hi = best_beta;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (oracle_theta(m, mid, gamma) < theta ? lo : hi) = mid;
  }
  const double beta = 0.5 * (lo + hi);
  const double mn = m * std::sin(beta);
  OracleShock r;
  r.beta = beta;
  r.p_ratio = (2.0 * gamma * mn * mn - (gamma - 1.0)) / (gamma + 1.0);
  r.rho_ratio = (gamma + 1.0) * mn * mn / ((gamma - 1.0) * mn * mn + 2.0);
  const double mn2 = std::sqrt((1.0 + 0.5 * (gamma - 1.0) * mn * mn) /
                               (gamma * mn * mn - 0.5 * (gamma - 1.0)));
  r.mach2 = mn2 / std::sin(beta - theta);
  return r;
}

} // namespace

TEST_CASE("primitive/conserved conversions round trip") {
  const GasModel gas{1.4, 1.0};
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> rho(0.1, 10.0), vel(-5.0, 5.0), pr(0.05, 20.0);
  for (int k = 0; k < 200; ++k) {
    const PrimitiveState s{rho(rng), vel(rng), vel(rng), pr(rng)};
    const PrimitiveState t = to_primitive(to_conserved(s, gas), gas);
    CHECK(t.rho == Catch::Approx(s.rho).epsilon(1e-14));
    CHECK(t.u == Catch::Approx(s.u).margin(1e-14 * (1.0 + std::abs(s.u))));
    CHECK(t.v == Catch::Approx(s.v).margin(1e-14 * (1.0 + std::abs(s.v))));
    // Pressure recovery subtracts the kinetic energy, so its error bound
    // carries that conditioning factor.
    const double ke = 0.5 * s.rho * (s.u * s.u + s.v * s.v);
    CHECK(t.p == Catch::Approx(s.p).margin(1e-14 * (s.p + ke)));
  }
}

TEST_CASE("oblique shock at Mach 4, 20 degrees matches the oracle") {
  const GasModel gas{1.4, 1.0};
  const PrimitiveState fs = freestream(4.0, gas);
  const auto sol = oblique_shock(fs, deg2rad(20.0), gas);

  const OracleShock ora = oracle_weak_shock(4.0, deg2rad(20.0), 1.4);
  CHECK(sol.beta == Catch::Approx(ora.beta).margin(1e-10));
  CHECK(sol.downstream.p / fs.p == Catch::Approx(ora.p_ratio).margin(1e-10));
  CHECK(sol.downstream.rho / fs.rho == Catch::Approx(ora.rho_ratio).margin(1e-10));
  CHECK(sol.downstream.mach(gas) == Catch::Approx(ora.mach2).margin(1e-10));

  // Anchors from an independent offline evaluation of the same relations.
  CHECK(sol.beta == Catch::Approx(0.566601888065).margin(1e-9));
  CHECK(sol.downstream.p / fs.p == Catch::Approx(5.211572502220).margin(1e-8));
  CHECK(sol.downstream.rho == Catch::Approx(2.878225601888).margin(1e-8));
  CHECK(sol.downstream.mach(gas) == Catch::Approx(2.568616889032).margin(1e-8));

  // Flow turned by exactly the deflection.
  CHECK(sol.downstream.flow_angle() == Catch::Approx(deg2rad(20.0)).margin(1e-12));
}

TEST_CASE("zero deflection is the Mach wave limit") {
  const GasModel gas{1.4, 1.0};
  const PrimitiveState fs = freestream(3.0, gas);
  const auto sol = oblique_shock(fs, 0.0, gas);
  CHECK(sol.beta == Catch::Approx(std::asin(1.0 / 3.0)).margin(1e-15));
  CHECK(sol.downstream.rho == fs.rho);
  CHECK(sol.downstream.u == fs.u);
  CHECK(sol.downstream.v == fs.v);
  CHECK(sol.downstream.p == fs.p);
}

TEST_CASE("strong branch at zero deflection is the normal shock") {
  const GasModel gas{1.4, 1.0};
  const PrimitiveState fs = freestream(2.0, gas);
  const auto sol = oblique_shock(fs, 0.0, gas, ShockBranch::strong);
  CHECK(sol.beta == Catch::Approx(0.5 * pi).margin(1e-9));
  CHECK(sol.downstream.p / fs.p == Catch::Approx(4.5).margin(1e-10));
  CHECK(sol.downstream.rho / fs.rho == Catch::Approx(8.0 / 3.0).margin(1e-10));
  CHECK(sol.downstream.mach(gas) == Catch::Approx(1.0 / std::sqrt(3.0)).margin(1e-10));
}

TEST_CASE("detachment and subsonic upstream are rejected") {
  const GasModel gas{1.4, 1.0};
  CHECK_THROWS_AS(oblique_shock(freestream(2.0, gas), deg2rad(45.0), gas), validation_error);
  CHECK_THROWS_AS(oblique_shock(freestream(0.8, gas), deg2rad(5.0), gas), validation_error);
  // theta_max(M=2) is slightly below 23 degrees
  CHECK(max_deflection(2.0, gas) == Catch::Approx(deg2rad(22.973532)).margin(1e-6));
  CHECK_NOTHROW(oblique_shock(freestream(2.0, gas), deg2rad(22.9), gas));
}

TEST_CASE("weak branch monotonicity properties") {
  const GasModel gas{1.4, 1.0};
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> mach(1.2, 8.0), frac(0.05, 0.95);
  for (int k = 0; k < 200; ++k) {
    const double m = mach(rng);
    const double theta = frac(rng) * max_deflection(m, gas);
    const PrimitiveState up = freestream(m, gas);
    const auto sol = oblique_shock(up, theta, gas);
    const double g = gas.gamma;
    CHECK(sol.downstream.mach(gas) < m);
    CHECK(sol.downstream.p > up.p);
    CHECK(sol.downstream.rho > up.rho);
    CHECK(sol.downstream.p / std::pow(sol.downstream.rho, g) >
          up.p / std::pow(up.rho, g) - 1e-14);
    // shock angle between the Mach angle and 90 degrees; subsonic normal Mach behind
    CHECK(sol.beta >= std::asin(1.0 / m) - 1e-12);
    CHECK(sol.beta <= 0.5 * pi);
    const double mn2 = sol.downstream.mach(gas) * std::sin(sol.beta - theta);
    CHECK(mn2 < 1.0);
  }
}

TEST_CASE("negative deflection mirrors the positive one") {
  const GasModel gas{1.4, 1.0};
  const PrimitiveState fs = freestream(3.5, gas);
  const auto plus = oblique_shock(fs, deg2rad(12.0), gas);
  const auto minus = oblique_shock(fs, -deg2rad(12.0), gas);
  CHECK(minus.beta == plus.beta);
  CHECK(minus.downstream.rho == plus.downstream.rho);
  CHECK(minus.downstream.p == plus.downstream.p);
  CHECK(minus.downstream.u == Catch::Approx(plus.downstream.u).margin(1e-14));
  CHECK(minus.downstream.v == Catch::Approx(-plus.downstream.v).margin(1e-14));
}

TEST_CASE("Prandtl-Meyer function and inverse") {
  const GasModel gas{1.4, 1.0};
  CHECK(prandtl_meyer(1.0, gas) == 0.0);
  // nu(2) for gamma = 1.4, evaluated independently offline
  CHECK(prandtl_meyer(2.0, gas) == Catch::Approx(0.46041368208269).margin(1e-12));
  CHECK_THROWS_AS(prandtl_meyer(0.99, gas), validation_error);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> mach(1.0 + 1e-6, 10.0);
  for (int k = 0; k < 100; ++k) {
    const double m = mach(rng);
    const double back = prandtl_meyer_inverse(prandtl_meyer(m, gas), gas);
    CHECK(back == Catch::Approx(m).margin(1e-10));
  }
}

TEST_CASE("Prandtl-Meyer expansion conserves total pressure and turns the flow") {
  const GasModel gas{1.4, 1.0};
  const PrimitiveState s0 = freestream(2.0, gas);
  const double turn = deg2rad(8.0);
  const PrimitiveState s1 = prandtl_meyer_expand(s0, turn, +1.0, gas);
  CHECK(s1.flow_angle() == Catch::Approx(turn).margin(1e-12));
  CHECK(s1.p < s0.p);
  CHECK(s1.mach(gas) > s0.mach(gas));
  // isentropic: p / rho^gamma preserved
  CHECK(s1.p / std::pow(s1.rho, gas.gamma) ==
        Catch::Approx(s0.p / std::pow(s0.rho, gas.gamma)).epsilon(1e-10));
}
