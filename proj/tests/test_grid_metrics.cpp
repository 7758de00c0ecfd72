#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <random>

#include <numbers>

#include "psv/field_io.hpp"
#include "psv/grid.hpp"
#include "psv/metrics.hpp"

using namespace psv;

namespace {

GridFunction random_field(const Grid& g, int ncomp, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  GridFunction f(g, ncomp);
  for (double& v : f.values) v = dist(rng);
  return f;
}

// Independent brute-force inner product: plain double loops over cells and
// components, no shortcuts shared with the implementation.
double brute_dot(const GridFunction& f, const GridFunction& g, ComponentMask mask,
                 bool weighted) {
  double acc = 0.0;
  for (int j = 0; j < f.grid.ny; ++j)
    for (int i = 0; i < f.grid.nx; ++i)
      for (int c = 0; c < f.ncomp; ++c)
        if (mask.contains(c)) acc += f(i, j, c) * g(i, j, c);
  return weighted ? acc * f.grid.hx() * f.grid.hy() : acc;
}

} // namespace

TEST_CASE("make_grid basics and validation") {
  const Grid g1 = make_unit_grid(1, 1);
  CHECK(g1.xc(0) == Catch::Approx(0.5));
  CHECK(g1.yc(0) == Catch::Approx(0.5));

  const Grid g100 = make_unit_grid(100, 100);
  CHECK(g100.hx() == Catch::Approx(0.01).epsilon(1e-15));
  CHECK(g100.hy() == Catch::Approx(0.01).epsilon(1e-15));

  const Grid g400 = make_unit_grid(400, 400);
  CHECK(g400.hx() == Catch::Approx(0.0025).epsilon(1e-15));

  CHECK_THROWS_AS(make_grid(0, 5, 0, 1, 0, 1), validation_error);
  CHECK_THROWS_AS(make_grid(5, -1, 0, 1, 0, 1), validation_error);
  CHECK_THROWS_AS(make_grid(5, 5, 1, 1, 0, 1), validation_error);
  CHECK_THROWS_AS(make_grid(5, 5, 0, 1, 2, 1), validation_error);
}

TEST_CASE("l2 norm: zero, constant, brute force") {
  const Grid g = make_unit_grid(10, 10);
  NormOptions all1{ComponentMask::first_n(1), true};

  GridFunction zero(g, 1);
  CHECK(l2_norm(zero, all1) == 0.0);

  GridFunction c3(g, 1, -3.0);
  CHECK(l2_norm(c3, all1) == Catch::Approx(3.0).epsilon(1e-14));

  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const GridFunction f = random_field(g, 1, rng);
    const double expect = std::sqrt(brute_dot(f, f, all1.mask, true));
    CHECK(l2_norm(f, all1) == Catch::Approx(expect).margin(1e-13));
  }
}

TEST_CASE("dot: definition, zero, brute force, errors") {
  const Grid g = make_unit_grid(7, 9);
  NormOptions opt{ComponentMask::first_n(3), true};
  std::mt19937_64 rng(7);
  const GridFunction f = random_field(g, 3, rng);
  const GridFunction h = random_field(g, 3, rng);
  GridFunction zero(g, 3);

  CHECK(dot(f, f, opt) == Catch::Approx(l2_norm(f, opt) * l2_norm(f, opt)).margin(1e-13));
  CHECK(dot(f, zero, opt) == 0.0);
  CHECK(dot(f, h, opt) == Catch::Approx(brute_dot(f, h, opt.mask, true)).margin(1e-13));

  const GridFunction other = random_field(make_unit_grid(7, 8), 3, rng);
  CHECK_THROWS_AS(dot(f, other, opt), validation_error);
  CHECK_THROWS_AS(dot(f, f, NormOptions{ComponentMask{0}, true}), validation_error);
  CHECK_THROWS_AS(dot(f, f, NormOptions{ComponentMask::single(3), true}), validation_error);
}

TEST_CASE("distance: identity, symmetry, triangle inequality, brute force") {
  const Grid g = make_unit_grid(8, 6);
  NormOptions opt{ComponentMask::first_n(2), true};
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const GridFunction a = random_field(g, 2, rng);
    const GridFunction b = random_field(g, 2, rng);
    const GridFunction c = random_field(g, 2, rng);
    CHECK(distance(a, a, opt) == 0.0);
    CHECK(distance(a, b, opt) == Catch::Approx(distance(b, a, opt)).margin(1e-15));
    const GridFunction diff = subtract(a, b);
    CHECK(distance(a, b, opt) ==
          Catch::Approx(std::sqrt(brute_dot(diff, diff, opt.mask, true))).margin(1e-13));
    CHECK(distance(a, c, opt) <= distance(a, b, opt) + distance(b, c, opt) + 1e-12);
  }
}

TEST_CASE("angle_between: endpoints, orthogonal supports, scaling invariance") {
  const Grid g = make_unit_grid(6, 6);
  NormOptions opt{ComponentMask::first_n(1), true};
  std::mt19937_64 rng(3);
  const GridFunction f = random_field(g, 1, rng);

  CHECK(angle_between(f, f, opt) == Catch::Approx(0.0).margin(1e-7));
  CHECK(angle_between(f, scaled(f, -1.0), opt) == Catch::Approx(std::numbers::pi).margin(1e-7));

  GridFunction a(g, 1), b(g, 1);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      (i < g.nx / 2 ? a : b)(i, j, 0) = 1.0 + i + j;
  CHECK(angle_between(a, b, opt) == Catch::Approx(0.5 * std::numbers::pi).margin(1e-14));

  const GridFunction h = random_field(g, 1, rng);
  const double base = angle_between(f, h, opt);
  CHECK(angle_between(scaled(f, 17.0), h, opt) == Catch::Approx(base).margin(1e-13));
  CHECK(angle_between(f, scaled(h, 0.03), opt) == Catch::Approx(base).margin(1e-13));

  GridFunction zero(g, 1);
  CHECK_THROWS_AS(angle_between(f, zero, opt), validation_error);
}

TEST_CASE("metric properties on random inputs") {
  const Grid g = make_unit_grid(9, 5);
  NormOptions opt{ComponentMask::first_n(4), true};
  std::mt19937_64 rng(19937);
  for (int trial = 0; trial < 100; ++trial) {
    const GridFunction f = random_field(g, 4, rng, 2.0);
    const GridFunction h = random_field(g, 4, rng, 2.0);
    // Cauchy-Schwarz
    CHECK(std::abs(dot(f, h, opt)) <= l2_norm(f, opt) * l2_norm(h, opt) + 1e-12);
    // norm scaling
    CHECK(l2_norm(scaled(f, -2.5), opt) ==
          Catch::Approx(2.5 * l2_norm(f, opt)).margin(1e-13));
  }
}

TEST_CASE("unweighted norm variant") {
  const Grid g = make_unit_grid(5, 4);
  std::mt19937_64 rng(5);
  const GridFunction f = random_field(g, 1, rng);
  const NormOptions w{ComponentMask::first_n(1), true};
  const NormOptions uw{ComponentMask::first_n(1), false};
  CHECK(l2_norm(f, w) ==
        Catch::Approx(l2_norm(f, uw) * std::sqrt(g.cell_measure())).margin(1e-13));
}

TEST_CASE("PSFIELD round trip is bit exact") {
  const Grid g = make_grid(13, 7, -0.25, 1.75, 0.125, 0.875);
  std::mt19937_64 rng(99);
  GridFunction f = random_field(g, 4, rng, 1e3);
  f.values[0] = 0.0;
  f.values[1] = -0.0;
  f.values[2] = 1e-308;
  f.values[3] = -1.234567890123456e180;

  const auto path = std::filesystem::temp_directory_path() / "psv_roundtrip.psfield";
  write_psfield(path, f);
  const GridFunction back = read_psfield(path);

  REQUIRE(back.grid == f.grid);
  REQUIRE(back.ncomp == f.ncomp);
  REQUIRE(back.values.size() == f.values.size());
  CHECK(std::memcmp(back.values.data(), f.values.data(),
                    f.values.size() * sizeof(double)) == 0);
  std::filesystem::remove(path);
}
