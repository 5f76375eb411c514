#include <cmath>
#include <doctest.h>
#include <random>

#include "oracles.hpp"
#include "sispace/analysis.hpp"
#include "sispace/fibercore.hpp"
#include "sispace/generators.hpp"
#include "sispace/orthogonalizer.hpp"

using namespace sispace;

namespace {

FiberedFunction single_row(const GridSpec& grid, int k, Complex c) {
  FiberedFunction f(grid);
  for (int i = 0; i < grid.fibers; ++i) f.at(i, k) = c;
  return f;
}

FiberedFunction span_element(std::mt19937_64& rng,
                             const std::vector<FiberedFunction>& G,
                             int degree = 3) {
  ShiftCoeffs coeffs;
  for (size_t j = 0; j < G.size(); ++j)
    coeffs.per_generator.push_back(oracles::random_trig_poly(rng, degree));
  return synthesize(coeffs, G);
}

}  // namespace

TEST_CASE("projection fixes elements of the span") {
  const GridSpec grid = make_grid(64, 8);
  std::mt19937_64 rng(2001);
  for (int rep = 0; rep < 4; ++rep) {
    const std::vector<FiberedFunction> G =
        oracles::random_system(grid, 3, 2100 + std::uint64_t(rep));
    const FiberedFunction f = span_element(rng, G);
    const FiberedFunction p = project(f, G);
    CHECK(max_abs(subtract(p, f)) <= 1e-9 * std::max(l2_norm(f), 1e-300));
  }
}

TEST_CASE("projection kills directions outside the span exactly") {
  const GridSpec grid = make_grid(32, 4);
  const std::vector<FiberedFunction> G = {single_row(grid, 0, Complex(1, 0)),
                                          single_row(grid, 1, Complex(2, 1))};
  // lives on a translate row no generator touches; every bracket vanishes
  const FiberedFunction f = single_row(grid, 3, Complex(0.5, -2.0));
  CHECK(max_abs(project(f, G)) == 0.0);
}

TEST_CASE("single-generator oracle equals the explicit quotient formula") {
  const GridSpec grid = make_grid(48, 6);
  const FiberedFunction phi =
      build_generator(GeneratorSpec::bandlimited_random(2200, 4.0), grid);
  const FiberedFunction f = oracles::random_fibered(grid, 2201);
  const QuotientResult c = periodic_quotient(bracket(f, phi), bracket(phi, phi));
  const FiberedFunction manual = pointwise_multiply(c.value, phi);
  const FiberedFunction oracle = project_oracle(f, {phi});
  CHECK(max_abs(subtract(manual, oracle)) <=
        1e-10 * std::max(l2_norm(f), 1e-300));
}

TEST_CASE("projection properties hold across sizes and seeds") {
  std::uint64_t seed = 2300;
  for (int fibers : {32, 64}) {
    const GridSpec grid = make_grid(fibers, 8);
    for (int n : {2, 3, 4}) {
      for (int rep = 0; rep < 2; ++rep) {
        const std::vector<FiberedFunction> G =
            oracles::random_system(grid, n, seed);
        const FiberedFunction f = oracles::random_fibered(grid, seed + 7000);
        const FiberedFunction u = oracles::random_fibered(grid, seed + 8000);
        seed += 13;

        const FiberedFunction pf = project(f, G);
        const FiberedFunction pu = project(u, G);
        const double nf = l2_norm(f);
        const double nu = l2_norm(u);

        // two routes to the same projection
        CHECK(max_abs(subtract(pf, project_oracle(f, G))) <=
              1e-8 * std::max(nf, 1e-300));
        // P P f = P f
        CHECK(max_abs(subtract(project(pf, G), pf)) <=
              1e-9 * std::max(nf, 1e-300));
        // <P f, u> = <f, P u>
        CHECK(std::abs(inner(pf, u) - inner(f, pu)) <=
              1e-10 * std::max(nf * nu, 1e-300));
        // ||P f|| <= ||f||
        CHECK(l2_norm(pf) <= nf * (1.0 + 1e-12));
      }
    }
  }
}

TEST_CASE("dual coefficients of a generator in an orthogonal pair") {
  const GridSpec grid = make_grid(24, 4);
  const std::vector<FiberedFunction> G = {single_row(grid, 0, Complex(1, 0)),
                                          single_row(grid, 2, Complex(0, 1))};
  const CoeffSet cs = dual_coefficients(G[0], G);
  REQUIRE(cs.m.size() == 2);
  for (int i = 0; i < grid.fibers; ++i) {
    CHECK(cs.m[0][i] == Complex(1, 0));
    CHECK(cs.m[1][i] == Complex(0, 0));
  }
  CHECK(cs.minimal[0]);
  CHECK(cs.minimal[1]);
  CHECK_FALSE(cs.zero_mask[0].any());

  const FiberedFunction back = reconstruct(cs, G);
  CHECK(max_abs(subtract(back, G[0])) == 0.0);
  CHECK(std::abs(bessel_gap(G[0], cs)) <= 1e-15);
}

TEST_CASE("dual coefficients of the zero function vanish") {
  const GridSpec grid = make_grid(32, 5);
  const std::vector<FiberedFunction> G = oracles::random_system(grid, 3, 2400);
  const CoeffSet cs = dual_coefficients(FiberedFunction(grid), G);
  for (const auto& m : cs.m) CHECK(max_abs(m) == 0.0);
  for (double w : cs.weighted_norms) CHECK(w == 0.0);
  CHECK(bessel_gap(FiberedFunction(grid), cs) == 0.0);
}

TEST_CASE("dual coefficients recover synthesis polynomials") {
  const GridSpec grid = make_grid(64, 8);
  std::mt19937_64 rng(13);
  const std::vector<FiberedFunction> G = oracles::random_system(grid, 3, 2500);
  ShiftCoeffs coeffs;
  for (int j = 0; j < 3; ++j)
    coeffs.per_generator.push_back(oracles::random_trig_poly(rng, 3));
  const FiberedFunction f = synthesize(coeffs, G);
  const double nf = l2_norm(f);

  const CoeffSet cs = dual_coefficients(f, G);
  for (size_t j = 0; j < 3; ++j) {
    const PeriodicFunction want =
        trig_poly_on_grid(coeffs.per_generator[j], grid);
    double worst = 0.0;
    for (int i = 0; i < grid.fibers; ++i)
      worst = std::max(worst, std::abs(cs.m[j][i] - want[i]));
    CHECK(worst <= 1e-8 * std::max(nf, 1e-300));
  }

  const FiberedFunction back = reconstruct(cs, G);
  CHECK(max_abs(subtract(back, f)) <= 1e-8 * std::max(nf, 1e-300));
}

TEST_CASE("reconstruct validates coefficient count and grids") {
  const GridSpec grid = make_grid(16, 4);
  const std::vector<FiberedFunction> G = oracles::random_system(grid, 2, 2600);
  CoeffSet cs = dual_coefficients(oracles::random_fibered(grid, 2601), G);
  cs.m.pop_back();
  CHECK_THROWS_AS(reconstruct(cs, G), ShapeError);
}

TEST_CASE("bessel gap of an overlapping pair matches its closed form") {
  const GridSpec grid = make_grid(128, 8);
  const FiberedFunction b0 = build_generator(GeneratorSpec::bspline(0), grid);
  const FiberedFunction b1 = build_generator(GeneratorSpec::bspline(1), grid);
  const std::vector<FiberedFunction> G = {b0, b1};

  // f = phi_1: in the span, so the whole gap is the cross-energy term
  const CoeffSet cs = dual_coefficients(b0, G);
  const double gap = bessel_gap(b0, cs);
  CHECK(gap > 0.0);

  const PeriodicFunction W1 = bracket(b1, b1);
  const PeriodicFunction X = bracket(b0, b1);
  double expected = 0.0;
  for (int i = 0; i < grid.fibers; ++i)
    expected += std::norm(X[i]) / W1[i].real();
  expected /= grid.fibers;
  const double nf = l2_norm(b0);
  CHECK(std::abs(gap - expected) <= 1e-12 * nf * nf);
}

TEST_CASE("bessel gap sign tracks the overlap geometry") {
  // dense signals whose energy mostly falls outside the span: firmly positive
  std::uint64_t seed = 2700;
  for (int n : {2, 3, 4}) {
    const GridSpec grid = make_grid(64, 8);
    const std::vector<FiberedFunction> G =
        oracles::random_system(grid, n, seed);
    const FiberedFunction f = oracles::random_fibered(grid, seed + 50);
    seed += 9;
    const CoeffSet cs = dual_coefficients(f, G);
    const double nf = l2_norm(f);
    CHECK(bessel_gap(f, cs) > 0.5 * nf * nf);
  }

  // the gap is not one-sided: residual directions of an overlapping system
  // are not mutually orthogonal, so adversely phased in-span coefficients
  // push the coefficient energy past ||f||^2. Unit-weight pair with
  // cross-bracket -1/2 and f = phi_1 + phi_2 lands at exactly -||f||^2 / 2
  // while the round trip stays exact.
  const GridSpec grid = make_grid(8, 2);
  FiberedFunction p1(grid);
  FiberedFunction p2(grid);
  for (int i = 0; i < grid.fibers; ++i) {
    p1.at(i, 0) = 1.0;
    p2.at(i, 0) = -0.5;
    p2.at(i, 1) = std::sqrt(3.0) / 2.0;
  }
  const FiberedFunction f = add(p1, p2);
  const CoeffSet cs = dual_coefficients(f, {p1, p2});
  const double nf2 = l2_norm(f) * l2_norm(f);
  CHECK(l2_norm(subtract(f, reconstruct(cs, {p1, p2}))) <= 1e-14);
  CHECK(bessel_gap(f, cs) == doctest::Approx(-0.5 * nf2).epsilon(1e-12));
}

TEST_CASE("residual weights shrink as the system grows") {
  const GridSpec grid = make_grid(64, 8);
  const std::vector<FiberedFunction> all =
      oracles::random_system(grid, 4, 2800);
  std::vector<FiberedFunction> G = {all[0], all[1]};
  PeriodicFunction prev =
      bracket(residual_generator(G, 0), residual_generator(G, 0));
  const double scale = max_real(bracket(all[0], all[0]));
  for (int n = 3; n <= 4; ++n) {
    G.push_back(all[size_t(n - 1)]);
    const FiberedFunction h = residual_generator(G, 0);
    const PeriodicFunction next = bracket(h, h);
    for (int i = 0; i < grid.fibers; ++i)
      CHECK(next[i].real() <= prev[i].real() + 1e-11 * scale);
    prev = next;
  }
}

TEST_CASE("lift of an orthogonal system is exactly zero") {
  const GridSpec grid = make_grid(16, 3);
  const std::vector<FiberedFunction> G = {single_row(grid, 0, Complex(1, 0)),
                                          single_row(grid, 2, Complex(3, 0))};
  const PeriodicFunction m = PeriodicFunction::constant(grid, Complex(2, 1));
  CHECK(max_abs(lift(m, 0, G)) == 0.0);
  CHECK(max_abs(lift(PeriodicFunction(grid), 1, G)) == 0.0);
}

TEST_CASE("lift moves a coefficient from a generator to its residual") {
  const GridSpec grid = make_grid(64, 8);
  std::mt19937_64 rng(2900);
  for (int n : {2, 3}) {
    const std::vector<FiberedFunction> G =
        oracles::random_system(grid, n, 2950 + std::uint64_t(n));
    const PeriodicFunction m =
        trig_poly_on_grid(oracles::random_trig_poly(rng, 4), grid);
    for (size_t j = 0; j < size_t(n); ++j) {
      const FiberedFunction psi = lift(m, j, G);
      const FiberedFunction h = residual_generator(G, j);
      const double scale = std::max(
          {max_abs(pointwise_multiply(m, G[j])), max_abs(psi), 1e-300});

      // m . phi_j + psi = m . h_j
      const FiberedFunction left =
          add(pointwise_multiply(m, G[j]), psi);
      CHECK(max_abs(subtract(left, pointwise_multiply(m, h))) <=
            1e-14 * scale);

      // psi lies in the span of the others
      std::vector<FiberedFunction> others;
      for (size_t l = 0; l < size_t(n); ++l)
        if (l != j) others.push_back(G[l]);
      CHECK(max_abs(subtract(project(psi, others), psi)) <=
            1e-9 * std::max(l2_norm(psi), 1e-300));
    }
  }
}

TEST_CASE("analysis entry points demand at least two generators") {
  const GridSpec grid = make_grid(16, 3);
  const FiberedFunction phi = oracles::random_fibered(grid, 3000);
  const PeriodicFunction m = PeriodicFunction::constant(grid, Complex(1, 0));
  CHECK_THROWS_AS(dual_coefficients(phi, {phi}), ConfigError);
  CHECK_THROWS_AS(lift(m, 0, {phi}), ConfigError);
  CHECK_THROWS_AS(lift(m, 5, {phi, phi}), ConfigError);
}
