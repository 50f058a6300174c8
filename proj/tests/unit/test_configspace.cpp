#include <doctest.h>

#include <cmath>
#include <complex>

#include "helpers.hpp"
#include "wc/hydrodynamics.hpp"
#include "wc/propagator.hpp"

using namespace wc;
using wc::test::pi;

TEST_SUITE("configspace") {

TEST_CASE("grid spacing and size") {
  auto g = make_grid({{-10, 10}}, {256});
  CHECK(g.spacing(0) == doctest::Approx(0.078125).epsilon(1e-15));
  CHECK(g.size() == 256);
  auto g2 = make_grid({{-10, 10}, {-10, 10}}, {128, 128});
  CHECK(g2.size() == 16384);
  CHECK(g2.cell_volume() == doctest::Approx(std::pow(20.0 / 128, 2)));
}

TEST_CASE("grid points are cell centred and row-major") {
  auto g = make_grid({{0, 8}, {0, 4}}, {8, 16});
  auto p = g.point(g.index(3, 5));
  CHECK(p[0] == doctest::Approx(3.5));
  CHECK(p[1] == doctest::Approx(5.5 * 0.25));
  auto ij = g.unravel(g.index(7, 15));
  CHECK(ij[0] == 7);
  CHECK(ij[1] == 15);
}

TEST_CASE("grid rejects degenerate input") {
  CHECK_THROWS_AS(make_grid({{0, 0}}, {64}), Error);
  CHECK_THROWS_AS(make_grid({{1, 0}}, {64}), Error);
  CHECK_THROWS_AS(make_grid({{0, 1}}, {100}), Error);
  CHECK_THROWS_AS(make_grid({{0, 1}}, {4}), Error);
  CHECK_THROWS_AS(make_grid({{0, INFINITY}}, {64}), Error);
  CHECK_THROWS_AS(make_grid({{0, 1}, {0, 1}, {0, 1}}, {8, 8, 8}), Error);
}

TEST_CASE("physics parameters are validated") {
  PhysicsParams p;
  p.hbar = 0.0;
  CHECK_THROWS_AS(p.validate(1), Error);
  p = default_params(2);
  p.masses[1] = -1.0;
  CHECK_THROWS_AS(p.validate(2), Error);
  CHECK_THROWS_AS(default_params(1).validate(2), Error);
}

TEST_CASE("normalized Gaussian has unit self overlap") {
  auto g = make_grid({{-10, 10}}, {256});
  auto psi = test::gaussian_1d(g);
  auto ip = inner_product(psi, psi);
  CHECK(std::abs(ip - cplx(1.0)) < 1e-12);
}

TEST_CASE("Gaussian overlap matches the closed form") {
  // Two sigma=1 Gaussians a distance d apart overlap by exp(-d^2/8).
  auto g = make_grid({{-16, 16}}, {512});
  auto a = test::gaussian_1d(g, -3.0);
  auto b = test::gaussian_1d(g, 3.0);
  const double expected = std::exp(-36.0 / 8.0);
  CHECK(std::abs(inner_product(a, b)) == doctest::Approx(expected).epsilon(1e-10));
  CHECK(expected == doctest::Approx(1.11e-2).epsilon(0.01));
}

TEST_CASE("inner product is conjugate symmetric and antilinear in the first slot") {
  auto g = make_grid({{-12, 12}}, {256});
  auto a = test::gaussian_1d(g, -1.0, 1.0, 0.7);
  auto b = test::gaussian_1d(g, 0.5, 1.5, -0.3);
  auto ab = inner_product(a, b), ba = inner_product(b, a);
  CHECK(std::abs(ab - std::conj(ba)) < 1e-14);
  WaveField ia = a;
  for (auto& z : ia.amp) z *= cplx(0, 1);
  auto v = inner_product(a, ia);
  CHECK(std::abs(v.real()) < 1e-14);
  CHECK(v.imag() == doctest::Approx(norm_squared(a)));
  CHECK(std::abs(inner_product(ia, a) - cplx(0, -1) * norm_squared(a)) < 1e-14);
}

TEST_CASE("inner product rejects mismatched grids") {
  auto a = test::gaussian_1d(make_grid({{-10, 10}}, {128}));
  auto b = test::gaussian_1d(make_grid({{-10, 10}}, {256}));
  CHECK_THROWS_AS(inner_product(a, b), Error);
}

TEST_CASE("Riemann-sum overlap converges to the exact value") {
  // Offset Gaussians of different widths; error relative to
  // sqrt(2 s1 s2 / (s1^2 + s2^2)) exp(-d^2 / 4(s1^2 + s2^2)).
  // On a smooth periodic integrand the midpoint rule converges at least at second order.
  const double s1 = 0.4, s2 = 0.6, d = 0.9;
  const double exact = std::sqrt(2 * s1 * s2 / (s1 * s1 + s2 * s2)) * std::exp(-d * d / (4 * (s1 * s1 + s2 * s2)));
  double prev = 0.0;
  for (std::size_t n : {16, 32, 64}) {
    auto g = make_grid({{-8, 8}}, {n});
    auto a = make_state(g, StateRecipe::gaussian({0.0}, {s1}));
    auto b = make_state(g, StateRecipe::gaussian({d}, {s2}));
    double err = std::abs(std::abs(inner_product(a, b)) - exact);
    if (prev > 1e-13) CHECK(err <= prev / 4.0);
    prev = err;
  }
}

TEST_CASE("normalize") {
  auto g = make_grid({{-10, 10}}, {256});
  auto psi = test::gaussian_1d(g);
  WaveField twice = psi;
  for (auto& z : twice.amp) z *= 2.0;
  CHECK(l2_distance(normalize(twice), psi) < 1e-12);
  auto once = normalize(psi);
  CHECK(l2_distance(normalize(once), once) < 1e-12);
  WaveField zero(g, 0.0);
  CHECK_THROWS_AS(normalize(zero), Error);
}

TEST_CASE("Gaussian recipe peak amplitude") {
  auto g = make_grid({{-10, 10}}, {256});
  auto rec = StateRecipe::gaussian({0.0}, {1.0});
  CHECK(std::abs(rec({0.0, 0.0})) == doctest::Approx(std::pow(2 * pi, -0.25)).epsilon(1e-14));
  auto psi = make_state(g, rec);
  double peak = 0.0;
  for (auto z : psi.amp) peak = std::max(peak, std::abs(z));
  // Grid points sit half a cell off the origin.
  const double x = 0.5 * g.spacing(0);
  CHECK(peak == doctest::Approx(std::pow(2 * pi, -0.25) * std::exp(-x * x / 4)).epsilon(1e-13));
}

TEST_CASE("harmonic ground state is the sigma^2 = 1/2 Gaussian") {
  auto g = make_grid({{-8, 8}}, {256});
  auto ho = make_state(g, StateRecipe::harmonic_eigenstate({0}, 1.0, {0.0}));
  auto gs = make_state(g, StateRecipe::gaussian({0.0}, {std::sqrt(0.5)}));
  CHECK(std::abs(std::abs(inner_product(ho, gs)) - 1.0) < 1e-12);
  PhysicsParams p;
  p.potential = HarmonicPotential{1.0, {0, 0}};
  auto store = evolve(ho, p, 0.01, 100, 100);
  CHECK(std::abs(std::abs(inner_product(store.frames.back(), ho)) - 1.0) < 1e-10);
}

TEST_CASE("harmonic excited states are orthonormal") {
  auto g = make_grid({{-10, 10}}, {256});
  std::vector<WaveField> s;
  for (int n = 0; n < 4; ++n) s.push_back(make_state(g, StateRecipe::harmonic_eigenstate({n}, 1.0, {0.0})));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      CHECK(std::abs(inner_product(s[a], s[b]) - cplx(a == b ? 1.0 : 0.0)) < 1e-10);
}

TEST_CASE("vortex phase winds once around the core") {
  auto rec = StateRecipe::vortex({0.5, -0.25}, 1.0, 1);
  double total = 0.0;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    double t0 = 2 * pi * i / n, t1 = 2 * pi * (i + 1) / n;
    auto z0 = rec({0.5 + std::cos(t0), -0.25 + std::sin(t0)});
    auto z1 = rec({0.5 + std::cos(t1), -0.25 + std::sin(t1)});
    total += std::arg(z1 / z0);
  }
  CHECK(total / (2 * pi) == doctest::Approx(1.0).epsilon(1e-12));
  auto g = make_grid({{-8, 8}, {-8, 8}}, {64, 64});
  CHECK(norm(make_state(g, rec)) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("make_state enforces the boundary margin") {
  auto g = make_grid({{-10, 10}}, {256});
  CHECK_NOTHROW(make_state(g, StateRecipe::gaussian({5.0}, {1.0})));
  CHECK_THROWS_AS(make_state(g, StateRecipe::gaussian({7.0}, {1.0})), Error);
  CHECK_THROWS_AS(make_state(g, StateRecipe::plane_wave({1.0})), Error);
  CHECK_NOTHROW(make_state(g, StateRecipe::plane_wave({2 * pi / 20 * 3})));
  CHECK_THROWS_AS(make_state(make_grid({{-8, 8}, {-8, 8}}, {32, 32}), StateRecipe::gaussian({0.0}, {1.0})), Error);
}

TEST_CASE("superposition weights") {
  auto g = make_grid({{-16, 16}}, {512});
  auto rec = StateRecipe::superposition({{std::sqrt(0.3), StateRecipe::gaussian({-6.0}, {1.0})},
                                         {std::sqrt(0.7), StateRecipe::gaussian({6.0}, {1.0})}});
  auto psi = make_state(g, rec);
  // Cross term 2 sqrt(0.21) exp(-144/8) is negligible.
  CHECK(norm_squared(psi) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("product state separates") {
  auto g = make_grid({{-8, 8}, {-6, 6}}, {64, 64});
  auto rec = StateRecipe::product(StateRecipe::gaussian({1.0}, {1.0}), StateRecipe::gaussian({-1.0}, {0.8}));
  auto psi = make_state(g, rec);
  auto q = g.point(g.index(20, 40));
  cplx expect = StateRecipe::gaussian({1.0}, {1.0})({q[0], 0}) * StateRecipe::gaussian({-1.0}, {0.8})({q[1], 0});
  CHECK(std::abs(psi.amp[g.index(20, 40)] - expect) < 1e-15);
}

TEST_CASE("integrate is a Riemann sum") {
  auto g = make_grid({{0, 2}}, {8});
  std::vector<double> ones(8, 1.0);
  CHECK(integrate(g, ones) == doctest::Approx(2.0));
  CHECK_THROWS_AS(integrate(g, std::vector<double>(4, 1.0)), Error);
}

}  // TEST_SUITE
