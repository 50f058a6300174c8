#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "wc/hydrodynamics.hpp"
#include "wc/measure.hpp"
#include "wc/propagator.hpp"

using namespace wc;
using wc::test::pi;

TEST_SUITE("measure") {

TEST_CASE("substantial amounts of a unit Gaussian") {
  auto g = make_grid({{-16, 16}}, {1024});
  auto rho = density(test::gaussian_1d(g));
  CHECK(substantial_amount(rho, Region::full(g)) == doctest::Approx(1.0).epsilon(1e-12));
  // Cell edges fall on +-1, so membership by cell centre is exact there.
  CHECK(std::abs(substantial_amount(rho, Region(g, {{{-1, 1}}})) - std::erf(1.0 / std::sqrt(2.0))) < 1e-4);
  CHECK(substantial_amount(rho, Region(g, {{{3, 3}}})) == 0.0);
}

TEST_CASE("additivity and monotonicity") {
  auto g = make_grid({{-10, 10}}, {256});
  auto rho = density(test::gaussian_1d(g, 0.3, 1.4));
  Region a(g, {{{-4, -1}}}), b(g, {{{0.5, 2}}}), ab(g, {{{-4, -1}}, {{0.5, 2}}});
  CHECK(substantial_amount(rho, ab) == doctest::Approx(substantial_amount(rho, a) + substantial_amount(rho, b)).epsilon(1e-15));
  Region big(g, {{{-5, 3}}});
  CHECK(substantial_amount(rho, ab) <= substantial_amount(rho, big));
  Region overlap(g, {{{-4, 0}}, {{-2, 2}}});
  CHECK(substantial_amount(rho, overlap) == doctest::Approx(substantial_amount(rho, Region(g, {{{-4, 2}}}))).epsilon(1e-15));
}

TEST_CASE("world probability") {
  auto g = make_grid({{-10, 10}}, {256});
  auto psi = test::gaussian_1d(g);
  auto rho = density(psi);
  CHECK(world_probability(rho, Region::full(g)) == 1.0);
  CHECK(std::abs(world_probability(rho, Region(g, {{{0, 10}}})) - 0.5) < 1e-6);
  auto scaled = rho;
  for (auto& r : scaled) r *= 4.0;
  Region q(g, {{{-0.7, 2.1}}});
  CHECK(std::abs(world_probability(scaled, q) - world_probability(rho, q)) < 1e-12);
  auto rep = amount_report(scaled, q);
  CHECK(rep.raw == doctest::Approx(4.0 * substantial_amount(rho, q)));
  CHECK(rep.proportion == doctest::Approx(world_probability(rho, q)));
  CHECK_THROWS_AS(world_probability(std::vector<double>(g.size(), 0.0), q), Error);
}

TEST_CASE("regions outside the grid are rejected by name") {
  auto g = make_grid({{-10, 10}}, {256});
  try {
    Region r(g, {{{5, 12}}}, "beyond");
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("beyond") != std::string::npos);
  }
  CHECK_THROWS_AS(Region(g, {{{0, 1}, {0, 1}}}), Error);
}

TEST_CASE("substantial flow of a plane wave") {
  auto g = make_grid({{-pi, pi}, {-pi, pi}}, {32, 32});
  auto psi = make_state(g, StateRecipe::plane_wave({2.0, 0.0}));
  auto j = current(psi, default_params(2));
  // The transverse extent spans 16 whole cells.
  Surface s{0, 0.0, +1, {-pi / 2, pi / 2}};
  const double nu = substantial_flow(g, j, s);
  CHECK(nu == doctest::Approx(2.0 * pi).epsilon(1e-10));
  s.orientation = -1;
  CHECK(substantial_flow(g, j, s) == -nu);

  auto g1 = make_grid({{-pi, pi}}, {32});
  auto j1 = current(make_state(g1, StateRecipe::plane_wave({3.0}, 0.5)), PhysicsParams{});
  CHECK(substantial_flow(g1, j1, Surface{0, 0.3, +1}) == doctest::Approx(0.25 * 3.0).epsilon(1e-10));
  CHECK_THROWS_AS(substantial_flow(g1, j1, Surface{0, 9.0, +1}), Error);
}

TEST_CASE("flow through a surface equals the rate of change of the amount beyond it") {
  auto g = make_grid({{-16, 16}}, {512});
  auto store = evolve(test::gaussian_1d(g, 0.0, 1.0, 1.0), PhysicsParams{}, 1e-3, 2000, 20);
  const double a = 1.0;
  Region beyond(g, {{{a, 16}}});
  double max_rel = 0.0;
  for (std::size_t k = 1; k + 1 < store.size(); ++k) {
    const double dmu = (substantial_amount(density(store.frames[k + 1]), beyond) -
                        substantial_amount(density(store.frames[k - 1]), beyond)) /
                       (2 * store.dt_frame);
    const double nu = substantial_flow(g, current(store.frames[k], store.params), Surface{0, a, +1});
    max_rel = std::max(max_rel, std::abs(dmu - nu) / std::abs(nu));
  }
  CHECK(max_rel < 0.02);
}

TEST_CASE("toy model x -> x^2 on the unit interval") {
  LatticeDensity rho{Axis{0.0, 1.0, 1000}, std::vector<double>(1000, 1.0)};
  Map1D f;
  f.forward = [](double x) { return x * x; };
  for (double a : {0.04, 0.25, 0.81}) CHECK(std::abs(pushforward_measure(rho, f, 0.0, a) - std::sqrt(a)) < 1e-6);
  for (double y : {0.01, 0.25, 0.5, 1.0}) CHECK(std::abs(induced_density(rho, f, y) - 1.0 / (2 * std::sqrt(y))) < 1e-3);
  CHECK(induced_density(rho, f, 0.25) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("identity map preserves measure") {
  std::vector<double> v(64);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.5 * std::sin(0.3 * static_cast<double>(i));
  LatticeDensity rho{Axis{-2.0, 2.0, 64}, v};
  Map1D id;
  id.forward = [](double x) { return x; };
  id.inverse = [](double y) { return y; };
  CHECK(pushforward_measure(rho, id, -0.7, 1.3) == doctest::Approx(rho.integrate(-0.7, 1.3)).epsilon(1e-14));
}

TEST_CASE("non-monotone maps need a preimage") {
  LatticeDensity rho{Axis{-1.0, 1.0, 200}, std::vector<double>(200, 0.5)};
  Map1D sq;
  sq.forward = [](double x) { return x * x; };
  sq.monotone = false;
  CHECK_THROWS_AS(pushforward_measure(rho, sq, 0.0, 0.25), Error);
  sq.preimage = [](double lo, double hi) {
    double a = std::sqrt(std::max(lo, 0.0)), b = std::sqrt(hi);
    return std::vector<std::pair<double, double>>{{-b, -a}, {a, b}};
  };
  CHECK(pushforward_measure(rho, sq, 0.0, 0.25) == doctest::Approx(0.5).epsilon(1e-12));
  Map1D missing;
  CHECK_THROWS_AS(pushforward_measure(rho, missing, 0.0, 1.0), Error);
}

TEST_CASE("lattice density integrates partial cells exactly") {
  LatticeDensity rho{Axis{0.0, 4.0, 4}, {1.0, 2.0, 3.0, 4.0}};
  CHECK(rho.integrate(0.5, 2.25) == doctest::Approx(0.5 + 2.0 + 0.75));
  CHECK(rho.at(3.5) == 4.0);
}

TEST_CASE("co-moving regions keep their amount") {
  auto g = make_grid({{-16, 16}}, {512});
  auto store = evolve(test::gaussian_1d(g), PhysicsParams{}, 1e-3, 2000, 2000);
  // Free spreading maps [a, b] to sqrt(2) [a, b] at t = 2.
  const double a = -0.5, b = 1.5, s = std::sqrt(2.0);
  const double mu0 = std::erf(b / std::sqrt(2.0)) / 2 - std::erf(a / std::sqrt(2.0)) / 2;
  LatticeDensity rt{g.axis(0), density(store.frames.back())};
  CHECK(std::abs(rt.integrate(s * a, s * b) - mu0) < 1e-3);
}

}  // TEST_SUITE
