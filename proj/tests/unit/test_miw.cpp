#include <doctest.h>

#include <cmath>
#include <cstring>

#include "helpers.hpp"
#include "wc/hydrodynamics.hpp"
#include "wc/measure.hpp"
#include "wc/miw.hpp"
#include "wc/propagator.hpp"
#include "wc/worlds.hpp"

using namespace wc;
using wc::test::pi;

namespace {

PhysicsParams harmonic() {
  PhysicsParams p;
  p.potential = HarmonicPotential{1.0, {0, 0}};
  return p;
}

const FrameStore& free_store() {
  static const FrameStore s = [] {
    auto g = make_grid({{-16, 16}}, {512});
    return evolve(test::gaussian_1d(g), PhysicsParams{}, 1e-3, 2000, 10);
  }();
  return s;
}

const FrameStore& vortex_store() {
  static const FrameStore s = [] {
    auto g = make_grid({{-8, 8}, {-8, 8}}, {128, 128});
    PhysicsParams p = default_params(2);
    p.potential = HarmonicPotential{1.0, {0, 0}};
    return evolve(make_state(g, StateRecipe::vortex({0, 0}, std::sqrt(0.5), 1)), p, 0.01, 10, 10);
  }();
  return s;
}

}  // namespace

TEST_SUITE("miw") {

TEST_CASE("world sampling") {
  auto g = make_grid({{0, 1}}, {64});
  std::vector<double> uniform(64, 1.0);
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    auto w = sample_worlds(g, uniform, 4, seed);
    REQUIRE(w.size() == 4);
    for (const auto& p : w) CHECK((p[0] >= 0.0 && p[0] < 1.0));
  }
  auto g2 = make_grid({{-10, 10}}, {512});
  auto rho = density(test::gaussian_1d(g2));
  auto w = sample_worlds(g2, rho, 10000, 17);
  double mean = 0.0;
  for (const auto& p : w) mean += p[0];
  CHECK(std::abs(mean / 1e4) < 4.0 / std::sqrt(1e4));
  auto again = sample_worlds(g2, rho, 10000, 17);
  CHECK(std::memcmp(w.data(), again.data(), w.size() * sizeof(Point)) == 0);
  CHECK_THROWS_AS(sample_worlds(g2, rho, 1, 0), Error);
  CHECK_THROWS_AS(sample_worlds(g2, std::vector<double>(512, 0.0), 10, 0), Error);
}

TEST_CASE("Newtonian worlds start with the Bohm velocity") {
  auto initials = linspace_seeds(-3, 3, 21);
  auto ens = newtonian_trajectories(free_store(), initials, 1e-3);
  const auto series = FieldSeries::velocity(free_store());
  for (std::size_t w = 0; w < initials.size(); ++w) {
    auto v = series.sample(initials[w], 0.0);
    REQUIRE(v.has_value());
    CHECK(std::abs(ens.velocities.front()[w][0] - (*v)[0]) < 1e-8);
  }
  CHECK(ens.K == 21);
  CHECK(ens.positions.size() == free_store().size());
}

TEST_CASE("Newtonian free Gaussian follows the spreading oracle") {
  auto initials = linspace_seeds(-3, 3, 31);
  auto ens = newtonian_trajectories(free_store(), initials, 1e-3);
  for (std::size_t k = 0; k < ens.times.size(); ++k)
    for (std::size_t w = 0; w < initials.size(); ++w)
      CHECK(std::abs(ens.positions[k][w][0] - initials[w][0] * test::free_sigma(1.0, ens.times[k])) < 1e-3);
}

TEST_CASE("Newtonian and first-order trajectories agree") {
  auto initials = linspace_seeds(-2.5, 2.5, 41);
  auto ens = newtonian_trajectories(free_store(), initials, 1e-3);
  auto bundle = trajectory_function(free_store(), initials, 1e-3);
  double dev = 0.0;
  for (std::size_t w = 0; w < initials.size(); ++w)
    for (std::size_t k = 0; k < ens.times.size(); ++k)
      dev = std::max(dev, std::abs(ens.positions[k][w][0] - bundle.trajectories[w].samples[k].q[0]));
  CHECK(dev < 1e-3);
}

TEST_CASE("harmonic ground state worlds feel no force") {
  auto g = make_grid({{-8, 8}}, {256});
  auto store = evolve(make_state(g, StateRecipe::harmonic_eigenstate({0}, 1.0, {0.0})), harmonic(), 1e-3, 1000, 10);
  auto force = quantum_force_series(store);
  for (double q : {-2.0, 0.3, 1.5}) {
    auto f = force.sample({q, 0.0}, 0.5);
    REQUIRE(f.has_value());
    CHECK(std::abs((*f)[0]) < 1e-6);
  }
  auto ens = newtonian_trajectories(store, linspace_seeds(-2, 2, 9), 1e-3);
  for (std::size_t w = 0; w < 9; ++w) CHECK(std::abs(ens.final_positions()[w][0] - ens.positions[0][w][0]) < 1e-6);
}

TEST_CASE("plane wave worlds move uniformly without force") {
  auto g = make_grid({{-8 * pi, 8 * pi}}, {256});
  auto store = evolve(make_state(g, StateRecipe::plane_wave({2.0})), PhysicsParams{}, 0.01, 200, 10);
  auto force = quantum_force_series(store);
  for (double q : {-3.0, 0.0, 5.0}) CHECK(std::abs((*force.sample({q, 0.0}, 1.0))[0]) < 1e-10);
  auto ens = newtonian_trajectories(store, {{-10.0, 0.0}, {0.0, 0.0}}, 0.01);
  for (std::size_t k = 0; k < ens.times.size(); ++k) {
    CHECK(ens.positions[k][0][0] == doctest::Approx(-10.0 + 2.0 * ens.times[k]).epsilon(1e-10));
    CHECK(ens.velocities[k][1][0] == doctest::Approx(2.0).epsilon(1e-10));
  }
}

TEST_CASE("Newtonian integration errors") {
  auto g = make_grid({{-16, 16}}, {256});
  auto store = evolve(test::gaussian_1d(g), PhysicsParams{}, 0.01, 10, 1);
  NewtonianIntegrator dyn(store);
  CHECK_THROWS_AS(dyn.run({{0.0, 0.0}}, 0.0), Error);
  CHECK_THROWS_AS(dyn.run({{0.0, 0.0}}, 0.01, 0), Error);
  CHECK_THROWS_AS(dyn.run({{15.9, 0.0}}, 0.01), NumericalError);
  CHECK_THROWS_AS(dyn.run({{40.0, 0.0}}, 0.01), Error);
}

TEST_CASE("record stride keeps the last sample") {
  auto ens = NewtonianIntegrator(free_store()).run(linspace_seeds(-1, 1, 3), 1e-3, 7, 5, "test");
  CHECK(ens.times.back() == doctest::Approx(free_store().t_end()));
  CHECK(ens.times.size() == (free_store().size() - 1) / 7 + 2);
  CHECK(ens.seed == 5);
  CHECK(ens.provenance == "test");
}

TEST_CASE("empirical density") {
  auto g = make_grid({{-10, 10}}, {512});
  auto one = empirical_density({{1.3, 0.0}}, g, 0.5);
  CHECK(integrate(g, one) == doctest::Approx(1.0).epsilon(1e-12));
  double m1 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) m1 += one[i] * g.point(i)[0] * g.cell_volume();
  CHECK(m1 == doctest::Approx(1.3).epsilon(1e-6));

  auto rho = density(test::gaussian_1d(g));
  auto l1_for = [&](std::size_t K, std::uint64_t seed) {
    auto w = sample_worlds(g, rho, K, seed);
    return l1_distance(g, empirical_density(w, g, silverman_bandwidth(w)), rho);
  };
  CHECK(l1_for(10000, 3) <= 0.05);
  double small = 0.0, large = 0.0;
  for (std::uint64_t s = 0; s < 8; ++s) {
    small += l1_for(100, s);
    large += l1_for(10000, s);
  }
  CHECK(large < small / 3.0);
  CHECK_THROWS_AS(empirical_density({}, g, 0.5), Error);
  CHECK_THROWS_AS(empirical_density({{0.0, 0.0}}, g, 0.0), Error);
}

TEST_CASE("Silverman bandwidth") {
  std::vector<Point> w;
  for (int i = 0; i < 1000; ++i) w.push_back({static_cast<double>(i % 2), 0.0});
  // sd 0.5 (population) vs IQR 1 / 1.34; the smaller one wins.
  const double sd = std::sqrt(1000.0 / 999.0) * 0.5;
  CHECK(silverman_bandwidth(w) == doctest::Approx(0.9 * std::min(sd, 1.0 / 1.34) * std::pow(1000.0, -0.2)).epsilon(1e-3));
  CHECK_THROWS_AS(silverman_bandwidth({{0.0, 0.0}}), Error);
}

TEST_CASE("outcome frequencies") {
  auto g = make_grid({{-10, 10}}, {512});
  std::vector<Region> halves{Region(g, {{{-10, 0}}}), Region(g, {{{0, 10}}})};
  auto w = sample_worlds(g, density(test::gaussian_1d(g)), 10000, 11);
  auto f = miw_outcome_frequencies(w, halves);
  for (double x : f.fractions) CHECK(std::abs(x - 0.5) <= 3.0 * std::sqrt(0.25 / 1e4));
  CHECK(f.residual == 0.0);

  auto two = miw_outcome_frequencies({{-1.0, 0.0}, {2.0, 0.0}}, halves);
  for (double x : two.fractions) CHECK((x == 0.0 || x == 0.5 || x == 1.0));

  std::vector<Region> narrow{Region(g, {{{-1, 1}}})};
  auto r = miw_outcome_frequencies({{0.0, 0.0}, {5.0, 0.0}, {-5.0, 0.0}, {0.5, 0.0}}, narrow);
  CHECK(r.fractions[0] == 0.5);
  CHECK(r.residual == 0.5);
}

TEST_CASE("quadrupling K halves the frequency error") {
  auto g = make_grid({{-10, 10}}, {512});
  auto rho = density(test::gaussian_1d(g, 0.3));
  Region left(g, {{{-10, 0}}});
  const double p = world_probability(rho, left);
  auto rms = [&](std::size_t K) {
    double s = 0.0;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
      auto f = miw_outcome_frequencies(sample_worlds(g, rho, K, 1000 + seed), {left});
      s += (f.fractions[0] - p) * (f.fractions[0] - p);
    }
    return std::sqrt(s / 64);
  };
  CHECK(rms(1000) / rms(4000) == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("MIW convergence slope on a short run") {
  auto g = make_grid({{-16, 16}}, {256});
  auto psi = make_state(g, StateRecipe::superposition({{std::sqrt(0.3), StateRecipe::gaussian({-4.0}, {1.0})},
                                                       {std::sqrt(0.7), StateRecipe::gaussian({4.0}, {1.0})}}));
  auto store = evolve(normalize(psi), PhysicsParams{}, 0.01, 50, 5);
  NewtonianIntegrator dyn(store);
  std::vector<Region> regions{Region(g, {{{-16, 0}}}), Region(g, {{{0, 16}}})};
  auto rho_t = density(store.frames.back());
  std::vector<double> ref{world_probability(rho_t, regions[0]), world_probability(rho_t, regions[1])};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
  auto study = miw_convergence(dyn, density(store.frames.front()), regions, ref, {100, 1000, 10000}, seeds, 0.05);
  REQUIRE(study.rows.size() == 3);
  CHECK(study.rows[0].seed_errors.size() == 8);
  CHECK(study.slope == doctest::Approx(-0.5).epsilon(0.3));
}

TEST_CASE("line fit") {
  auto [m, c] = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(m == doctest::Approx(2.0));
  CHECK(c == doctest::Approx(1.0));
  CHECK_THROWS_AS(fit_line({1}, {1}), Error);
}

TEST_CASE("quantization in the harmonic ground state") {
  auto g = make_grid({{-8, 8}, {-8, 8}}, {128, 128});
  PhysicsParams p = default_params(2);
  p.potential = HarmonicPotential{1.0, {0, 0}};
  auto psi = make_state(g, StateRecipe::harmonic_eigenstate({0, 0}, 1.0, {0.0, 0.0}));
  auto flow = flow_frame(psi, p);
  for (double r : {0.5, 1.0, 2.0}) {
    auto q = quantization_check(flow, p, circle_loop({0.2, -0.1}, r, 360));
    CHECK(q.n == 0);
    CHECK(q.residual <= 1e-6);
  }
}

TEST_CASE("quantization around a vortex") {
  const auto& store = vortex_store();
  auto flow = flow_frame(store.frames.back(), store.params);
  auto once = quantization_check(flow, store.params, circle_loop({0, 0}, 1.5, 720));
  CHECK(once.n == 1);
  CHECK(once.residual <= 1e-3);
  CHECK(once.circulation == doctest::Approx(2 * pi * once.ratio));
  auto twice = quantization_check(flow, store.params, circle_loop({0, 0}, 1.5, 720, 2));
  CHECK(twice.n == 2);
  CHECK(twice.residual <= 2e-3);
  auto off = quantization_check(flow, store.params, circle_loop({3, 3}, 1.0, 360));
  CHECK(off.n == 0);
  auto phase = quantization_check_phase(store.frames.back(), circle_loop({0, 0}, 1.5, 720));
  CHECK(phase.n == 1);
  CHECK(phase.residual < 1e-9);
}

TEST_CASE("quantization residual is invariant under reparameterization and rescaling") {
  const auto& store = vortex_store();
  auto psi = store.frames.back();
  auto flow = flow_frame(psi, store.params);
  auto a = quantization_check(flow, store.params, circle_loop({0, 0}, 1.5, 720));
  auto b = quantization_check(flow, store.params, circle_loop({0, 0}, 1.5, 1000, 1, 0.7));
  CHECK(std::abs(a.residual - b.residual) < 1e-4);
  for (auto& z : psi.amp) z *= 3.0;
  auto c = quantization_check(flow_frame(psi, store.params), store.params, circle_loop({0, 0}, 1.5, 720));
  CHECK(std::abs(a.ratio - c.ratio) < 1e-12);
}

TEST_CASE("loops through nodes are rejected") {
  const auto& store = vortex_store();
  auto flow = flow_frame(store.frames.back(), store.params);
  CHECK_THROWS_AS(quantization_check(flow, store.params, circle_loop({0, 0}, 7.5, 360)), Error);
  CHECK_THROWS_AS(circle_loop({0, 0}, 1.0, 2), Error);
}

}  // TEST_SUITE
