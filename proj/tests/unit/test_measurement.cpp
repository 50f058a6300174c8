#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "wc/hydrodynamics.hpp"
#include "wc/measure.hpp"
#include "wc/measurement.hpp"
#include "wc/propagator.hpp"

using namespace wc;

namespace {

const Grid& system_grid() {
  static const Grid g = make_grid({{-16, 16}}, {128});
  return g;
}

const Grid& total_grid() {
  static const Grid g = make_grid({{-16, 16}, {-8, 8}}, {128, 128});
  return g;
}

MeasurementSetup two_outcomes(double g = 2.0) {
  MeasurementSetup s;
  s.outcomes = {{-1.0, -16.0, 0.0}, {1.0, 0.0, 16.0}};
  s.pointer_sigma = 0.5;
  s.g = g;
  s.duration = 1.0;
  return s;
}

WaveField weighted_pair(double w_left, double c = 8.0) {
  auto rec = StateRecipe::superposition({{std::sqrt(w_left), StateRecipe::gaussian({-c}, {1.0})},
                                         {std::sqrt(1.0 - w_left), StateRecipe::gaussian({c}, {1.0})}});
  return make_state(system_grid(), rec);
}

PhysicsParams heavy_pointer() {
  PhysicsParams p = default_params(2);
  p.masses = {2.0, 100.0};
  return p;
}

}  // namespace

TEST_SUITE("measurement") {

TEST_CASE("Born probabilities") {
  auto s = two_outcomes();
  auto even = weighted_pair(0.5);
  CHECK(born_probability(even, 0, s) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(born_probability(even, 1, s) == doctest::Approx(0.5).epsilon(1e-12));
  auto psi = weighted_pair(0.3);
  CHECK(std::abs(born_probability(psi, 0, s) - 0.3) < 1e-10);
  CHECK(std::abs(born_probability(psi, 1, s) - 0.7) < 1e-10);
  CHECK(born_probability(psi, 0, s) + born_probability(psi, 1, s) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(born_probability(WaveField(system_grid(), 0.0), 0, s), Error);
}

TEST_CASE("setup validation") {
  auto s = two_outcomes();
  CHECK(s.validate().empty());
  CHECK(s.min_separation() == doctest::Approx(4.0));
  CHECK(s.pointer_window(1).first == doctest::Approx(0.0));
  CHECK(s.pointer_window(1).second == doctest::Approx(4.0));
  auto weak = two_outcomes(0.5);
  REQUIRE(weak.validate().size() == 1);
  CHECK(weak.validate()[0].find("quasi-orthogonality") != std::string::npos);
  auto overlap = s;
  overlap.outcomes[1].lo = -1.0;
  CHECK_THROWS_AS(overlap.validate(), Error);
  auto same = s;
  same.outcomes[1].eigenvalue = -1.0;
  CHECK_THROWS_AS(same.validate(), Error);
}

TEST_CASE("single outcome yields a shifted product state") {
  auto s = two_outcomes();
  auto psi = make_state(system_grid(), StateRecipe::gaussian({10.0}, {1.0}));
  auto m = impulsive_measure(psi, s, total_grid());
  auto expect = make_state(total_grid(), StateRecipe::product(StateRecipe::gaussian({10.0}, {1.0}),
                                                             StateRecipe::gaussian({2.0}, {0.5})));
  CHECK(l2_distance(m.psi, expect) < 1e-8);
}

TEST_CASE("zero coupling leaves the ready product") {
  auto s = two_outcomes(0.0);
  auto psi = weighted_pair(0.4);
  auto m = impulsive_measure(psi, s, total_grid());
  CHECK(l2_distance(m.psi, ready_product(psi, s, total_grid())) < 1e-14);
  CHECK_FALSE(m.warnings.empty());
}

TEST_CASE("pointer overlap follows exp(-d^2 / 8 sigma^2)") {
  for (double g : {1.0, 1.5, 2.0}) {
    auto s = two_outcomes(g);
    auto m = impulsive_measure(weighted_pair(0.5), s, total_grid());
    auto rep = branch_decompose(m.psi, s);
    const double d = 2.0 * g;
    const double oracle = std::exp(-d * d / (8 * 0.25));
    CHECK(rep.overlap == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(m.pointer_overlap == doctest::Approx(oracle).epsilon(1e-12));
  }
  // Reaching 1e-6 takes a separation of about 10.5 sigma.
  auto s = two_outcomes(3.0);
  CHECK(branch_decompose(impulsive_measure(weighted_pair(0.5), s, total_grid()).psi, s).overlap <= 1e-6);
}

TEST_CASE("dynamical and impulsive routes agree") {
  auto s = two_outcomes();
  auto psi = weighted_pair(0.3);
  auto a = impulsive_measure(psi, s, total_grid()).psi;
  auto b = dynamical_measure(psi, s, total_grid(), 50);
  CHECK(l2_distance(a, b) < 1e-6);
}

TEST_CASE("branch decomposition") {
  auto s = two_outcomes(3.0);
  auto psi = weighted_pair(0.3);
  auto rep = branch_decompose(impulsive_measure(psi, s, total_grid()).psi, s);
  REQUIRE(rep.branches.size() == 2);
  for (const auto& b : rep.branches) CHECK(b.coverage >= 1.0 - 1e-6);
  CHECK(std::abs(rep.branches[0].weight - born_probability(psi, 0, s)) < 1e-6);
  CHECK(std::abs(rep.branches[1].weight - born_probability(psi, 1, s)) < 1e-6);
  CHECK(std::abs(rep.weight_sum - 1.0) < 1e-6);
  CHECK_FALSE(rep.poorly_separated);

  auto weak = two_outcomes(0.3);
  auto bad = branch_decompose(impulsive_measure(psi, weak, total_grid()).psi, weak);
  CHECK(bad.overlap > 1e-2);
  CHECK(bad.poorly_separated);
}

TEST_CASE("outcome probabilities from the world measure") {
  auto s = two_outcomes();
  auto even = outcome_probability_via_worlds(impulsive_measure(weighted_pair(0.5), s, total_grid()).psi, s);
  CHECK(std::abs(even.worlds[0] - 0.5) < 1e-4);
  CHECK(std::abs(even.worlds[1] - 0.5) < 1e-4);

  auto cmp = outcome_probability_via_worlds(impulsive_measure(weighted_pair(0.3), s, total_grid()).psi, s);
  CHECK(std::abs(cmp.worlds[0] - 0.3) < 1e-3);
  CHECK(std::abs(cmp.worlds[1] - 0.7) < 1e-3);
  CHECK(cmp.max_abs_difference() < 1e-3);
  CHECK(std::abs(cmp.worlds[0] + cmp.worlds[1] + cmp.residual - 1.0) < 1e-8);
}

TEST_CASE("three outcomes") {
  auto g2 = make_grid({{-20, 20}, {-8, 8}}, {128, 128});
  auto gx = make_grid({{-20, 20}}, {128});
  MeasurementSetup s;
  s.outcomes = {{-4.0, -20.0, -6.0}, {0.0, -6.0, 6.0}, {4.0, 6.0, 20.0}};
  s.pointer_sigma = 0.5;
  s.g = 1.0;
  auto psi = make_state(gx, StateRecipe::superposition({{std::sqrt(0.2), StateRecipe::gaussian({-12.0}, {1.0})},
                                                        {std::sqrt(0.3), StateRecipe::gaussian({0.0}, {1.0})},
                                                        {std::sqrt(0.5), StateRecipe::gaussian({12.0}, {1.0})}}));
  auto cmp = outcome_probability_via_worlds(impulsive_measure(psi, s, g2).psi, s);
  const double expect[] = {0.2, 0.3, 0.5};
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(cmp.worlds[a] - expect[a]) < 1e-3);
    CHECK(std::abs(cmp.born[a] - expect[a]) < 1e-6);
  }
}

TEST_CASE("agreement improves as the coupling grows") {
  auto psi = weighted_pair(0.3);
  double prev = 1.0;
  for (double g : {0.5, 1.0, 1.5, 2.0}) {
    auto s = two_outcomes(g);
    auto d = outcome_probability_via_worlds(impulsive_measure(psi, s, total_grid()).psi, s).max_abs_difference();
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("measurement neither creates nor destroys worlds") {
  auto s = two_outcomes();
  auto psi = weighted_pair(0.3);
  auto before = ready_product(psi, s, total_grid());
  auto after = dynamical_measure(psi, s, total_grid(), 50);
  const double mu0 = integrate(total_grid(), density(before));
  CHECK(std::abs(integrate(total_grid(), density(after)) - mu0) < 1e-8);
}

TEST_CASE("subjective collapse") {
  auto s = two_outcomes();
  auto post = impulsive_measure(weighted_pair(0.3, 6.0), s, total_grid()).psi;
  auto store = evolve(post, heavy_pointer(), 0.01, 500, 5);
  auto rep = subjective_collapse_compare(store, s, 1, {4.0, 2.0}, 5.0, 0.01);
  CHECK(rep.dominance < 1e-6);
  CHECK(rep.max_distance_spacings <= 1e-3);
  CHECK(rep.full.samples.back().t == doctest::Approx(5.0));

  CHECK_THROWS_AS(subjective_collapse_compare(store, s, 1, {4.0, 0.05}, 5.0, 0.01), Error);
  CHECK_THROWS_AS(subjective_collapse_compare(store, s, 0, {4.0, 2.0}, 5.0, 0.01), Error);

  auto weak = two_outcomes(0.1);
  auto wpost = impulsive_measure(weighted_pair(0.3, 6.0), weak, total_grid()).psi;
  auto wstore = evolve(wpost, heavy_pointer(), 0.01, 500, 5);
  auto control = subjective_collapse_compare(wstore, weak, 1, {4.0, 0.1}, 5.0, 0.01, false);
  CHECK(control.max_distance_spacings >= 10.0 * std::max(rep.max_distance_spacings, 1e-12));
}

TEST_CASE("single-branch collapse is exact") {
  auto s = two_outcomes();
  auto psi = make_state(system_grid(), StateRecipe::gaussian({10.0}, {1.0}));
  auto store = evolve(impulsive_measure(psi, s, total_grid()).psi, heavy_pointer(), 0.01, 200, 5);
  auto rep = subjective_collapse_compare(store, s, 1, {10.0, 2.0}, 2.0, 0.01);
  CHECK(rep.max_distance < 1e-12);
}

}  // TEST_SUITE
