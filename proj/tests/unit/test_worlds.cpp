#include <doctest.h>

#include <cmath>
#include <cstring>

#include "helpers.hpp"
#include "wc/hydrodynamics.hpp"
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

double free_oracle_error(std::size_t stride) {
  auto g = make_grid({{-16, 16}}, {512});
  auto store = evolve(test::gaussian_1d(g), PhysicsParams{}, 1e-3, 2000, stride);
  auto tr = integrate_trajectory(store, {2.0, 0.0}, 1e-3);
  return std::abs(tr.samples.back().q[0] - 2.0 * test::free_sigma(1.0, 2.0));
}

}  // namespace

TEST_SUITE("worlds") {

TEST_CASE("free Gaussian trajectory follows x0 sigma(t) / sigma0") {
  auto tr = integrate_trajectory(free_store(), {1.0, 0.0}, 1e-3);
  CHECK(tr.status == TrajectoryStatus::Completed);
  CHECK(tr.samples.size() == free_store().size());
  CHECK(tr.samples.back().t == doctest::Approx(2.0));
  CHECK(std::abs(tr.samples.back().q[0] - std::sqrt(2.0)) < 1e-3);
  for (const auto& s : tr.samples) CHECK(std::abs(s.q[0] - test::free_sigma(1.0, s.t)) < 1e-3);
}

TEST_CASE("harmonic ground state worlds do not move") {
  auto g = make_grid({{-8, 8}}, {256});
  auto store = evolve(make_state(g, StateRecipe::harmonic_eigenstate({0}, 1.0, {0.0})), harmonic(), 1e-4, 20000, 100);
  for (double q0 : {-2.0, -0.3, 0.0, 1.7}) {
    auto tr = integrate_trajectory(store, {q0, 0.0}, 1e-3);
    for (const auto& s : tr.samples) CHECK(std::abs(s.q[0] - q0) < 1e-8);
  }
}

TEST_CASE("plane wave worlds move uniformly") {
  auto g = make_grid({{-8 * pi, 8 * pi}}, {256});
  auto store = evolve(make_state(g, StateRecipe::plane_wave({2.0})), PhysicsParams{}, 0.01, 200, 10);
  auto tr = integrate_trajectory(store, {-10.0, 0.0}, 0.01);
  for (const auto& s : tr.samples) CHECK(std::abs(s.q[0] - (-10.0 + 2.0 * s.t)) < 1e-10);
}

TEST_CASE("trajectory function starts as the identity") {
  auto initials = linspace_seeds(-3, 3, 101);
  auto bundle = trajectory_function(free_store(), initials, 1e-3, "linspace");
  REQUIRE(bundle.size() == 101);
  auto first = bundle.positions_at(0);
  for (std::size_t i = 0; i < initials.size(); ++i) CHECK(first[i][0] == initials[i][0]);
  auto last = bundle.positions_at(free_store().size() - 1);
  for (std::size_t i = 0; i < initials.size(); ++i)
    CHECK(std::abs(last[i][0] - initials[i][0] * std::sqrt(2.0)) < 1e-3);
  CHECK(bundle.completed() == 101);
}

TEST_CASE("coherent state worlds ride the classical orbit") {
  // Displaced ground state: psi translates rigidly along x0 cos t, so does every world.
  auto g = make_grid({{-12, 12}}, {256});
  auto store = evolve(make_state(g, StateRecipe::harmonic_eigenstate({0}, 1.0, {2.0})), harmonic(), 1e-3, 3000, 10);
  auto initials = linspace_seeds(0.5, 3.5, 31);
  auto bundle = trajectory_function(store, initials, 1e-3);
  for (const auto& tr : bundle.trajectories)
    for (const auto& s : tr.samples)
      CHECK(std::abs(s.q[0] - (tr.initial[0] - 2.0 + 2.0 * std::cos(s.t))) < 1e-3);
}

TEST_CASE("non-crossing in 1D") {
  auto bundle = trajectory_function(free_store(), linspace_seeds(-3, 3, 101), 1e-3);
  auto rep = check_no_crossing(bundle);
  CHECK(rep.ok());
  CHECK(rep.samples_checked == free_store().size());

  auto broken = bundle;
  broken.trajectories[50].samples[100].q[0] += 0.5;
  auto bad = check_no_crossing(broken);
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.violations.front().sample == 100);
}

TEST_CASE("non-crossing in 2D uses the collision radius") {
  TrajectoryBundle b;
  b.dim = 2;
  Trajectory a, c;
  a.initial = {0, 0};
  c.initial = {1, 0};
  a.samples = {{0.0, {0, 0}}, {1.0, {0.4, 0}}};
  c.samples = {{0.0, {1, 0}}, {1.0, {0.6, 0}}};
  b.trajectories = {a, c};
  CHECK(check_no_crossing(b, 0.1).ok());
  CHECK_FALSE(check_no_crossing(b, 0.3).ok());
}

TEST_CASE("interference trajectories never cross") {
  auto g = make_grid({{-20, 20}}, {1024});
  auto psi = make_state(g, StateRecipe::superposition({{1.0, StateRecipe::gaussian({-4.0}, {1.0}, {1.0})},
                                                       {1.0, StateRecipe::gaussian({4.0}, {1.0}, {-1.0})}}));
  auto store = evolve(normalize(psi), PhysicsParams{}, 2e-3, 2000, 5);
  auto bundle = trajectory_function(store, linspace_seeds(-6, 6, 101), 2e-3);
  CHECK(check_no_crossing(bundle).ok());
}

TEST_CASE("trajectory errors") {
  auto g = make_grid({{-16, 16}}, {256});
  auto psi = make_state(g, StateRecipe::harmonic_eigenstate({1}, 1.0, {0.0}));
  auto store = evolve(psi, harmonic(), 0.01, 10, 1);
  // The n = 1 eigenstate has a node at the origin; grid points sit at +-dq/2.
  CHECK_THROWS_AS(integrate_trajectory(store, {15.9, 0.0}, 0.01), NumericalError);
  auto moving = evolve(test::gaussian_1d(g, 0.0, 1.0, 5.0), PhysicsParams{}, 0.01, 100, 1);
  CHECK_THROWS_AS(integrate_trajectory(moving, {-14.0, 0.0}, 0.01), NumericalError);
  CHECK_NOTHROW(integrate_trajectory(moving, {0.5, 0.0}, 0.01));
}

TEST_CASE("leaving the grid is an error") {
  auto g = make_grid({{-8 * pi, 8 * pi}}, {256});
  auto store = evolve(make_state(g, StateRecipe::plane_wave({2.0})), PhysicsParams{}, 0.01, 200, 10);
  CHECK_THROWS_AS(integrate_trajectory(store, {8 * pi - 1.0, 0.0}, 0.01), Error);
}

TEST_CASE("trajectories are bitwise deterministic") {
  auto a = integrate_trajectory(free_store(), {0.731, 0.0}, 1e-3);
  auto b = integrate_trajectory(free_store(), {0.731, 0.0}, 1e-3);
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(std::memcmp(a.samples.data(), b.samples.data(), a.samples.size() * sizeof(TimedPoint)) == 0);
}

TEST_CASE("finer frames reduce the time-interpolation error") {
  const double e20 = free_oracle_error(40);
  const double e10 = free_oracle_error(20);
  CHECK(e10 < e20);
  CHECK(e20 / e10 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("pushforward at t = 0 reproduces rho0") {
  const auto& store = free_store();
  auto rho0 = density(store.frames.front());
  auto lat = density_lattice(store.grid(), rho0, 4, 1e-9 * test::max_abs(rho0));
  auto pf = pushforward_density(lat, lat.points, store.grid());
  CHECK(l1_distance(store.grid(), pf.rho, rho0) <= 1e-3);
  CHECK_FALSE(pf.warning.has_value());
}

TEST_CASE("equivariance for the free Gaussian") {
  const auto& store = free_store();
  auto rho0 = density(store.frames.front());
  auto vel = FieldSeries::velocity(store);
  auto l1_at = [&](std::size_t refine, double dt) {
    auto lat = density_lattice(store.grid(), rho0, refine, 1e-9 * test::max_abs(rho0));
    auto bundle = trajectory_function(vel, lat.points, dt);
    auto pf = pushforward_density(lat, bundle.positions_at(store.size() - 1), store.grid());
    return l1_distance(store.grid(), pf.rho, density(store.frames.back()));
  };
  const double coarse = l1_at(2, 2e-3);
  const double fine = l1_at(4, 1e-3);
  CHECK(coarse <= 0.02);
  CHECK(fine < coarse);
}

TEST_CASE("static flow pushes rho0 forward onto itself") {
  auto g = make_grid({{-8, 8}}, {256});
  auto store = evolve(make_state(g, StateRecipe::harmonic_eigenstate({0}, 1.0, {0.0})), harmonic(), 1e-3, 1000, 100);
  auto rho0 = density(store.frames.front());
  auto lat = density_lattice(g, rho0, 4, 1e-9 * test::max_abs(rho0));
  auto bundle = trajectory_function(store, lat.points, 1e-3);
  auto pf = pushforward_density(lat, bundle.positions_at(store.size() - 1), g);
  auto at0 = pushforward_density(lat, lat.points, g);
  CHECK(l1_distance(g, pf.rho, at0.rho) < 1e-6);
  CHECK(l1_distance(g, pf.rho, rho0) < 1e-3);
}

TEST_CASE("coarse lattices raise a resolution warning") {
  auto g = make_grid({{0, 8}}, {8});
  Lattice lat;
  lat.spacing = 2.0;
  lat.cell_volume = 2.0;
  lat.points = {{1, 0}, {3, 0}, {5, 0}, {7, 0}};
  lat.mass = {0.5, 0.5, 0.5, 0.5};
  auto pf = pushforward_density(lat, lat.points, g);
  REQUIRE(pf.warning.has_value());
  CHECK(pf.warning->find("refine") != std::string::npos);
  CHECK(integrate(g, pf.rho) == doctest::Approx(2.0));
}

TEST_CASE("deposition conserves mass") {
  auto g = make_grid({{-4, 4}, {-4, 4}}, {32, 32});
  std::vector<Point> pts{{0.1, 0.2}, {-1.3, 2.2}, {3.0, -3.0}};
  auto pf = deposit(g, pts, {0.2, 0.3, 0.5});
  CHECK(integrate(g, pf.rho) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(deposit(g, pts, {1.0}), Error);
}

TEST_CASE("density sampling") {
  auto g = make_grid({{-10, 10}}, {512});
  auto rho = density(test::gaussian_1d(g, 1.0, 1.0));
  auto s = sample_from_density(g, rho, 10000, 7);
  double mean = 0.0;
  for (const auto& p : s) mean += p[0];
  mean /= static_cast<double>(s.size());
  CHECK(std::abs(mean - 1.0) < 4.0 / std::sqrt(1e4));
  auto again = sample_from_density(g, rho, 10000, 7);
  CHECK(std::memcmp(s.data(), again.data(), s.size() * sizeof(Point)) == 0);
  auto other = sample_from_density(g, rho, 10000, 8);
  CHECK(std::memcmp(s.data(), other.data(), s.size() * sizeof(Point)) != 0);

  auto g2 = make_grid({{-6, 6}, {-6, 6}}, {64, 64});
  auto rho2 = density(make_state(g2, StateRecipe::gaussian({1.0, -1.0}, {1.0, 0.5})));
  auto s2 = sample_from_density(g2, rho2, 20000, 3);
  double mx = 0, my = 0, vy = 0;
  for (const auto& p : s2) {
    mx += p[0];
    my += p[1];
  }
  mx /= 2e4;
  my /= 2e4;
  for (const auto& p : s2) vy += (p[1] - my) * (p[1] - my);
  vy /= 2e4;
  CHECK(std::abs(mx - 1.0) < 4.0 / std::sqrt(2e4));
  CHECK(std::abs(my + 1.0) < 4.0 * 0.5 / std::sqrt(2e4));
  CHECK(vy == doctest::Approx(0.25 + g2.spacing(1) * g2.spacing(1) / 12).epsilon(0.05));

  CHECK_THROWS_AS(sample_from_density(g, std::vector<double>(g.size(), 0.0), 10, 1), Error);
}

TEST_CASE("linspace seeds") {
  auto s = linspace_seeds(-1, 1, 5);
  CHECK(s.front()[0] == -1.0);
  CHECK(s.back()[0] == 1.0);
  CHECK(s[2][0] == doctest::Approx(0.0));
  CHECK(linspace_seeds({0, 1}, {0, 2}, 3, 4).size() == 12);
}

}  // TEST_SUITE
