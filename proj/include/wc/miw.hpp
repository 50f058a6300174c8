#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wc/configspace.hpp"
#include "wc/hydrodynamics.hpp"
#include "wc/measure.hpp"
#include "wc/propagator.hpp"
#include "wc/worlds.hpp"

namespace wc {

/// Finite set of K worlds with recorded configurations and velocities.
struct WorldEnsemble {
  std::size_t K = 0;
  std::uint64_t seed = 0;
  std::string provenance;
  int dim = 1;
  std::vector<double> times;                       // recorded sample times
  std::vector<std::vector<Point>> positions;       // [sample][world]
  std::vector<std::vector<Point>> velocities;      // [sample][world]
  std::vector<TrajectoryStatus> status;            // per world

  const std::vector<Point>& final_positions() const { return positions.back(); }
};

/// K >= 2 configurations drawn from rho0 with a reproducible seed.
std::vector<Point> sample_worlds(const Grid& grid, const std::vector<double>& rho0, std::size_t K,
                                 std::uint64_t seed);

/// Acceleration field -grad(V + Q) / m of every frame. Q uses the smooth
/// density of the stored wavefunction; cells whose finite-difference stencil
/// touches a node are masked.
FieldSeries quantum_force_series(const FrameStore& store, double node_fraction = kDefaultNodeFraction);

/// Second-order (Newtonian) world dynamics with the initial velocity fixed to
/// j0 / rho0, integrated by velocity Verlet.
class NewtonianIntegrator {
 public:
  explicit NewtonianIntegrator(const FrameStore& store, double node_fraction = kDefaultNodeFraction);
  NewtonianIntegrator(FieldSeries velocity, FieldSeries force);

  const FieldSeries& velocity() const { return velocity_; }
  const FieldSeries& force() const { return force_; }

  /// Records every record_stride-th frame; the last frame is always recorded.
  WorldEnsemble run(const std::vector<Point>& initials, double dt, std::size_t record_stride = 1,
                    std::uint64_t seed = 0, std::string provenance = "explicit") const;

 private:
  FieldSeries velocity_;
  FieldSeries force_;
};

WorldEnsemble newtonian_trajectories(const FrameStore& store, const std::vector<Point>& initials,
                                     double dt);

/// Silverman's rule of thumb 0.9 min(sd, IQR / 1.34) K^(-1/5) along one axis.
double silverman_bandwidth(const std::vector<Point>& positions, int axis = 0);

/// Gaussian-kernel deposition of unit-weight worlds, normalised to unit mass.
std::vector<double> empirical_density(const std::vector<Point>& positions, const Grid& grid,
                                      double bandwidth);

struct OutcomeFrequencies {
  std::vector<double> fractions;
  double residual = 0.0;  // share of worlds outside every region
};

OutcomeFrequencies miw_outcome_frequencies(const std::vector<Point>& positions,
                                           const std::vector<Region>& regions);

struct ConvergenceRow {
  std::size_t K = 0;
  double error = 0.0;  // RMS over seeds of max_a |fraction_a - P_a|
  std::vector<double> seed_errors;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  std::vector<std::uint64_t> seeds;
  double slope = 0.0;      // least-squares slope of log10(error) vs log10(K)
  double intercept = 0.0;
};

/// Samples K worlds from rho0 per seed, moves them with the Newtonian
/// dynamics to the end of the store, and compares outcome frequencies with
/// the continuum probabilities `reference`.
ConvergenceStudy miw_convergence(const NewtonianIntegrator& dynamics, const std::vector<double>& rho0,
                                 const std::vector<Region>& regions, const std::vector<double>& reference,
                                 const std::vector<std::size_t>& Ks, const std::vector<std::uint64_t>& seeds,
                                 double dt);

/// Least-squares fit y = slope * x + intercept.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Closed polyline around a centre; `turns` repeats the circuit.
std::vector<Point> circle_loop(Point center, double radius, std::size_t samples, int turns = 1,
                               double start_angle = 0.0);

struct QuantizationResult {
  double circulation = 0.0;  // loop integral of sum_a m_a v_a dl_a
  double ratio = 0.0;        // circulation / h with h = 2 pi hbar
  long n = 0;
  double residual = 0.0;     // |ratio - n|
};

/// Loop integral of m v . dl over a closed polyline, by the trapezoid rule on
/// the bilinearly interpolated velocity. Throws if the loop touches a masked cell.
QuantizationResult quantization_check(const FlowFrame& flow, const PhysicsParams& params,
                                      const std::vector<Point>& loop);

/// Same condition from the phase: winding of arg(psi) around the loop.
QuantizationResult quantization_check_phase(const WaveField& psi, const std::vector<Point>& loop);

}  // namespace wc
