#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wc/configspace.hpp"
#include "wc/hydrodynamics.hpp"
#include "wc/interp.hpp"
#include "wc/propagator.hpp"

namespace wc {

/// Vector field sampled at uniform frame times, interpolated bilinearly (or
/// cubically) in space and linearly in time. Samples whose stencil touches a
/// masked node return nothing.
class FieldSeries {
 public:
  FieldSeries() = default;
  FieldSeries(Grid grid, double t0, double dt_frame, std::vector<VectorField> fields,
              std::vector<Mask> masks);

  /// Bohm velocity field j / rho of every stored frame.
  static FieldSeries velocity(const FrameStore& store, double node_fraction = kDefaultNodeFraction);

  const Grid& grid() const { return grid_; }
  std::size_t frames() const { return fields_.size(); }
  double t0() const { return t0_; }
  double dt_frame() const { return dt_frame_; }
  double time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_frame_; }
  double t_end() const { return time(frames() - 1); }
  const VectorField& field(std::size_t k) const { return fields_.at(k); }
  const Mask& mask(std::size_t k) const { return masks_.at(k); }

  Interpolation interpolation() const { return order_; }
  void set_interpolation(Interpolation order) { order_ = order; }

  std::optional<Point> sample(const Point& q, double t) const;
  /// True when the interpolation stencil at q in frame k avoids every masked cell.
  bool usable(const Point& q, std::size_t k) const;

 private:
  Grid grid_;
  double t0_ = 0.0;
  double dt_frame_ = 0.0;
  std::vector<VectorField> fields_;
  std::vector<Mask> masks_;
  Interpolation order_ = Interpolation::Linear;
};

enum class TrajectoryStatus { Completed, AbortedNearNode };

std::string to_string(TrajectoryStatus s);

struct TimedPoint {
  double t = 0.0;
  Point q{};
};

struct Trajectory {
  Point initial{};
  std::vector<TimedPoint> samples;  // one per frame, starting with the initial point
  TrajectoryStatus status = TrajectoryStatus::Completed;
};

struct TrajectoryBundle {
  std::vector<Trajectory> trajectories;
  std::string seeding;
  int dim = 1;

  std::size_t size() const { return trajectories.size(); }
  /// Configurations of every trajectory at sample k (the discretised xi_t);
  /// aborted trajectories contribute their last sample.
  std::vector<Point> positions_at(std::size_t k) const;
  std::size_t completed() const;
};

/// RK4 on the interpolated velocity field from q0 at frame start_frame to the
/// end of the series; substep h = dt_frame / ceil(dt_frame / dt_traj).
///
/// Throws NumericalError if q0 sits on a masked node and Error if the path
/// leaves the grid extents. Entering a masked cell aborts the trajectory.
Trajectory integrate_trajectory(const FieldSeries& velocity, const Point& q0, double dt_traj,
                                std::size_t start_frame = 0);
Trajectory integrate_trajectory(const FrameStore& store, const Point& q0, double dt_traj);

/// Integrates every initial point (in parallel) against one velocity series.
TrajectoryBundle trajectory_function(const FieldSeries& velocity, const std::vector<Point>& initials,
                                     double dt_traj, std::string seeding = "explicit");
TrajectoryBundle trajectory_function(const FrameStore& store, const std::vector<Point>& initials,
                                     double dt_traj, std::string seeding = "explicit");

/// count points evenly spaced on [lo, hi] inclusive (1D).
std::vector<Point> linspace_seeds(double lo, double hi, std::size_t count);
/// Tensor product of per-axis inclusive linspaces (2D).
std::vector<Point> linspace_seeds(std::pair<double, double> x, std::pair<double, double> y,
                                  std::size_t nx, std::size_t ny);

/// Cell-centred sub-lattice of a grid refined by an integer factor, kept only
/// where the interpolated density reaches eps.
struct Lattice {
  std::vector<Point> points;
  std::vector<double> mass;  // rho0(point) * cell_volume
  double cell_volume = 0.0;
  double spacing = 0.0;
};
Lattice density_lattice(const Grid& grid, const std::vector<double>& rho0, std::size_t refine,
                        double eps);

struct Crossing {
  std::size_t sample = 0;
  double t = 0.0;
  std::size_t first = 0;
  std::size_t second = 0;
};

struct CrossingReport {
  std::vector<Crossing> violations;
  std::size_t samples_checked = 0;
  bool ok() const { return violations.empty(); }
};

/// 1D: the initial ordering must hold strictly at every sample.
/// 2D: no two trajectories may come within collision_radius at equal times.
CrossingReport check_no_crossing(const TrajectoryBundle& bundle, double collision_radius = 0.0);

struct Pushforward {
  std::vector<double> rho;
  std::optional<std::string> warning;
};

/// Cloud-in-cell deposition of point masses onto the target grid, divided by
/// the cell volume.
Pushforward deposit(const Grid& target, const std::vector<Point>& positions,
                    const std::vector<double>& mass);

/// rho_t(q) = integral dq' delta(q - xi_t(q')) rho0(q') for a lattice
/// transported to `positions`. In 1D each lattice cell travels as the segment
/// between the midpoints to its transported neighbours and its mass is spread
/// uniformly over that segment; in 2D the points are deposited cloud-in-cell.
Pushforward pushforward_density(const Lattice& lattice, const std::vector<Point>& positions,
                                const Grid& target);

/// Sum |a - b| dV.
double l1_distance(const Grid& grid, const std::vector<double>& a, const std::vector<double>& b);

/// Deterministic 53-bit uniform double in [0, 1).
double uniform01(std::mt19937_64& rng);

/// Draws count configurations from a non-negative density on its grid:
/// inverse CDF over piecewise-constant cells in 1D, rejection in 2D.
std::vector<Point> sample_from_density(const Grid& grid, const std::vector<double>& rho,
                                       std::size_t count, std::uint64_t seed);

}  // namespace wc
