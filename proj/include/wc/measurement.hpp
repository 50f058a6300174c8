#pragma once

#include <string>
#include <vector>

#include "wc/configspace.hpp"
#include "wc/measure.hpp"
#include "wc/propagator.hpp"
#include "wc/worlds.hpp"

namespace wc {

/// Eigenvalue a of a coarse-grained position observable with its system region S_a = [lo, hi).
struct Outcome {
  double eigenvalue = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Von Neumann measurement of a coarse-grained position observable by a
/// Gaussian pointer. After the interaction the pointer of outcome a is
/// centred at g * a * duration.
struct MeasurementSetup {
  int system_axis = 0;
  int pointer_axis = 1;
  std::vector<Outcome> outcomes;
  double pointer_sigma = 0.5;  // std. dev. of |eta_R|^2
  double g = 1.0;
  double duration = 1.0;
  double separation_factor = 8.0;

  double pointer_shift(std::size_t a) const { return g * outcomes.at(a).eigenvalue * duration; }
  /// g T min |a - a'|; infinite for a single outcome.
  double min_separation() const;
  /// Effective pointer support Z_a: centred on the shifted pointer with half
  /// width min_separation / 2 (or separation_factor * sigma / 2 for one outcome).
  std::pair<double, double> pointer_window(std::size_t a) const;
  PointerCoupling coupling(bool include_kinetic = false) const;

  /// Throws on structural problems (overlapping S_a, bad axes, non-positive
  /// widths). Returns warnings, e.g. a violated quasi-orthogonality guard.
  std::vector<std::string> validate() const;
};

/// || 1_{S_a} psi ||^2 / || psi ||^2 on a 1D system grid.
double born_probability(const WaveField& psi, std::size_t outcome, const MeasurementSetup& setup);

/// Ready pointer state eta_R(z), evaluated analytically.
cplx ready_pointer(const MeasurementSetup& setup, double z);

/// psi(x) * eta_R(z) on the 2D grid. The system axis of the 2D grid must
/// equal the 1D grid of psi.
WaveField ready_product(const WaveField& psi, const MeasurementSetup& setup, const Grid& grid2d);

struct MeasuredState {
  WaveField psi;
  std::vector<std::string> warnings;
  double pointer_overlap = 0.0;  // max_{a != a'} <eta_a|eta_a'>, analytic
};

/// Psi'(x, z) = sum_a [1_{S_a} psi](x) eta_R(z - g a T), the impulsive limit.
MeasuredState impulsive_measure(const WaveField& psi, const MeasurementSetup& setup,
                                const Grid& grid2d);

/// Same state produced dynamically: the product state evolved under the
/// pointer coupling alone (or with the free Hamiltonian when include_kinetic).
WaveField dynamical_measure(const WaveField& psi, const MeasurementSetup& setup, const Grid& grid2d,
                            std::size_t n_steps, bool include_kinetic = false,
                            const PhysicsParams* free_params = nullptr);

struct Branch {
  double eigenvalue = 0.0;
  WaveField field;                      // (Pi_a x 1) Psi'
  std::pair<double, double> window;     // Z_a
  double weight = 0.0;                  // ||Psi'_a||^2 / ||Psi'||^2
  double coverage = 0.0;                // share of ||Psi'_a||^2 inside Q_S x Z_a
};

struct BranchReport {
  std::vector<Branch> branches;
  /// max_{a != a'} of the overlap integral of the normalised pointer marginals
  /// (Bhattacharyya coefficient); equals |<eta_a|eta_a'>| for Gaussian pointers.
  double overlap = 0.0;
  double weight_sum = 0.0;
  bool poorly_separated = false;  // overlap > 1e-2
};

BranchReport branch_decompose(const WaveField& measured, const MeasurementSetup& setup);

/// Region Q_a = (full system axis) x Z_a on the 2D grid.
Region outcome_region(const Grid& grid2d, const MeasurementSetup& setup, std::size_t outcome);

struct OutcomeComparison {
  std::vector<double> worlds;  // mu(Q_a) / mu(Q)
  std::vector<double> born;    // ||Pi_a Psi'||^2 / ||Psi'||^2
  double residual = 0.0;       // 1 - sum(worlds)
  double max_abs_difference() const;
};

OutcomeComparison outcome_probability_via_worlds(const WaveField& measured,
                                                 const MeasurementSetup& setup);

struct CollapseReport {
  double max_distance = 0.0;           // configuration-space distance
  double max_distance_spacings = 0.0;  // in units of the smallest grid spacing
  double dominance = 0.0;              // max_{a' != a} |Psi'_a'| / |Psi'_a| at q-bar (pointer marginals)
  Trajectory full;
  Trajectory collapsed;
};

/// Integrates the trajectory from q_bar under the uncollapsed store and under
/// a store rebuilt from (Pi_a x 1) Psi_{t_M}, over [t_M, t_M + horizon].
/// Requires q_bar inside Q_a and, when enforce_dominance, a branch dominance
/// ratio below 1e-6.
CollapseReport subjective_collapse_compare(const FrameStore& full, const MeasurementSetup& setup,
                                           std::size_t outcome, const Point& q_bar, double horizon,
                                           double dt_traj, bool enforce_dominance = true);

}  // namespace wc
