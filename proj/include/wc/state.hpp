#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "wc/configspace.hpp"

namespace wc {

/// Analytic initial state that can be evaluated at any configuration.
///
/// Each recipe carries an effective support box (where its mass lives);
/// make_state rejects recipes whose support comes closer than the margin to the
/// periodic boundary. Extended states such as plane waves carry no box but
/// must be commensurate with the box period instead.
class StateRecipe {
 public:
  using Box = std::vector<std::pair<double, double>>;

  /// Product of per-axis Gaussians (2 pi sigma^2)^(-1/4) exp(-(q-c)^2 / 4 sigma^2 + i k q).
  /// sigma is the standard deviation of |psi|^2.
  static StateRecipe gaussian(std::vector<double> center, std::vector<double> sigma,
                              std::vector<double> momentum = {});
  /// Harmonic-oscillator eigenstate with quantum numbers n per axis.
  static StateRecipe harmonic_eigenstate(std::vector<int> n, double omega,
                                         std::vector<double> center, std::vector<double> masses = {},
                                         double hbar = 1.0);
  /// amplitude * exp(i k.q); never normalised.
  static StateRecipe plane_wave(std::vector<double> k, cplx amplitude = 1.0);
  /// 2D vortex ((x-cx) + i (y-cy))^l exp(-r^2 / 4 sigma^2), normalised analytically.
  static StateRecipe vortex(Point center, double sigma, int winding);
  static StateRecipe superposition(std::vector<std::pair<cplx, StateRecipe>> terms);
  /// psi(x) * phi(z) on a 2D space from two 1D recipes.
  static StateRecipe product(const StateRecipe& first, const StateRecipe& second);

  cplx operator()(const Point& q) const { return eval_(q); }
  int dim() const { return dim_; }
  const std::optional<Box>& support() const { return support_; }
  const std::vector<double>& wavevector() const { return wavevector_; }

 private:
  StateRecipe(int dim, std::function<cplx(const Point&)> eval, std::optional<Box> support)
      : dim_(dim), eval_(std::move(eval)), support_(std::move(support)) {}

  int dim_ = 1;
  std::function<cplx(const Point&)> eval_;
  std::optional<Box> support_;
  std::vector<double> wavevector_;  // set for plane waves only
  bool extended_ = false;

  friend WaveField make_state(const Grid&, const StateRecipe&, double);
};

/// Samples the recipe at the grid points. The support box, widened by nothing
/// further, must lie inside the grid extents; plane waves must be periodic.
WaveField make_state(const Grid& grid, const StateRecipe& recipe, double time = 0.0);

}  // namespace wc
