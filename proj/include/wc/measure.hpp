#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wc/configspace.hpp"
#include "wc/hydrodynamics.hpp"

namespace wc {

/// Per-axis half-open intervals [lo, hi).
using Box = std::vector<std::pair<double, double>>;

/// Union of axis-aligned boxes on a grid. Membership is decided per cell
/// centre, so overlapping boxes are counted once.
class Region {
 public:
  Region(const Grid& grid, std::vector<Box> boxes, std::string name = {});

  static Region full(const Grid& grid);

  const Grid& grid() const { return grid_; }
  const std::vector<Box>& boxes() const { return boxes_; }
  const std::string& name() const { return name_; }
  bool contains(const Point& q) const;
  /// Cell-centre membership flags.
  const Mask& cells() const { return cells_; }

 private:
  Grid grid_;
  std::vector<Box> boxes_;
  std::string name_;
  Mask cells_;
};

/// Directed hyperplane q_axis = level restricted to a box in the remaining
/// coordinate (ignored in 1D). orientation +1 counts flow towards +q_axis.
struct Surface {
  int axis = 0;
  double level = 0.0;
  int orientation = +1;
  std::pair<double, double> bounds{-1e300, 1e300};
};

/// mu(Q) = integral over Q of rho, as a cell-centre Riemann sum.
double substantial_amount(const std::vector<double>& rho, const Region& region);

/// mu(Q) / mu(full domain).
double world_probability(const std::vector<double>& rho, const Region& region);

struct AmountReport {
  double raw = 0.0;         // mu(Q)
  double proportion = 0.0;  // mu(Q) / mu(full)
};
AmountReport amount_report(const std::vector<double>& rho, const Region& region);

/// nu(F) = integral over F of j . dF, with j interpolated linearly onto the plane.
double substantial_flow(const Grid& grid, const VectorField& j, const Surface& surface);

/// Monotone map on the real line for pushforward measures.
struct Map1D {
  std::function<double(double)> forward;
  /// Optional explicit inverse; monotone maps without one are inverted by bisection.
  std::function<double(double)> inverse;
  /// Optional derivative; central differences are used otherwise.
  std::function<double(double)> derivative;
  /// Set false for maps that are not monotone on the domain; such maps then
  /// require `preimage`.
  bool monotone = true;
  /// Preimage of an interval as a union of intervals, for non-invertible maps.
  std::function<std::vector<std::pair<double, double>>(double, double)> preimage;
};

/// Density on a 1D cell lattice, piecewise constant per cell.
struct LatticeDensity {
  Axis axis;
  std::vector<double> values;

  /// integral of the density over [a, b] with exact partial-cell weighting.
  double integrate(double a, double b) const;
  double at(double x) const;
};

/// mu(Y) = nu({x : f(x) in Y}) for Y = [lo, hi].
double pushforward_measure(const LatticeDensity& rho_x, const Map1D& f, double lo, double hi);

/// Induced density rho_Y(y) = rho_X(f^{-1}(y)) / |f'(f^{-1}(y))|.
double induced_density(const LatticeDensity& rho_x, const Map1D& f, double y);

}  // namespace wc
