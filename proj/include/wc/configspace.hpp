#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace wc {

using cplx = std::complex<double>;

/// Configurations are stored with a fixed two-slot array; slot 1 is unused on 1D grids.
using Point = std::array<double, 2>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numerical guard trips (norm drift, NaN, node entry at seeding).
class NumericalError : public Error {
 public:
  using Error::Error;
};

struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;

  double spacing() const { return (hi - lo) / static_cast<double>(n); }
  double length() const { return hi - lo; }
  /// Cell-centred sample positions: point i sits at the middle of [lo + i*dq, lo + (i+1)*dq).
  double coord(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * spacing(); }
  bool operator==(const Axis&) const = default;
};

/// Uniform periodic lattice over a 1D or 2D configuration space.
///
/// Flat storage is row-major: index = i0 * n1 + i1, so axis 0 is the slow
/// axis. The tensor structure of many-particle configuration spaces is not
/// modelled; a 2D grid is simply the flat product of its axes.
class Grid {
 public:
  Grid() = default;
  Grid(std::vector<Axis> axes);

  int dim() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int a) const { return axes_.at(static_cast<std::size_t>(a)); }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t size() const;
  std::size_t npoints(int a) const { return axis(a).n; }
  double spacing(int a) const { return axis(a).spacing(); }
  double min_spacing() const;
  double cell_volume() const;

  std::size_t index(std::size_t i0, std::size_t i1 = 0) const {
    return dim() == 1 ? i0 : i0 * axes_[1].n + i1;
  }
  /// Per-axis indices of a flat index.
  std::array<std::size_t, 2> unravel(std::size_t flat) const;
  Point point(std::size_t flat) const;
  bool contains(const Point& q) const;

  bool operator==(const Grid&) const = default;

 private:
  std::vector<Axis> axes_;
};

/// Builds a grid; counts must be powers of two and at least 8 per axis.
Grid make_grid(const std::vector<std::pair<double, double>>& extents,
               const std::vector<std::size_t>& npoints);

void require_same_grid(const Grid& a, const Grid& b, const char* what);

struct FreePotential {};

/// V(q) = sum_a m_a omega^2 (q_a - c_a)^2 / 2
struct HarmonicPotential {
  double omega = 1.0;
  Point center{0.0, 0.0};
};

/// Rectangular barrier of the given height on |q_axis - center| < width / 2.
struct BarrierPotential {
  double height = 0.0;
  double width = 0.0;
  double center = 0.0;
  int axis = 0;
};

/// Von Neumann pointer coupling W = g A(x) p_z with a coarse-grained position
/// observable A(x) = a_i on [lo_i, hi_i) of the system axis.
///
/// Under this generator the pointer wavefunction is translated by +g a T.
/// When include_kinetic is false the free Hamiltonian is switched off while
/// the coupling acts (impulsive limit).
struct PointerCoupling {
  double g = 0.0;
  int system_axis = 0;
  int pointer_axis = 1;
  std::vector<std::pair<double, double>> intervals;
  std::vector<double> eigenvalues;
  bool include_kinetic = false;

  /// Eigenvalue at a system coordinate; 0 outside all intervals.
  double eigenvalue_at(double x) const;
};

using Potential = std::variant<FreePotential, HarmonicPotential, BarrierPotential, PointerCoupling>;

struct PhysicsParams {
  double hbar = 1.0;
  std::vector<double> masses{1.0};
  Potential potential = FreePotential{};

  double mass(int axis) const { return masses.at(static_cast<std::size_t>(axis)); }
  /// Throws unless hbar > 0 and every mass > 0; mass count must match dim.
  void validate(int dim) const;
};

PhysicsParams default_params(int dim);

/// Multiplicative part of the potential at q. Coupling terms contribute zero.
double potential_at(const PhysicsParams& params, const Point& q);
std::vector<double> potential_field(const Grid& grid, const PhysicsParams& params);

struct WaveField {
  Grid grid;
  double time = 0.0;
  std::vector<cplx> amp;

  WaveField() = default;
  WaveField(Grid g, double t, std::vector<cplx> a);
  WaveField(Grid g, double t);
};

cplx inner_product(const WaveField& psi, const WaveField& phi);
double norm_squared(const WaveField& psi);
double norm(const WaveField& psi);
WaveField normalize(const WaveField& psi);
double l2_distance(const WaveField& a, const WaveField& b);

/// Riemann sum of a real field times the cell volume.
double integrate(const Grid& grid, std::span<const double> field);

}  // namespace wc
