#include "wc/configspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wc {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {}

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (const auto& a : axes_) s *= a.n;
  return axes_.empty() ? 0 : s;
}

double Grid::min_spacing() const {
  double h = axes_.at(0).spacing();
  for (const auto& a : axes_) h = std::min(h, a.spacing());
  return h;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (const auto& a : axes_) v *= a.spacing();
  return v;
}

std::array<std::size_t, 2> Grid::unravel(std::size_t flat) const {
  if (dim() == 1) return {flat, 0};
  return {flat / axes_[1].n, flat % axes_[1].n};
}

Point Grid::point(std::size_t flat) const {
  auto [i0, i1] = unravel(flat);
  Point q{axes_[0].coord(i0), 0.0};
  if (dim() == 2) q[1] = axes_[1].coord(i1);
  return q;
}

bool Grid::contains(const Point& q) const {
  for (int a = 0; a < dim(); ++a) {
    const auto& ax = axes_[static_cast<std::size_t>(a)];
    if (!(q[a] >= ax.lo && q[a] < ax.hi)) return false;
  }
  return true;
}

Grid make_grid(const std::vector<std::pair<double, double>>& extents,
               const std::vector<std::size_t>& npoints) {
  if (extents.empty() || extents.size() > 2)
    throw Error("make_grid: dimension must be 1 or 2, got " + std::to_string(extents.size()));
  if (extents.size() != npoints.size())
    throw Error("make_grid: extents and npoints differ in length");
  std::vector<Axis> axes;
  for (std::size_t a = 0; a < extents.size(); ++a) {
    auto [lo, hi] = extents[a];
    if (!std::isfinite(lo) || !std::isfinite(hi))
      throw Error("make_grid: axis " + std::to_string(a) + " has a non-finite extent");
    if (!(hi > lo))
      throw Error("make_grid: axis " + std::to_string(a) + " has zero-width or reversed extent");
    if (npoints[a] < 8 || !is_power_of_two(npoints[a]))
      throw Error("make_grid: axis " + std::to_string(a) + " point count " +
                  std::to_string(npoints[a]) + " is not a power of two >= 8");
    axes.push_back({lo, hi, npoints[a]});
  }
  return Grid(std::move(axes));
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw Error(std::string(what) + ": grid mismatch");
}

double PointerCoupling::eigenvalue_at(double x) const {
  for (std::size_t i = 0; i < intervals.size(); ++i)
    if (x >= intervals[i].first && x < intervals[i].second) return eigenvalues[i];
  return 0.0;
}

void PhysicsParams::validate(int dim) const {
  if (!(hbar > 0.0)) throw Error("physics: hbar must be > 0");
  if (static_cast<int>(masses.size()) != dim)
    throw Error("physics: expected " + std::to_string(dim) + " masses, got " +
                std::to_string(masses.size()));
  for (double m : masses)
    if (!(m > 0.0)) throw Error("physics: every mass must be > 0");
  if (const auto* c = std::get_if<PointerCoupling>(&potential)) {
    if (dim != 2) throw Error("physics: pointer coupling needs a 2D grid");
    if (c->intervals.size() != c->eigenvalues.size())
      throw Error("physics: pointer coupling intervals/eigenvalues differ in length");
    if (c->system_axis == c->pointer_axis)
      throw Error("physics: system and pointer axes must differ");
  }
}

PhysicsParams default_params(int dim) {
  PhysicsParams p;
  p.masses.assign(static_cast<std::size_t>(dim), 1.0);
  return p;
}

double potential_at(const PhysicsParams& params, const Point& q) {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HarmonicPotential>) {
          double e = 0.0;
          for (std::size_t a = 0; a < params.masses.size(); ++a) {
            double d = q[a] - v.center[a];
            e += 0.5 * params.masses[a] * v.omega * v.omega * d * d;
          }
          return e;
        } else if constexpr (std::is_same_v<T, BarrierPotential>) {
          return std::abs(q[static_cast<std::size_t>(v.axis)] - v.center) < 0.5 * v.width ? v.height
                                                                                            : 0.0;
        } else {
          return 0.0;
        }
      },
      params.potential);
}

std::vector<double> potential_field(const Grid& grid, const PhysicsParams& params) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = potential_at(params, grid.point(i));
  return out;
}

WaveField::WaveField(Grid g, double t, std::vector<cplx> a)
    : grid(std::move(g)), time(t), amp(std::move(a)) {
  if (amp.size() != grid.size())
    throw Error("WaveField: amplitude count " + std::to_string(amp.size()) +
                " does not match grid size " + std::to_string(grid.size()));
}

WaveField::WaveField(Grid g, double t) : grid(std::move(g)), time(t), amp(grid.size()) {}

cplx inner_product(const WaveField& psi, const WaveField& phi) {
  require_same_grid(psi.grid, phi.grid, "inner_product");
  cplx s = 0.0;
  for (std::size_t i = 0; i < psi.amp.size(); ++i) s += std::conj(psi.amp[i]) * phi.amp[i];
  return s * psi.grid.cell_volume();
}

double norm_squared(const WaveField& psi) {
  double s = 0.0;
  for (const auto& z : psi.amp) s += std::norm(z);
  return s * psi.grid.cell_volume();
}

double norm(const WaveField& psi) { return std::sqrt(norm_squared(psi)); }

WaveField normalize(const WaveField& psi) {
  double n = norm(psi);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error("normalize: field has zero or non-finite norm");
  WaveField out = psi;
  for (auto& z : out.amp) z /= n;
  return out;
}

double l2_distance(const WaveField& a, const WaveField& b) {
  require_same_grid(a.grid, b.grid, "l2_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.amp.size(); ++i) s += std::norm(a.amp[i] - b.amp[i]);
  return std::sqrt(s * a.grid.cell_volume());
}

double integrate(const Grid& grid, std::span<const double> field) {
  if (field.size() != grid.size()) throw Error("integrate: field size does not match grid");
  return std::accumulate(field.begin(), field.end(), 0.0) * grid.cell_volume();
}

}  // namespace wc
