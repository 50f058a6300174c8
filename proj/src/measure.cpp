#include "wc/measure.hpp"

#include <algorithm>
#include <cmath>

namespace wc {

Region::Region(const Grid& grid, std::vector<Box> boxes, std::string name)
    : grid_(grid), boxes_(std::move(boxes)), name_(std::move(name)) {
  const std::string label = name_.empty() ? std::string("region") : "region '" + name_ + "'";
  for (const auto& box : boxes_) {
    if (static_cast<int>(box.size()) != grid_.dim())
      throw Error(label + ": box dimension does not match the grid");
    for (int a = 0; a < grid_.dim(); ++a) {
      auto [lo, hi] = box[static_cast<std::size_t>(a)];
      const auto& ax = grid_.axis(a);
      const double tol = 1e-9 * ax.length();
      if (!(hi >= lo)) throw Error(label + ": box has reversed bounds on axis " + std::to_string(a));
      if (lo < ax.lo - tol || hi > ax.hi + tol)
        throw Error(label + ": box [" + std::to_string(lo) + ", " + std::to_string(hi) +
                    ") lies outside the grid extents on axis " + std::to_string(a));
    }
  }
  cells_.assign(grid_.size(), 0);
  for (std::size_t i = 0; i < grid_.size(); ++i) cells_[i] = contains(grid_.point(i));
}

Region Region::full(const Grid& grid) {
  Box box;
  for (const auto& ax : grid.axes()) box.emplace_back(ax.lo, ax.hi);
  return Region(grid, {box}, "full");
}

bool Region::contains(const Point& q) const {
  for (const auto& box : boxes_) {
    bool in = true;
    for (std::size_t a = 0; a < box.size() && in; ++a) in = q[a] >= box[a].first && q[a] < box[a].second;
    if (in) return true;
  }
  return false;
}

double substantial_amount(const std::vector<double>& rho, const Region& region) {
  if (rho.size() != region.grid().size()) throw Error("substantial_amount: field does not match region grid");
  const auto& cells = region.cells();
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (cells[i]) s += rho[i];
  return s * region.grid().cell_volume();
}

double world_probability(const std::vector<double>& rho, const Region& region) {
  return amount_report(rho, region).proportion;
}

AmountReport amount_report(const std::vector<double>& rho, const Region& region) {
  const double total = integrate(region.grid(), rho);
  if (!(total > 0.0)) throw Error("world_probability: total world amount is zero");
  AmountReport r;
  r.raw = substantial_amount(rho, region);
  r.proportion = r.raw / total;
  return r;
}

double substantial_flow(const Grid& grid, const VectorField& j, const Surface& surface) {
  if (surface.axis < 0 || surface.axis >= grid.dim()) throw Error("substantial_flow: bad surface axis");
  if (surface.orientation != 1 && surface.orientation != -1)
    throw Error("substantial_flow: orientation must be +1 or -1");
  const auto& ax = grid.axis(surface.axis);
  if (surface.level < ax.lo || surface.level >= ax.hi)
    throw Error("substantial_flow: surface level outside the grid extents");
  const auto& ja = j.at(static_cast<std::size_t>(surface.axis));

  double u = (surface.level - ax.lo) / ax.spacing() - 0.5;
  long i0 = static_cast<long>(std::floor(u));
  double w = u - static_cast<double>(i0);
  long n = static_cast<long>(ax.n);
  std::size_t lo = static_cast<std::size_t>(((i0 % n) + n) % n);
  std::size_t hi = static_cast<std::size_t>((((i0 + 1) % n) + n) % n);

  double flux = 0.0;
  if (grid.dim() == 1) {
    flux = (1.0 - w) * ja[lo] + w * ja[hi];
  } else {
    const int other = 1 - surface.axis;
    const auto& ox = grid.axis(other);
    for (std::size_t m = 0; m < ox.n; ++m) {
      double c = ox.coord(m);
      if (c < surface.bounds.first || c >= surface.bounds.second) continue;
      std::size_t a = surface.axis == 0 ? grid.index(lo, m) : grid.index(m, lo);
      std::size_t b = surface.axis == 0 ? grid.index(hi, m) : grid.index(m, hi);
      flux += ((1.0 - w) * ja[a] + w * ja[b]) * ox.spacing();
    }
  }
  return surface.orientation * flux;
}

double LatticeDensity::integrate(double a, double b) const {
  if (b < a) std::swap(a, b);
  a = std::max(a, axis.lo);
  b = std::min(b, axis.hi);
  if (!(b > a)) return 0.0;
  const double h = axis.spacing();
  double s = 0.0;
  std::size_t first = static_cast<std::size_t>(std::floor((a - axis.lo) / h));
  for (std::size_t i = std::min(first, axis.n - 1); i < axis.n; ++i) {
    double cl = axis.lo + static_cast<double>(i) * h;
    double cr = cl + h;
    if (cl >= b) break;
    double overlap = std::min(cr, b) - std::max(cl, a);
    if (overlap > 0.0) s += values[i] * overlap;
  }
  return s;
}

double LatticeDensity::at(double x) const {
  if (x < axis.lo || x > axis.hi) return 0.0;
  auto i = static_cast<std::size_t>(std::floor((x - axis.lo) / axis.spacing()));
  return values[std::min(i, axis.n - 1)];
}

namespace {

bool sampled_monotone(const Map1D& f, const Axis& ax) {
  int sign = 0;
  double prev = f.forward(ax.lo);
  for (std::size_t i = 0; i <= ax.n; ++i) {
    double x = ax.lo + static_cast<double>(i) * ax.spacing();
    double y = f.forward(x);
    if (i > 0) {
      int s = (y > prev) - (y < prev);
      if (s != 0) {
        if (sign != 0 && s != sign) return false;
        sign = s;
      }
    }
    prev = y;
  }
  return true;
}

// x in the domain with f(x) = y, clamped to the domain ends when y lies outside f's range.
double invert(const Map1D& f, const Axis& ax, double y) {
  const double fl = f.forward(ax.lo), fh = f.forward(ax.hi);
  const bool increasing = fh >= fl;
  const double ymin = std::min(fl, fh), ymax = std::max(fl, fh);
  if (y <= ymin) return increasing ? ax.lo : ax.hi;
  if (y >= ymax) return increasing ? ax.hi : ax.lo;
  if (f.inverse) return std::clamp(f.inverse(y), ax.lo, ax.hi);
  double a = ax.lo, b = ax.hi;
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
    double m = 0.5 * (a + b);
    bool below = increasing ? f.forward(m) < y : f.forward(m) > y;
    (below ? a : b) = m;
  }
  return 0.5 * (a + b);
}

}  // namespace

double pushforward_measure(const LatticeDensity& rho_x, const Map1D& f, double lo, double hi) {
  if (!f.forward) throw Error("pushforward_measure: map has no forward function");
  if (hi < lo) std::swap(lo, hi);
  if (f.preimage) {
    double s = 0.0;
    for (auto [a, b] : f.preimage(lo, hi)) s += rho_x.integrate(a, b);
    return s;
  }
  if (!f.monotone || !sampled_monotone(f, rho_x.axis))
    throw Error("pushforward_measure: map is not monotone on the domain and no preimage routine was supplied");
  double a = invert(f, rho_x.axis, lo);
  double b = invert(f, rho_x.axis, hi);
  return rho_x.integrate(std::min(a, b), std::max(a, b));
}

double induced_density(const LatticeDensity& rho_x, const Map1D& f, double y) {
  if (!f.monotone || !sampled_monotone(f, rho_x.axis))
    throw Error("induced_density: map is not monotone on the domain");
  double x = invert(f, rho_x.axis, y);
  double d;
  if (f.derivative) {
    d = f.derivative(x);
  } else {
    double h = 1e-6 * std::max(1.0, std::abs(x));
    d = (f.forward(x + h) - f.forward(x - h)) / (2.0 * h);
  }
  if (d == 0.0) throw Error("induced_density: map has a stationary point at the preimage");
  return rho_x.at(x) / std::abs(d);
}

}  // namespace wc
