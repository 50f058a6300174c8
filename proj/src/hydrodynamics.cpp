#include "wc/hydrodynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wc/interp.hpp"

namespace wc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double d) { return d - kTwoPi * std::round(d / kTwoPi); }

}  // namespace

std::vector<double> density(const WaveField& psi) {
  std::vector<double> rho(psi.amp.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::norm(psi.amp[i]);
  return rho;
}

VectorField current(const WaveField& psi, const PhysicsParams& params) {
  Fft fft(psi.grid);
  return current(psi, params, fft);
}

VectorField current(const WaveField& psi, const PhysicsParams& params, const Fft& fft) {
  require_same_grid(psi.grid, fft.grid(), "current");
  VectorField j;
  for (int a = 0; a < psi.grid.dim(); ++a) {
    auto d = spectral_derivative(fft, psi.amp, a);
    const double c = params.hbar / params.mass(a);
    std::vector<double> ja(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) ja[i] = c * std::imag(std::conj(psi.amp[i]) * d[i]);
    j.push_back(std::move(ja));
  }
  return j;
}

double node_threshold(const std::vector<double>& rho, double node_fraction) {
  double mx = rho.empty() ? 0.0 : *std::max_element(rho.begin(), rho.end());
  return node_fraction * mx;
}

VelocityResult velocity(const Grid& grid, const std::vector<double>& rho, const VectorField& j,
                        double eps_node) {
  if (rho.size() != grid.size() || static_cast<int>(j.size()) != grid.dim())
    throw Error("velocity: rho/current do not match grid");
  VelocityResult out;
  out.node_mask.assign(rho.size(), 0);
  out.velocity.assign(j.size(), std::vector<double>(rho.size(), 0.0));
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] >= eps_node) || rho[i] <= 0.0) {
      out.node_mask[i] = 1;
      continue;
    }
    for (std::size_t a = 0; a < j.size(); ++a) out.velocity[a][i] = j[a][i] / rho[i];
  }
  return out;
}

FlowFrame flow_frame(const WaveField& psi, const PhysicsParams& params, double node_fraction) {
  Fft fft(psi.grid);
  return flow_frame(psi, params, fft, node_fraction);
}

FlowFrame flow_frame(const WaveField& psi, const PhysicsParams& params, const Fft& fft,
                     double node_fraction) {
  FlowFrame f;
  f.grid = psi.grid;
  f.time = psi.time;
  f.rho = density(psi);
  f.current = current(psi, params, fft);
  auto v = velocity(psi.grid, f.rho, f.current, node_threshold(f.rho, node_fraction));
  f.velocity = std::move(v.velocity);
  f.node_mask = std::move(v.node_mask);
  return f;
}

namespace {

// Unwraps arg(psi) along a line of flat indices, starting from line[0] with
// the given phase. Cells reached only by stepping through a node are tainted.
void unwrap_line(const std::vector<std::size_t>& line, const WaveField& psi, const Mask& mask,
                 double start_phase, bool start_tainted, std::vector<double>& phase,
                 Mask& tainted) {
  double prev_arg = std::arg(psi.amp[line[0]]);
  double acc = start_phase;
  bool taint = start_tainted;
  phase[line[0]] = acc;
  tainted[line[0]] = taint;
  for (std::size_t s = 1; s < line.size(); ++s) {
    std::size_t i = line[s];
    double a = std::arg(psi.amp[i]);
    acc += wrap(a - prev_arg);
    prev_arg = a;
    if (mask[i]) taint = true;
    phase[i] = acc;
    tainted[i] = taint;
  }
}

// Indices from `start` walking outward in one direction along an axis, without wrap-around.
std::vector<std::size_t> ray(const Grid& g, std::size_t start, int axis, int dir) {
  auto idx = g.unravel(start);
  std::vector<std::size_t> out;
  long i = static_cast<long>(idx[static_cast<std::size_t>(axis)]);
  long n = static_cast<long>(g.npoints(axis));
  for (; i >= 0 && i < n; i += dir) {
    auto c = idx;
    c[static_cast<std::size_t>(axis)] = static_cast<std::size_t>(i);
    out.push_back(g.index(c[0], c[1]));
  }
  return out;
}

// Unwraps along the lines: first along `first` axis through `start`, then along
// `second` from every cell reached in the first pass.
void unwrap_pass(const WaveField& psi, const Mask& mask, std::size_t start, int first, int second,
                 std::vector<double>& phase, Mask& tainted) {
  const Grid& g = psi.grid;
  const double p0 = std::arg(psi.amp[start]);
  std::vector<std::size_t> spine;
  for (int dir : {+1, -1}) {
    auto line = ray(g, start, first, dir);
    unwrap_line(line, psi, mask, p0, mask[start] != 0, phase, tainted);
    spine.insert(spine.end(), line.begin(), line.end());
  }
  if (g.dim() == 1) return;
  for (std::size_t s : spine) {
    double ps = phase[s];
    bool ts = tainted[s] != 0;
    for (int dir : {+1, -1}) unwrap_line(ray(g, s, second, dir), psi, mask, ps, ts, phase, tainted);
  }
}

}  // namespace

PolarFields polar_fields(const WaveField& psi, double node_fraction) {
  const Grid& g = psi.grid;
  PolarFields out;
  auto rho = density(psi);
  const double eps = node_threshold(rho, node_fraction);
  out.amplitude.resize(rho.size());
  out.node_mask.assign(rho.size(), 0);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    out.amplitude[i] = std::sqrt(rho[i]);
    out.node_mask[i] = rho[i] < eps || rho[i] <= 0.0;
  }
  const std::size_t start =
      static_cast<std::size_t>(std::max_element(rho.begin(), rho.end()) - rho.begin());
  out.phase.assign(rho.size(), 0.0);
  Mask tainted(rho.size(), 0);
  unwrap_pass(psi, out.node_mask, start, 0, 1, out.phase, tainted);
  out.unwrap_failed = tainted;
  if (g.dim() == 2) {
    std::vector<double> alt(rho.size(), 0.0);
    Mask alt_taint(rho.size(), 0);
    unwrap_pass(psi, out.node_mask, start, 1, 0, alt, alt_taint);
    for (std::size_t i = 0; i < rho.size(); ++i)
      if (alt_taint[i] || std::abs(alt[i] - out.phase[i]) > std::numbers::pi)
        out.unwrap_failed[i] = 1;
  }
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (out.unwrap_failed[i] && !out.node_mask[i]) ++out.failed_count;
  return out;
}

double phase_winding(const WaveField& psi, const std::vector<Point>& loop) {
  if (loop.size() < 3) throw Error("phase_winding: loop needs at least 3 vertices");
  const Grid& g = psi.grid;
  const double h = 0.25 * g.min_spacing();
  std::span<const cplx> amp(psi.amp);
  double total = 0.0;
  double prev = std::arg(interpolate(g, amp, loop[0]));
  for (std::size_t v = 0; v < loop.size(); ++v) {
    const Point& a = loop[v];
    const Point& b = loop[(v + 1) % loop.size()];
    double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    int sub = std::max(1, static_cast<int>(std::ceil(len / h)));
    for (int s = 1; s <= sub; ++s) {
      double t = static_cast<double>(s) / sub;
      Point q{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
      double cur = std::arg(interpolate(g, amp, q));
      total += wrap(cur - prev);
      prev = cur;
    }
  }
  return total / kTwoPi;
}

std::vector<double> fd4_derivative(const Grid& grid, const std::vector<double>& f, int axis) {
  const double h = grid.spacing(axis);
  const long n = static_cast<long>(grid.npoints(axis));
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto idx = grid.unravel(i);
    auto at = [&](long off) {
      auto c = idx;
      long j = static_cast<long>(c[static_cast<std::size_t>(axis)]) + off;
      c[static_cast<std::size_t>(axis)] = static_cast<std::size_t>(((j % n) + n) % n);
      return f[grid.index(c[0], c[1])];
    };
    out[i] = (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h);
  }
  return out;
}

QuantumPotential quantum_potential(const Grid& grid, const std::vector<double>& rho,
                                   const PhysicsParams& params, double node_fraction,
                                   Laplacian method) {
  if (rho.size() != grid.size()) throw Error("quantum_potential: rho does not match grid");
  const double eps = node_threshold(rho, node_fraction);
  QuantumPotential out;
  out.values.assign(rho.size(), 0.0);
  out.node_mask.assign(rho.size(), 0);
  std::vector<double> r(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    r[i] = std::sqrt(std::max(rho[i], 0.0));
    out.node_mask[i] = !(rho[i] >= eps) || rho[i] <= 0.0;
  }
  const double h2 = params.hbar * params.hbar;

  if (method == Laplacian::Spectral) {
    Fft fft(grid);
    std::vector<cplx> rc(r.begin(), r.end());
    fft.forward(rc);
    for (int a = 0; a < grid.dim(); ++a) {
      std::vector<cplx> buf = rc;
      const auto& k = fft.wavenumbers(a);
      for (std::size_t i = 0; i < buf.size(); ++i) {
        double kk = k[grid.unravel(i)[static_cast<std::size_t>(a)]];
        buf[i] *= -kk * kk;
      }
      fft.backward(buf);
      const double c = -h2 / (2.0 * params.mass(a));
      for (std::size_t i = 0; i < buf.size(); ++i)
        if (!out.node_mask[i]) out.values[i] += c * buf[i].real() / r[i];
    }
    return out;
  }

  Mask stencil_mask = out.node_mask;
  for (int a = 0; a < grid.dim(); ++a) {
    const double h = grid.spacing(a);
    const long n = static_cast<long>(grid.npoints(a));
    const double c = -h2 / (2.0 * params.mass(a));
    for (std::size_t i = 0; i < r.size(); ++i) {
      auto idx = grid.unravel(i);
      auto at = [&](long off) {
        auto cc = idx;
        long j = static_cast<long>(cc[static_cast<std::size_t>(a)]) + off;
        cc[static_cast<std::size_t>(a)] = static_cast<std::size_t>(((j % n) + n) % n);
        return grid.index(cc[0], cc[1]);
      };
      bool touches = false;
      for (long off = -2; off <= 2; ++off) touches |= out.node_mask[at(off)] != 0;
      if (touches) {
        stencil_mask[i] = 1;
        continue;
      }
      double lap = (-r[at(-2)] + 16.0 * r[at(-1)] - 30.0 * r[i] + 16.0 * r[at(1)] - r[at(2)]) /
                   (12.0 * h * h);
      out.values[i] += c * lap / r[i];
    }
  }
  for (std::size_t i = 0; i < r.size(); ++i)
    if (stencil_mask[i]) out.values[i] = 0.0;
  out.node_mask = std::move(stencil_mask);
  return out;
}

std::vector<double> divergence(const Fft& fft, const VectorField& field) {
  const Grid& g = fft.grid();
  std::vector<double> out(g.size(), 0.0);
  for (int a = 0; a < g.dim(); ++a) {
    const auto& fa = field.at(static_cast<std::size_t>(a));
    std::vector<cplx> c(fa.begin(), fa.end());
    auto d = spectral_derivative(fft, c, a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i].real();
  }
  return out;
}

ContinuityResidual continuity_residual(const FrameStore& store, std::size_t k) {
  if (store.size() < 3 || k < 1 || k + 1 >= store.size())
    throw Error("continuity_residual: frame index " + std::to_string(k) + " outside [1, " +
                std::to_string(store.size() >= 2 ? store.size() - 2 : 0) + "]");
  const Grid& g = store.grid();
  Fft fft(g);
  auto rho_prev = density(store.frames[k - 1]);
  auto rho_next = density(store.frames[k + 1]);
  auto j = current(store.frames[k], store.params, fft);
  auto div = divergence(fft, j);
  ContinuityResidual out;
  out.field.resize(g.size());
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.field[i] = (rho_next[i] - rho_prev[i]) / (2.0 * store.dt_frame) + div[i];
    s += out.field[i] * out.field[i];
  }
  out.l2 = std::sqrt(s * g.cell_volume());
  return out;
}

}  // namespace wc
