#include "wc/propagator.hpp"

#include <cmath>

namespace wc {

namespace {

bool kinetic_enabled(const PhysicsParams& p) {
  const auto* c = std::get_if<PointerCoupling>(&p.potential);
  return c == nullptr || c->include_kinetic;
}

double sum_norm(const std::vector<cplx>& a) {
  double s = 0.0;
  for (const auto& z : a) s += std::norm(z);
  return s;
}

}  // namespace

double FrameStore::norm_drift() const {
  const double n0 = norm(frames.at(0));
  double worst = 0.0;
  for (const auto& f : frames) worst = std::max(worst, std::abs(norm(f) - n0) / n0);
  return worst;
}

SplitOperator::SplitOperator(const Grid& grid, const PhysicsParams& params)
    : grid_(grid), params_(params), fft_(grid) {
  params_.validate(grid.dim());
  potential_ = potential_field(grid, params_);
  kinetic_.assign(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto idx = grid.unravel(i);
    for (int a = 0; a < grid.dim(); ++a) {
      double k = fft_.wavenumbers(a)[idx[static_cast<std::size_t>(a)]];
      kinetic_[i] += params_.hbar * k * k / (2.0 * params_.mass(a));
    }
  }
  if (const auto* c = std::get_if<PointerCoupling>(&params_.potential)) {
    coupling_.assign(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      auto idx = grid.unravel(i);
      double x = grid.axis(c->system_axis).coord(idx[static_cast<std::size_t>(c->system_axis)]);
      double kz = fft_.wavenumbers(c->pointer_axis)[idx[static_cast<std::size_t>(c->pointer_axis)]];
      coupling_[i] = c->g * c->eigenvalue_at(x) * kz;
    }
  }
}

void SplitOperator::prepare(double dt) const {
  if (dt == prepared_dt_ && !half_v_.empty()) return;
  const double hbar = params_.hbar;
  half_v_.resize(grid_.size());
  half_t_.resize(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    half_v_[i] = std::exp(cplx(0.0, -potential_[i] * dt / (2.0 * hbar)));
    half_t_[i] = std::exp(cplx(0.0, -kinetic_[i] * dt / 2.0));
  }
  full_w_.clear();
  if (!coupling_.empty()) {
    full_w_.resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) full_w_[i] = std::exp(cplx(0.0, -coupling_[i] * dt));
  }
  prepared_dt_ = dt;
}

void SplitOperator::advance(WaveField& psi, double dt, std::size_t n_steps) const {
  require_same_grid(psi.grid, grid_, "SplitOperator::advance");
  prepare(dt);
  const bool kinetic = kinetic_enabled(params_);
  const bool coupled = !full_w_.empty();
  auto& a = psi.amp;
  const std::size_t n = a.size();
  double prev = sum_norm(a);
  for (std::size_t s = 0; s < n_steps; ++s) {
    if (kinetic) {
      for (std::size_t i = 0; i < n; ++i) a[i] *= half_v_[i];
      fft_.forward(a);
      for (std::size_t i = 0; i < n; ++i) a[i] *= half_t_[i];
      if (!coupled) {
        for (std::size_t i = 0; i < n; ++i) a[i] *= half_t_[i];
      }
      fft_.backward(a);
    }
    if (coupled) {
      const int pa = std::get<PointerCoupling>(params_.potential).pointer_axis;
      fft_.forward_axis(pa, a);
      for (std::size_t i = 0; i < n; ++i) a[i] *= full_w_[i];
      fft_.backward_axis(pa, a);
      if (kinetic) {
        fft_.forward(a);
        for (std::size_t i = 0; i < n; ++i) a[i] *= half_t_[i];
        fft_.backward(a);
      }
    }
    if (kinetic) {
      for (std::size_t i = 0; i < n; ++i) a[i] *= half_v_[i];
    }
    psi.time += dt;

    double now = sum_norm(a);
    if (!std::isfinite(now))
      throw NumericalError("propagator: non-finite amplitude at t=" + std::to_string(psi.time) +
                           " (potential overflow?)");
    if (std::abs(now - prev) > step_norm_tolerance * prev)
      throw NumericalError("propagator: per-step norm drift " +
                           std::to_string(std::abs(now - prev) / prev) +
                           " exceeds tolerance; reduce dt_step");
    prev = now;
  }
}

FrameStore evolve(const WaveField& psi0, const PhysicsParams& params, double dt_step,
                  std::size_t n_steps, std::size_t frame_stride) {
  if (!(dt_step > 0.0)) throw Error("evolve: dt_step must be > 0");
  if (frame_stride == 0 || n_steps % frame_stride != 0)
    throw Error("evolve: frame_stride must be >= 1 and divide n_steps");
  SplitOperator op(psi0.grid, params);
  FrameStore store;
  store.dt_step = dt_step;
  store.frame_stride = frame_stride;
  store.dt_frame = dt_step * static_cast<double>(frame_stride);
  store.params = params;
  store.frames.reserve(n_steps / frame_stride + 1);
  store.frames.push_back(psi0);
  WaveField psi = psi0;
  const double t0 = psi0.time;
  for (std::size_t done = 0; done + frame_stride <= n_steps; done += frame_stride) {
    op.advance(psi, dt_step, frame_stride);
    // Pin frame times to the uniform lattice so accumulated rounding does not
    // leak into interpolation weights downstream.
    psi.time = t0 + static_cast<double>(store.frames.size()) * store.dt_frame;
    store.frames.push_back(psi);
  }
  return store;
}

FrameStore subsample(const FrameStore& store, std::size_t every) {
  if (every == 0) throw Error("subsample: every must be >= 1");
  if ((store.size() - 1) % every != 0) throw Error("subsample: frame count is not commensurate with the factor");
  FrameStore out;
  out.dt_frame = store.dt_frame * static_cast<double>(every);
  out.dt_step = store.dt_step;
  out.frame_stride = store.frame_stride * every;
  out.params = store.params;
  for (std::size_t k = 0; k < store.size(); k += every) out.frames.push_back(store.frames[k]);
  return out;
}

WaveField evolve_piecewise(const WaveField& psi0, const std::vector<EvolutionSegment>& segments) {
  WaveField psi = psi0;
  for (const auto& seg : segments) {
    if (seg.n_steps == 0) continue;
    SplitOperator op(psi.grid, seg.params);
    op.advance(psi, seg.dt, seg.n_steps);
  }
  return psi;
}

double expected_energy(const WaveField& psi, const PhysicsParams& params) {
  params.validate(psi.grid.dim());
  const Grid& g = psi.grid;
  Fft fft(g);
  const double n2 = sum_norm(psi.amp);
  if (!(n2 > 0.0)) throw Error("expected_energy: zero field");

  double potential = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) potential += potential_at(params, g.point(i)) * std::norm(psi.amp[i]);
  potential /= n2;

  double kinetic = 0.0;
  if (kinetic_enabled(params)) {
    std::vector<cplx> spec = psi.amp;
    fft.forward(spec);
    double weight = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto idx = g.unravel(i);
      double e = 0.0;
      for (int a = 0; a < g.dim(); ++a) {
        double k = fft.wavenumbers(a)[idx[static_cast<std::size_t>(a)]];
        e += params.hbar * params.hbar * k * k / (2.0 * params.mass(a));
      }
      kinetic += e * std::norm(spec[i]);
      weight += std::norm(spec[i]);
    }
    kinetic /= weight;
  }

  double coupling = 0.0;
  if (const auto* c = std::get_if<PointerCoupling>(&params.potential)) {
    std::vector<cplx> mixed = psi.amp;
    fft.forward_axis(c->pointer_axis, mixed);
    double weight = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto idx = g.unravel(i);
      double x = g.axis(c->system_axis).coord(idx[static_cast<std::size_t>(c->system_axis)]);
      double kz = fft.wavenumbers(c->pointer_axis)[idx[static_cast<std::size_t>(c->pointer_axis)]];
      coupling += c->g * c->eigenvalue_at(x) * params.hbar * kz * std::norm(mixed[i]);
      weight += std::norm(mixed[i]);
    }
    coupling /= weight;
  }
  return kinetic + potential + coupling;
}

}  // namespace wc
