#include "wc/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wc/interp.hpp"

namespace wc {

namespace {

double gaussian_overlap(double distance, double sigma) {
  return std::exp(-distance * distance / (8.0 * sigma * sigma));
}

bool in_outcome(const Outcome& o, double x) { return x >= o.lo && x < o.hi; }

void require_axes(const MeasurementSetup& s, const Grid& g) {
  if (g.dim() != 2) throw Error("measurement: the total system needs a 2D grid");
  if (s.system_axis == s.pointer_axis || s.system_axis < 0 || s.system_axis > 1 || s.pointer_axis < 0 ||
      s.pointer_axis > 1)
    throw Error("measurement: system and pointer axes must be 0 and 1 in some order");
}

}  // namespace

double MeasurementSetup::min_separation() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < outcomes.size(); ++a)
    for (std::size_t b = a + 1; b < outcomes.size(); ++b)
      m = std::min(m, std::abs(g * duration * (outcomes[a].eigenvalue - outcomes[b].eigenvalue)));
  return m;
}

std::pair<double, double> MeasurementSetup::pointer_window(std::size_t a) const {
  double sep = min_separation();
  double half = std::isfinite(sep) ? 0.5 * sep : 0.5 * separation_factor * pointer_sigma;
  double c = pointer_shift(a);
  return {c - half, c + half};
}

PointerCoupling MeasurementSetup::coupling(bool include_kinetic) const {
  PointerCoupling c;
  c.g = g;
  c.system_axis = system_axis;
  c.pointer_axis = pointer_axis;
  c.include_kinetic = include_kinetic;
  for (const auto& o : outcomes) {
    c.intervals.emplace_back(o.lo, o.hi);
    c.eigenvalues.push_back(o.eigenvalue);
  }
  return c;
}

std::vector<std::string> MeasurementSetup::validate() const {
  if (outcomes.empty()) throw Error("measurement: no outcomes");
  if (!(pointer_sigma > 0.0)) throw Error("measurement: pointer_sigma must be > 0");
  if (!(duration > 0.0)) throw Error("measurement: duration must be > 0");
  if (!(separation_factor > 0.0)) throw Error("measurement: separation_factor must be > 0");
  for (std::size_t a = 0; a < outcomes.size(); ++a) {
    if (!(outcomes[a].hi > outcomes[a].lo)) throw Error("measurement: outcome region " + std::to_string(a) + " is empty");
    for (std::size_t b = a + 1; b < outcomes.size(); ++b) {
      if (outcomes[a].lo < outcomes[b].hi && outcomes[b].lo < outcomes[a].hi)
        throw Error("measurement: outcome regions " + std::to_string(a) + " and " + std::to_string(b) +
                    " overlap");
      if (outcomes[a].eigenvalue == outcomes[b].eigenvalue)
        throw Error("measurement: outcomes " + std::to_string(a) + " and " + std::to_string(b) +
                    " share an eigenvalue");
    }
  }
  std::vector<std::string> warnings;
  double sep = min_separation();
  if (std::isfinite(sep) && sep < separation_factor * pointer_sigma) {
    warnings.push_back("quasi-orthogonality guard violated: pointer separation " + std::to_string(sep) +
                       " < " + std::to_string(separation_factor) + " sigma_z; pointer overlap " +
                       std::to_string(gaussian_overlap(sep, pointer_sigma)));
  }
  return warnings;
}

double born_probability(const WaveField& psi, std::size_t outcome, const MeasurementSetup& setup) {
  if (psi.grid.dim() != 1) throw Error("born_probability: system state must be 1D");
  const auto& o = setup.outcomes.at(outcome);
  double total = 0.0, part = 0.0;
  for (std::size_t i = 0; i < psi.amp.size(); ++i) {
    double w = std::norm(psi.amp[i]);
    total += w;
    if (in_outcome(o, psi.grid.axis(0).coord(i))) part += w;
  }
  if (!(total > 0.0)) throw Error("born_probability: zero-norm state");
  return part / total;
}

cplx ready_pointer(const MeasurementSetup& setup, double z) {
  const double s2 = setup.pointer_sigma * setup.pointer_sigma;
  return std::pow(2.0 * std::numbers::pi * s2, -0.25) * std::exp(-z * z / (4.0 * s2));
}

namespace {

void check_system_grid(const WaveField& psi, const MeasurementSetup& setup, const Grid& grid2d) {
  require_axes(setup, grid2d);
  if (psi.grid.dim() != 1) throw Error("measurement: system state must be 1D");
  if (!(psi.grid.axis(0) == grid2d.axis(setup.system_axis)))
    throw Error("measurement: system grid does not match the system axis of the 2D grid");
}

}  // namespace

WaveField ready_product(const WaveField& psi, const MeasurementSetup& setup, const Grid& grid2d) {
  check_system_grid(psi, setup, grid2d);
  WaveField out(grid2d, psi.time);
  for (std::size_t i = 0; i < grid2d.size(); ++i) {
    auto idx = grid2d.unravel(i);
    Point q = grid2d.point(i);
    out.amp[i] = psi.amp[idx[static_cast<std::size_t>(setup.system_axis)]] *
                 ready_pointer(setup, q[static_cast<std::size_t>(setup.pointer_axis)]);
  }
  return out;
}

MeasuredState impulsive_measure(const WaveField& psi, const MeasurementSetup& setup, const Grid& grid2d) {
  check_system_grid(psi, setup, grid2d);
  MeasuredState out;
  out.warnings = setup.validate();
  const auto& zax = grid2d.axis(setup.pointer_axis);
  const double margin = 4.0 * setup.pointer_sigma;
  for (std::size_t a = 0; a < setup.outcomes.size(); ++a) {
    double c = setup.pointer_shift(a);
    if (c - margin < zax.lo || c + margin > zax.hi)
      throw Error("impulsive_measure: pointer shift " + std::to_string(c) + " of outcome " +
                  std::to_string(a) + " leaves the 4-sigma margin of the pointer axis");
  }
  double sep = setup.min_separation();
  out.pointer_overlap = std::isfinite(sep) ? gaussian_overlap(sep, setup.pointer_sigma) : 0.0;

  out.psi = WaveField(grid2d, psi.time);
  const auto& xax = grid2d.axis(setup.system_axis);
  for (std::size_t i = 0; i < grid2d.size(); ++i) {
    auto idx = grid2d.unravel(i);
    std::size_t ix = idx[static_cast<std::size_t>(setup.system_axis)];
    double x = xax.coord(ix);
    double z = zax.coord(idx[static_cast<std::size_t>(setup.pointer_axis)]);
    for (std::size_t a = 0; a < setup.outcomes.size(); ++a) {
      if (!in_outcome(setup.outcomes[a], x)) continue;
      out.psi.amp[i] += psi.amp[ix] * ready_pointer(setup, z - setup.pointer_shift(a));
    }
  }
  return out;
}

WaveField dynamical_measure(const WaveField& psi, const MeasurementSetup& setup, const Grid& grid2d,
                            std::size_t n_steps, bool include_kinetic, const PhysicsParams* free_params) {
  if (n_steps == 0) throw Error("dynamical_measure: need at least one step");
  setup.validate();
  WaveField start = ready_product(psi, setup, grid2d);
  PhysicsParams p = free_params ? *free_params : default_params(2);
  p.potential = setup.coupling(include_kinetic);
  EvolutionSegment seg{p, setup.duration / static_cast<double>(n_steps), n_steps};
  return evolve_piecewise(start, {seg});
}

BranchReport branch_decompose(const WaveField& measured, const MeasurementSetup& setup) {
  const Grid& g = measured.grid;
  require_axes(setup, g);
  setup.validate();
  const auto& xax = g.axis(setup.system_axis);
  const auto& zax = g.axis(setup.pointer_axis);
  const double total = norm_squared(measured);
  if (!(total > 0.0)) throw Error("branch_decompose: zero state");

  BranchReport rep;
  std::vector<std::vector<double>> marginals;
  for (std::size_t a = 0; a < setup.outcomes.size(); ++a) {
    Branch b;
    b.eigenvalue = setup.outcomes[a].eigenvalue;
    b.window = setup.pointer_window(a);
    b.field = WaveField(g, measured.time);
    std::vector<double> marg(zax.n, 0.0);
    double inside = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto idx = g.unravel(i);
      double x = xax.coord(idx[static_cast<std::size_t>(setup.system_axis)]);
      if (!in_outcome(setup.outcomes[a], x)) continue;
      b.field.amp[i] = measured.amp[i];
      std::size_t iz = idx[static_cast<std::size_t>(setup.pointer_axis)];
      double w = std::norm(measured.amp[i]);
      marg[iz] += w;
      double z = zax.coord(iz);
      if (z >= b.window.first && z < b.window.second) inside += w;
    }
    double bn = norm_squared(b.field);
    b.weight = bn / total;
    b.coverage = bn > 0.0 ? inside * g.cell_volume() / bn : 0.0;
    rep.weight_sum += b.weight;
    double ms = 0.0;
    for (double m : marg) ms += m;
    if (ms > 0.0)
      for (double& m : marg) m /= ms;
    marginals.push_back(std::move(marg));
    rep.branches.push_back(std::move(b));
  }
  for (std::size_t a = 0; a < marginals.size(); ++a)
    for (std::size_t b = a + 1; b < marginals.size(); ++b) {
      double bc = 0.0;
      for (std::size_t j = 0; j < zax.n; ++j) bc += std::sqrt(marginals[a][j] * marginals[b][j]);
      rep.overlap = std::max(rep.overlap, bc);
    }
  rep.poorly_separated = rep.overlap > 1e-2;
  return rep;
}

Region outcome_region(const Grid& grid2d, const MeasurementSetup& setup, std::size_t outcome) {
  require_axes(setup, grid2d);
  auto [lo, hi] = setup.pointer_window(outcome);
  const auto& zax = grid2d.axis(setup.pointer_axis);
  const auto& xax = grid2d.axis(setup.system_axis);
  lo = std::max(lo, zax.lo);
  hi = std::min(hi, zax.hi);
  Box box(2);
  box[static_cast<std::size_t>(setup.system_axis)] = {xax.lo, xax.hi};
  box[static_cast<std::size_t>(setup.pointer_axis)] = {lo, hi};
  return Region(grid2d, {box}, "Q_" + std::to_string(outcome));
}

double OutcomeComparison::max_abs_difference() const {
  double m = 0.0;
  for (std::size_t a = 0; a < worlds.size(); ++a) m = std::max(m, std::abs(worlds[a] - born[a]));
  return m;
}

OutcomeComparison outcome_probability_via_worlds(const WaveField& measured, const MeasurementSetup& setup) {
  auto rep = branch_decompose(measured, setup);
  auto rho = density(measured);
  OutcomeComparison out;
  double sum = 0.0;
  for (std::size_t a = 0; a < setup.outcomes.size(); ++a) {
    double p = world_probability(rho, outcome_region(measured.grid, setup, a));
    out.worlds.push_back(p);
    out.born.push_back(rep.branches[a].weight);
    sum += p;
  }
  out.residual = 1.0 - sum;
  return out;
}

CollapseReport subjective_collapse_compare(const FrameStore& full, const MeasurementSetup& setup,
                                           std::size_t outcome, const Point& q_bar, double horizon,
                                           double dt_traj, bool enforce_dominance) {
  const Grid& g = full.grid();
  require_axes(setup, g);
  if (outcome >= setup.outcomes.size()) throw Error("subjective_collapse_compare: unknown outcome");
  const std::size_t nframes =
      static_cast<std::size_t>(std::llround(horizon / full.dt_frame)) + 1;
  if (nframes < 2 || nframes > full.size())
    throw Error("subjective_collapse_compare: horizon not covered by the frame store");

  Region qa = outcome_region(g, setup, outcome);
  const auto& o = setup.outcomes[outcome];
  if (!qa.contains(q_bar) || !in_outcome(o, q_bar[static_cast<std::size_t>(setup.system_axis)]))
    throw Error("subjective_collapse_compare: q_bar is not inside Q_a for outcome " + std::to_string(outcome));

  const WaveField& post = full.frames.front();
  auto rep = branch_decompose(post, setup);

  // Pointer-marginal amplitudes of every branch at z-bar.
  const auto& zax = g.axis(setup.pointer_axis);
  const double zbar = q_bar[static_cast<std::size_t>(setup.pointer_axis)];
  std::vector<double> amp_at(rep.branches.size(), 0.0);
  Grid zgrid({zax});
  for (std::size_t a = 0; a < rep.branches.size(); ++a) {
    std::vector<double> marg(zax.n, 0.0);
    const auto& f = rep.branches[a].field;
    for (std::size_t i = 0; i < g.size(); ++i)
      marg[g.unravel(i)[static_cast<std::size_t>(setup.pointer_axis)]] += std::norm(f.amp[i]);
    amp_at[a] = std::sqrt(std::max(0.0, interpolate(zgrid, std::span<const double>(marg), Point{zbar, 0.0})));
  }
  CollapseReport out;
  for (std::size_t a = 0; a < amp_at.size(); ++a)
    if (a != outcome)
      out.dominance = std::max(out.dominance, amp_at[outcome] > 0.0 ? amp_at[a] / amp_at[outcome]
                                                                     : std::numeric_limits<double>::infinity());
  if (enforce_dominance && !(out.dominance < 1e-6))
    throw Error("subjective_collapse_compare: q_bar lies in a branch-overlap zone (dominance ratio " +
                std::to_string(out.dominance) + ")");

  FrameStore truncated;
  truncated.dt_frame = full.dt_frame;
  truncated.dt_step = full.dt_step;
  truncated.frame_stride = full.frame_stride;
  truncated.params = full.params;
  truncated.frames.assign(full.frames.begin(), full.frames.begin() + static_cast<long>(nframes));

  const std::size_t n_steps = (nframes - 1) * full.frame_stride;
  FrameStore collapsed = evolve(rep.branches[outcome].field, full.params, full.dt_step, n_steps, full.frame_stride);

  out.full = integrate_trajectory(FieldSeries::velocity(truncated), q_bar, dt_traj);
  out.collapsed = integrate_trajectory(FieldSeries::velocity(collapsed), q_bar, dt_traj);
  const std::size_t n = std::min(out.full.samples.size(), out.collapsed.samples.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = out.full.samples[k].q;
    const auto& q = out.collapsed.samples[k].q;
    out.max_distance = std::max(out.max_distance, std::hypot(p[0] - q[0], p[1] - q[1]));
  }
  out.max_distance_spacings = out.max_distance / g.min_spacing();
  return out;
}

}  // namespace wc
