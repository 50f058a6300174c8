#include "wc/worlds.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#include "wc/interp.hpp"

namespace wc {

FieldSeries::FieldSeries(Grid grid, double t0, double dt_frame, std::vector<VectorField> fields,
                         std::vector<Mask> masks)
    : grid_(std::move(grid)), t0_(t0), dt_frame_(dt_frame), fields_(std::move(fields)),
      masks_(std::move(masks)) {
  if (fields_.size() != masks_.size()) throw Error("FieldSeries: fields and masks differ in count");
  if (fields_.size() >= 2 && !(dt_frame_ > 0.0)) throw Error("FieldSeries: dt_frame must be > 0");
}

FieldSeries FieldSeries::velocity(const FrameStore& store, double node_fraction) {
  const Grid& g = store.grid();
  std::vector<VectorField> fields(store.size());
  std::vector<Mask> masks(store.size());
  Fft fft(g);
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(store.size()); ++k) {
    auto f = flow_frame(store.frames[static_cast<std::size_t>(k)], store.params, fft, node_fraction);
    fields[static_cast<std::size_t>(k)] = std::move(f.velocity);
    masks[static_cast<std::size_t>(k)] = std::move(f.node_mask);
  }
  return FieldSeries(g, store.t0(), store.dt_frame, std::move(fields), std::move(masks));
}

bool FieldSeries::usable(const Point& q, std::size_t k) const {
  auto s = stencil_at(grid_, q, order_);
  const auto& m = masks_[k];
  for (int i = 0; i < s.count; ++i)
    if (m[s.index[i]]) return false;
  return true;
}

std::optional<Point> FieldSeries::sample(const Point& q, double t) const {
  const std::size_t nf = frames();
  std::size_t k = 0;
  double w = 0.0;
  if (nf >= 2) {
    double u = (t - t0_) / dt_frame_;
    double f = std::floor(u);
    long kk = std::clamp(static_cast<long>(f), 0L, static_cast<long>(nf) - 2);
    k = static_cast<std::size_t>(kk);
    w = std::clamp(u - static_cast<double>(kk), 0.0, 1.0);
  }
  auto s = stencil_at(grid_, q, order_);
  Point v{0.0, 0.0};
  for (std::size_t frame = k; frame <= std::min(k + 1, nf - 1); ++frame) {
    double tw = (frame == k) ? 1.0 - w : w;
    if (nf == 1) tw = 1.0;
    const auto& m = masks_[frame];
    for (int i = 0; i < s.count; ++i)
      if (m[s.index[i]]) return std::nullopt;
    for (int a = 0; a < grid_.dim(); ++a)
      v[a] += tw * interpolate(s, std::span<const double>(fields_[frame][static_cast<std::size_t>(a)]));
  }
  return v;
}

std::string to_string(TrajectoryStatus s) {
  return s == TrajectoryStatus::Completed ? "completed" : "aborted-near-node";
}

std::vector<Point> TrajectoryBundle::positions_at(std::size_t k) const {
  std::vector<Point> out;
  out.reserve(trajectories.size());
  for (const auto& tr : trajectories) out.push_back(tr.samples.at(std::min(k, tr.samples.size() - 1)).q);
  return out;
}

std::size_t TrajectoryBundle::completed() const {
  return static_cast<std::size_t>(std::count_if(trajectories.begin(), trajectories.end(), [](const auto& t) {
    return t.status == TrajectoryStatus::Completed;
  }));
}

namespace {

Point axpy(const Point& q, double h, const Point& v) { return {q[0] + h * v[0], q[1] + h * v[1]}; }

}  // namespace

Trajectory integrate_trajectory(const FieldSeries& velocity, const Point& q0, double dt_traj,
                                std::size_t start_frame) {
  if (!(dt_traj > 0.0)) throw Error("integrate_trajectory: dt_traj must be > 0");
  if (start_frame >= velocity.frames()) throw Error("integrate_trajectory: start frame out of range");
  const Grid& g = velocity.grid();
  if (!g.contains(q0)) throw Error("integrate_trajectory: initial point outside the grid extents");
  if (!velocity.usable(q0, start_frame))
    throw NumericalError("integrate_trajectory: initial point lies on a node (rho below threshold)");

  Trajectory tr;
  tr.initial = q0;
  tr.samples.reserve(velocity.frames() - start_frame);
  tr.samples.push_back({velocity.time(start_frame), q0});
  const double dtf = velocity.dt_frame();
  const std::size_t m = velocity.frames() < 2
                            ? 1
                            : static_cast<std::size_t>(std::max(1.0, std::ceil(dtf / dt_traj - 1e-9)));
  const double h = dtf / static_cast<double>(m);
  Point q = q0;
  for (std::size_t k = start_frame; k + 1 < velocity.frames(); ++k) {
    const double tk = velocity.time(k);
    for (std::size_t s = 0; s < m; ++s) {
      const double t = tk + static_cast<double>(s) * h;
      auto k1 = velocity.sample(q, t);
      auto k2 = k1 ? velocity.sample(axpy(q, 0.5 * h, *k1), t + 0.5 * h) : std::nullopt;
      auto k3 = k2 ? velocity.sample(axpy(q, 0.5 * h, *k2), t + 0.5 * h) : std::nullopt;
      auto k4 = k3 ? velocity.sample(axpy(q, h, *k3), t + h) : std::nullopt;
      if (!k4) {
        tr.status = TrajectoryStatus::AbortedNearNode;
        return tr;
      }
      for (int a = 0; a < 2; ++a)
        q[a] += h / 6.0 * ((*k1)[a] + 2.0 * (*k2)[a] + 2.0 * (*k3)[a] + (*k4)[a]);
      if (!g.contains(q))
        throw Error("integrate_trajectory: trajectory left the grid extents at t=" +
                    std::to_string(t + h) + "; enlarge the grid");
    }
    tr.samples.push_back({velocity.time(k + 1), q});
  }
  return tr;
}

Trajectory integrate_trajectory(const FrameStore& store, const Point& q0, double dt_traj) {
  return integrate_trajectory(FieldSeries::velocity(store), q0, dt_traj);
}

TrajectoryBundle trajectory_function(const FieldSeries& velocity, const std::vector<Point>& initials,
                                     double dt_traj, std::string seeding) {
  TrajectoryBundle b;
  b.seeding = std::move(seeding);
  b.dim = velocity.grid().dim();
  b.trajectories.resize(initials.size());
  std::exception_ptr failure;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(initials.size()); ++i) {
    try {
      b.trajectories[static_cast<std::size_t>(i)] =
          integrate_trajectory(velocity, initials[static_cast<std::size_t>(i)], dt_traj);
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return b;
}

TrajectoryBundle trajectory_function(const FrameStore& store, const std::vector<Point>& initials,
                                     double dt_traj, std::string seeding) {
  return trajectory_function(FieldSeries::velocity(store), initials, dt_traj, std::move(seeding));
}

std::vector<Point> linspace_seeds(double lo, double hi, std::size_t count) {
  if (count < 2) throw Error("linspace_seeds: need at least two points");
  std::vector<Point> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = {lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1), 0.0};
  return out;
}

std::vector<Point> linspace_seeds(std::pair<double, double> x, std::pair<double, double> y,
                                  std::size_t nx, std::size_t ny) {
  auto xs = linspace_seeds(x.first, x.second, nx);
  auto ys = linspace_seeds(y.first, y.second, ny);
  std::vector<Point> out;
  for (const auto& px : xs)
    for (const auto& py : ys) out.push_back({px[0], py[0]});
  return out;
}

Lattice density_lattice(const Grid& grid, const std::vector<double>& rho0, std::size_t refine,
                        double eps) {
  if (refine == 0) throw Error("density_lattice: refine must be >= 1");
  if (rho0.size() != grid.size()) throw Error("density_lattice: rho0 does not match grid");
  std::vector<Axis> fine;
  for (const auto& ax : grid.axes()) fine.push_back({ax.lo, ax.hi, ax.n * refine});
  Grid lg(fine);
  Lattice lat;
  lat.cell_volume = lg.cell_volume();
  lat.spacing = lg.min_spacing();
  std::span<const double> r(rho0);
  for (std::size_t i = 0; i < lg.size(); ++i) {
    Point q = lg.point(i);
    double v = interpolate(grid, r, q);
    if (v >= eps && v > 0.0) {
      lat.points.push_back(q);
      lat.mass.push_back(v * lat.cell_volume);
    }
  }
  return lat;
}

CrossingReport check_no_crossing(const TrajectoryBundle& bundle, double collision_radius) {
  CrossingReport rep;
  const auto& trs = bundle.trajectories;
  if (trs.size() < 2) return rep;
  std::size_t max_samples = 0;
  for (const auto& t : trs) max_samples = std::max(max_samples, t.samples.size());

  if (bundle.dim == 1) {
    std::vector<std::size_t> order(trs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return trs[a].initial[0] < trs[b].initial[0]; });
    for (std::size_t k = 0; k < max_samples; ++k) {
      ++rep.samples_checked;
      const Trajectory* prev = nullptr;
      std::size_t prev_id = 0;
      for (std::size_t id : order) {
        const auto& t = trs[id];
        if (k >= t.samples.size()) continue;
        if (prev && !(t.samples[k].q[0] > prev->samples[k].q[0]))
          rep.violations.push_back({k, t.samples[k].t, prev_id, id});
        prev = &t;
        prev_id = id;
      }
    }
    return rep;
  }

  const double r2 = collision_radius * collision_radius;
  for (std::size_t k = 0; k < max_samples; ++k) {
    ++rep.samples_checked;
    for (std::size_t a = 0; a < trs.size(); ++a) {
      if (k >= trs[a].samples.size()) continue;
      for (std::size_t b = a + 1; b < trs.size(); ++b) {
        if (k >= trs[b].samples.size()) continue;
        const auto& p = trs[a].samples[k].q;
        const auto& q = trs[b].samples[k].q;
        double d2 = (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]);
        if (d2 <= r2) rep.violations.push_back({k, trs[a].samples[k].t, a, b});
      }
    }
  }
  return rep;
}

Pushforward deposit(const Grid& target, const std::vector<Point>& positions,
                    const std::vector<double>& mass) {
  if (positions.size() != mass.size()) throw Error("deposit: positions and masses differ in count");
  Pushforward out;
  out.rho.assign(target.size(), 0.0);
  const double inv = 1.0 / target.cell_volume();
  for (std::size_t p = 0; p < positions.size(); ++p) {
    auto s = stencil_at(target, positions[p]);
    for (int i = 0; i < s.count; ++i) out.rho[s.index[i]] += mass[p] * s.weight[i] * inv;
  }
  return out;
}

namespace {

// Uniform spreading of each transported 1D lattice cell over its image
// segment, with exact overlap against the target cells.
Pushforward deposit_segments(const Lattice& lattice, const std::vector<Point>& positions,
                             const Grid& target) {
  const auto& ax = target.axis(0);
  const double h = ax.spacing();
  const long n = static_cast<long>(ax.n);
  const std::size_t count = positions.size();
  Pushforward out;
  out.rho.assign(target.size(), 0.0);
  auto adjacent = [&](std::size_t a, std::size_t b) {
    return std::abs(lattice.points[b][0] - lattice.points[a][0] - lattice.spacing) < 0.5 * lattice.spacing;
  };
  for (std::size_t p = 0; p < count; ++p) {
    const double x = positions[p][0];
    const bool has_left = p > 0 && adjacent(p - 1, p);
    const bool has_right = p + 1 < count && adjacent(p, p + 1);
    double left = 0.0, right = 0.0;
    if (has_left) left = 0.5 * (x - positions[p - 1][0]);
    if (has_right) right = 0.5 * (positions[p + 1][0] - x);
    if (!has_left) left = has_right ? right : 0.5 * lattice.spacing;
    if (!has_right) right = left;
    double a = x - left, b = x + right;
    if (a > b) std::swap(a, b);
    if (b - a <= 0.0) {
      auto s = stencil_at(target, positions[p]);
      for (int i = 0; i < s.count; ++i) out.rho[s.index[i]] += lattice.mass[p] * s.weight[i] / h;
      continue;
    }
    const double density = lattice.mass[p] / (b - a);
    const double ua = (a - ax.lo) / h, ub = (b - ax.lo) / h;
    for (long j = static_cast<long>(std::floor(ua)); j <= static_cast<long>(std::floor(ub)); ++j) {
      const double overlap = std::min(ub, static_cast<double>(j + 1)) - std::max(ua, static_cast<double>(j));
      if (overlap > 0.0) out.rho[static_cast<std::size_t>(((j % n) + n) % n)] += density * overlap;
    }
  }
  return out;
}

}  // namespace

Pushforward pushforward_density(const Lattice& lattice, const std::vector<Point>& positions,
                                const Grid& target) {
  if (positions.size() != lattice.points.size())
    throw Error("pushforward_density: positions do not match the lattice");
  auto out = target.dim() == 1 ? deposit_segments(lattice, positions, target)
                                : deposit(target, positions, lattice.mass);
  if (lattice.spacing > target.min_spacing() * (1.0 + 1e-12))
    out.warning = "lattice spacing " + std::to_string(lattice.spacing) + " exceeds grid spacing " +
                  std::to_string(target.min_spacing()) + "; refine the lattice by at least " +
                  std::to_string(static_cast<int>(std::ceil(lattice.spacing / target.min_spacing())));
  return out;
}

double l1_distance(const Grid& grid, const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != grid.size() || b.size() != grid.size()) throw Error("l1_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * grid.cell_volume();
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<Point> sample_from_density(const Grid& grid, const std::vector<double>& rho,
                                       std::size_t count, std::uint64_t seed) {
  if (rho.size() != grid.size()) throw Error("sample_from_density: density does not match grid");
  double total = 0.0, peak = 0.0;
  for (double r : rho) {
    if (r < 0.0 || !std::isfinite(r)) throw Error("sample_from_density: density must be finite and >= 0");
    total += r;
    peak = std::max(peak, r);
  }
  if (!(total > 0.0)) throw Error("sample_from_density: density has zero mass");
  std::mt19937_64 rng(seed);
  std::vector<Point> out;
  out.reserve(count);

  if (grid.dim() == 1) {
    const auto& ax = grid.axis(0);
    std::vector<double> cdf(rho.size() + 1, 0.0);
    for (std::size_t i = 0; i < rho.size(); ++i) cdf[i + 1] = cdf[i] + rho[i] / total;
    for (std::size_t n = 0; n < count; ++n) {
      double u = uniform01(rng);
      auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
      std::size_t cell = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()) - 1, rho.size() - 1);
      double p = cdf[cell + 1] - cdf[cell];
      double frac = p > 0.0 ? std::clamp((u - cdf[cell]) / p, 0.0, 1.0 - 1e-15) : 0.5;
      out.push_back({ax.lo + (static_cast<double>(cell) + frac) * ax.spacing(), 0.0});
    }
    return out;
  }

  const auto& ax0 = grid.axis(0);
  const auto& ax1 = grid.axis(1);
  while (out.size() < count) {
    double x = ax0.lo + uniform01(rng) * ax0.length();
    double y = ax1.lo + uniform01(rng) * ax1.length();
    auto i0 = std::min(static_cast<std::size_t>((x - ax0.lo) / ax0.spacing()), ax0.n - 1);
    auto i1 = std::min(static_cast<std::size_t>((y - ax1.lo) / ax1.spacing()), ax1.n - 1);
    if (uniform01(rng) * peak < rho[grid.index(i0, i1)]) out.push_back({x, y});
  }
  return out;
}

}  // namespace wc
