#include "wc/miw.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>

#include "wc/fft.hpp"
#include "wc/interp.hpp"

namespace wc {

std::vector<Point> sample_worlds(const Grid& grid, const std::vector<double>& rho0, std::size_t K,
                                 std::uint64_t seed) {
  if (K < 2) throw Error("sample_worlds: K must be >= 2");
  return sample_from_density(grid, rho0, K, seed);
}

namespace {

// d^(o0) / dq0^(o0) d^(o1) / dq1^(o1) of a field given by its spectrum.
std::vector<cplx> partial(const Fft& fft, const std::vector<cplx>& spectrum, std::array<int, 2> order) {
  const Grid& g = fft.grid();
  std::vector<cplx> out = spectrum;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto idx = g.unravel(i);
    cplx f = 1.0;
    for (int a = 0; a < g.dim(); ++a) {
      const auto ia = idx[static_cast<std::size_t>(a)];
      const int o = order[static_cast<std::size_t>(a)];
      if (o == 0) continue;
      if (o % 2 == 1 && 2 * ia == g.npoints(a)) {
        f = 0.0;
        break;
      }
      const cplx ik(0.0, fft.wavenumbers(a)[ia]);
      for (int p = 0; p < o; ++p) f *= ik;
    }
    out[i] *= f;
  }
  fft.backward(out);
  return out;
}

}  // namespace

FieldSeries quantum_force_series(const FrameStore& store, double node_fraction) {
  const Grid& g = store.grid();
  const int dim = g.dim();
  const auto& params = store.params;
  const double hbar = params.hbar;
  const auto vpot = potential_field(g, params);
  std::vector<std::vector<double>> grad_v;
  for (int a = 0; a < dim; ++a) grad_v.push_back(fd4_derivative(g, vpot, a));
  const Fft fft(g);

  std::vector<VectorField> fields(store.size());
  std::vector<Mask> masks(store.size());
#pragma omp parallel for schedule(dynamic)
  for (long kk = 0; kk < static_cast<long>(store.size()); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    const auto& psi = store.frames[k].amp;
    const auto rho = density(store.frames[k]);
    const double eps = node_threshold(rho, node_fraction);
    std::vector<cplx> spec = psi;
    fft.forward(spec);

    // Logarithmic derivatives u_a = d_a psi / psi, w_ab, z_aab of the smooth
    // wavefunction give Q and grad Q without differentiating sqrt(rho).
    using Field = std::vector<cplx>;
    std::array<Field, 2> d1;
    std::array<std::array<Field, 2>, 2> d2;
    std::array<std::array<Field, 2>, 2> d3;  // d3[a][b] = d_a d_a d_b psi
    for (int a = 0; a < dim; ++a) {
      std::array<int, 2> o{0, 0};
      o[a] = 1;
      d1[a] = partial(fft, spec, o);
      for (int b = 0; b < dim; ++b) {
        std::array<int, 2> o2{0, 0};
        o2[a] += 1;
        o2[b] += 1;
        if (b >= a) d2[a][b] = partial(fft, spec, o2);
        std::array<int, 2> o3{0, 0};
        o3[a] += 2;
        o3[b] += 1;
        d3[a][b] = partial(fft, spec, o3);
      }
    }
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < a; ++b) d2[a][b] = d2[b][a];

    Mask mask(g.size(), 0);
    VectorField force(static_cast<std::size_t>(dim), std::vector<double>(g.size(), 0.0));
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(rho[i] >= eps) || rho[i] <= 0.0) {
        mask[i] = 1;
        continue;
      }
      const cplx inv = 1.0 / psi[i];
      std::array<cplx, 2> u{};
      std::array<double, 2> v{};
      for (int a = 0; a < dim; ++a) {
        u[a] = d1[a][i] * inv;
        v[a] = hbar / params.mass(a) * u[a].imag();
      }
      for (int b = 0; b < dim; ++b) {
        double dq = 0.0;
        for (int a = 0; a < dim; ++a) {
          const double ma = params.mass(a);
          const cplx waa = d2[a][a][i] * inv;
          const cplx wab = d2[a][b][i] * inv;
          const cplx zaab = d3[a][b][i] * inv;
          const double dv = hbar / ma * (wab - u[a] * u[b]).imag();
          dq += -hbar * hbar / (2.0 * ma) * (zaab - waa * u[b]).real() - ma * v[a] * dv;
        }
        force[static_cast<std::size_t>(b)][i] = -(grad_v[static_cast<std::size_t>(b)][i] + dq) / params.mass(b);
      }
    }
    fields[k] = std::move(force);
    masks[k] = std::move(mask);
  }
  return FieldSeries(g, store.t0(), store.dt_frame, std::move(fields), std::move(masks));
}

NewtonianIntegrator::NewtonianIntegrator(const FrameStore& store, double node_fraction)
    : NewtonianIntegrator(FieldSeries::velocity(store, node_fraction),
                          quantum_force_series(store, node_fraction)) {}

NewtonianIntegrator::NewtonianIntegrator(FieldSeries velocity, FieldSeries force)
    : velocity_(std::move(velocity)), force_(std::move(force)) {
  // Second-order dynamics amplifies interpolation error where the flow
  // compresses, so both fields are read with the cubic stencil.
  velocity_.set_interpolation(Interpolation::Cubic);
  force_.set_interpolation(Interpolation::Cubic);
}

WorldEnsemble NewtonianIntegrator::run(const std::vector<Point>& initials, double dt,
                                       std::size_t record_stride, std::uint64_t seed,
                                       std::string provenance) const {
  if (!(dt > 0.0)) throw Error("newtonian_trajectories: dt must be > 0");
  if (record_stride == 0) throw Error("newtonian_trajectories: record_stride must be >= 1");
  const Grid& g = force_.grid();
  const std::size_t nf = force_.frames();
  std::vector<std::size_t> recorded;
  for (std::size_t k = 0; k < nf; k += record_stride) recorded.push_back(k);
  if (recorded.back() != nf - 1) recorded.push_back(nf - 1);

  WorldEnsemble ens;
  ens.K = initials.size();
  ens.seed = seed;
  ens.provenance = std::move(provenance);
  ens.dim = g.dim();
  for (std::size_t k : recorded) ens.times.push_back(force_.time(k));
  ens.positions.assign(recorded.size(), std::vector<Point>(initials.size()));
  ens.velocities.assign(recorded.size(), std::vector<Point>(initials.size()));
  ens.status.assign(initials.size(), TrajectoryStatus::Completed);

  const double dtf = force_.dt_frame();
  const std::size_t m = static_cast<std::size_t>(std::max(1.0, std::ceil(dtf / dt - 1e-9)));
  const double h = dtf / static_cast<double>(m);

  std::exception_ptr failure;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic, 64)
  for (long wi = 0; wi < static_cast<long>(initials.size()); ++wi) {
    const auto w = static_cast<std::size_t>(wi);
    try {
      Point q = initials[w];
      if (!g.contains(q)) throw Error("newtonian_trajectories: initial point outside the grid");
      auto v0 = velocity_.sample(q, velocity_.t0());
      if (!v0) throw NumericalError("newtonian_trajectories: initial point lies on a node");
      Point v = *v0;
      std::size_t rec = 0;
      auto record = [&](std::size_t k) {
        while (rec < recorded.size() && recorded[rec] == k) {
          ens.positions[rec][w] = q;
          ens.velocities[rec][w] = v;
          ++rec;
        }
      };
      record(0);
      auto acc = force_.sample(q, force_.t0());
      bool aborted = !acc;
      for (std::size_t k = 0; k + 1 < nf && !aborted; ++k) {
        for (std::size_t s = 0; s < m; ++s) {
          const double t = force_.time(k) + static_cast<double>(s) * h;
          Point qn{q[0] + v[0] * h + 0.5 * (*acc)[0] * h * h, q[1] + v[1] * h + 0.5 * (*acc)[1] * h * h};
          if (!g.contains(qn)) throw Error("newtonian_trajectories: world left the grid extents");
          auto an = force_.sample(qn, t + h);
          if (!an) {
            aborted = true;
            break;
          }
          for (int a = 0; a < 2; ++a) v[a] += 0.5 * ((*acc)[a] + (*an)[a]) * h;
          q = qn;
          acc = an;
        }
        if (!aborted) record(k + 1);
      }
      if (aborted) {
        ens.status[w] = TrajectoryStatus::AbortedNearNode;
        // Unreached samples keep the last configuration.
        for (; rec < recorded.size(); ++rec) {
          ens.positions[rec][w] = q;
          ens.velocities[rec][w] = v;
        }
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return ens;
}

WorldEnsemble newtonian_trajectories(const FrameStore& store, const std::vector<Point>& initials, double dt) {
  return NewtonianIntegrator(store).run(initials, dt);
}

double silverman_bandwidth(const std::vector<Point>& positions, int axis) {
  const std::size_t K = positions.size();
  if (K < 2) throw Error("silverman_bandwidth: need at least two worlds");
  std::vector<double> x(K);
  for (std::size_t i = 0; i < K; ++i) x[i] = positions[i][static_cast<std::size_t>(axis)];
  double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(K);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  double sd = std::sqrt(var / static_cast<double>(K - 1));
  std::sort(x.begin(), x.end());
  auto quantile = [&](double p) {
    double pos = p * static_cast<double>(K - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, K - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
  };
  double iqr = quantile(0.75) - quantile(0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(K), -0.2);
}

std::vector<double> empirical_density(const std::vector<Point>& positions, const Grid& grid, double bandwidth) {
  if (!(bandwidth > 0.0)) throw Error("empirical_density: bandwidth must be > 0");
  if (positions.empty()) throw Error("empirical_density: no worlds");
  std::vector<double> rho(grid.size(), 0.0);
  const double reach = 6.0 * bandwidth;
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  // Fixed-order accumulation keeps the result independent of thread count.
  for (const auto& p : positions) {
    std::array<std::size_t, 2> lo{0, 0}, hi{0, 0};
    for (int a = 0; a < grid.dim(); ++a) {
      const auto& ax = grid.axis(a);
      double l = (p[a] - reach - ax.lo) / ax.spacing() - 0.5;
      double r = (p[a] + reach - ax.lo) / ax.spacing() - 0.5;
      lo[a] = static_cast<std::size_t>(std::clamp(std::ceil(l), 0.0, static_cast<double>(ax.n - 1)));
      hi[a] = static_cast<std::size_t>(std::clamp(std::floor(r), 0.0, static_cast<double>(ax.n - 1)));
    }
    for (std::size_t i = lo[0]; i <= hi[0]; ++i) {
      double dx = grid.axis(0).coord(i) - p[0];
      if (grid.dim() == 1) {
        rho[i] += std::exp(-dx * dx * inv2h2);
        continue;
      }
      for (std::size_t j = lo[1]; j <= hi[1]; ++j) {
        double dy = grid.axis(1).coord(j) - p[1];
        rho[grid.index(i, j)] += std::exp(-(dx * dx + dy * dy) * inv2h2);
      }
    }
  }
  double total = integrate(grid, rho);
  if (total > 0.0)
    for (double& r : rho) r /= total;
  return rho;
}

OutcomeFrequencies miw_outcome_frequencies(const std::vector<Point>& positions, const std::vector<Region>& regions) {
  if (positions.empty()) throw Error("miw_outcome_frequencies: no worlds");
  OutcomeFrequencies out;
  out.fractions.assign(regions.size(), 0.0);
  std::size_t outside = 0;
  for (const auto& p : positions) {
    bool hit = false;
    for (std::size_t r = 0; r < regions.size(); ++r)
      if (regions[r].contains(p)) {
        out.fractions[r] += 1.0;
        hit = true;
        break;
      }
    if (!hit) ++outside;
  }
  const double K = static_cast<double>(positions.size());
  for (double& f : out.fractions) f /= K;
  out.residual = static_cast<double>(outside) / K;
  return out;
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

ConvergenceStudy miw_convergence(const NewtonianIntegrator& dynamics, const std::vector<double>& rho0,
                                 const std::vector<Region>& regions, const std::vector<double>& reference,
                                 const std::vector<std::size_t>& Ks, const std::vector<std::uint64_t>& seeds,
                                 double dt) {
  if (regions.size() != reference.size()) throw Error("miw_convergence: regions and reference differ in length");
  if (Ks.size() < 2 || seeds.empty()) throw Error("miw_convergence: need >= 2 K values and >= 1 seed");
  const Grid& g = dynamics.force().grid();
  ConvergenceStudy study;
  study.seeds = seeds;
  std::vector<double> lx, ly;
  for (std::size_t K : Ks) {
    ConvergenceRow row;
    row.K = K;
    double ss = 0.0;
    for (std::uint64_t seed : seeds) {
      auto initials = sample_worlds(g, rho0, K, seed);
      auto ens = dynamics.run(initials, dt, std::numeric_limits<std::size_t>::max() / 2, seed, "density-sampled");
      auto freq = miw_outcome_frequencies(ens.final_positions(), regions);
      double err = 0.0;
      for (std::size_t a = 0; a < regions.size(); ++a) err = std::max(err, std::abs(freq.fractions[a] - reference[a]));
      row.seed_errors.push_back(err);
      ss += err * err;
    }
    row.error = std::sqrt(ss / static_cast<double>(seeds.size()));
    lx.push_back(std::log10(static_cast<double>(K)));
    ly.push_back(std::log10(row.error));
    study.rows.push_back(std::move(row));
  }
  std::tie(study.slope, study.intercept) = fit_line(lx, ly);
  return study;
}

std::vector<Point> circle_loop(Point center, double radius, std::size_t samples, int turns, double start_angle) {
  if (samples < 3 || turns < 1 || !(radius > 0.0)) throw Error("circle_loop: bad loop parameters");
  std::vector<Point> loop;
  const std::size_t total = samples * static_cast<std::size_t>(turns);
  for (std::size_t i = 0; i < total; ++i) {
    double th = start_angle + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(samples);
    loop.push_back({center[0] + radius * std::cos(th), center[1] + radius * std::sin(th)});
  }
  return loop;
}

namespace {

QuantizationResult finish(double circulation, double h) {
  QuantizationResult r;
  r.circulation = circulation;
  r.ratio = circulation / h;
  r.n = std::lround(r.ratio);
  r.residual = std::abs(r.ratio - static_cast<double>(r.n));
  return r;
}

}  // namespace

QuantizationResult quantization_check(const FlowFrame& flow, const PhysicsParams& params,
                                      const std::vector<Point>& loop) {
  const Grid& g = flow.grid;
  if (loop.size() < 3) throw Error("quantization_check: loop needs at least 3 vertices");
  const double step = 0.25 * g.min_spacing();
  auto momentum_at = [&](const Point& q) {
    auto s = stencil_at(g, q);
    for (int i = 0; i < s.count; ++i)
      if (flow.node_mask[s.index[i]]) throw Error("quantization_check: loop crosses masked (nodal) cells");
    Point p{0.0, 0.0};
    for (int a = 0; a < g.dim(); ++a)
      p[a] = params.mass(a) * interpolate(s, std::span<const double>(flow.velocity[static_cast<std::size_t>(a)]));
    return p;
  };
  double circ = 0.0;
  for (std::size_t v = 0; v < loop.size(); ++v) {
    const Point& a = loop[v];
    const Point& b = loop[(v + 1) % loop.size()];
    Point d{b[0] - a[0], b[1] - a[1]};
    double len = std::hypot(d[0], d[1]);
    int sub = std::max(1, static_cast<int>(std::ceil(len / step)));
    Point prev = momentum_at(a);
    for (int s = 1; s <= sub; ++s) {
      double t = static_cast<double>(s) / sub;
      Point cur = momentum_at({a[0] + t * d[0], a[1] + t * d[1]});
      for (int ax = 0; ax < g.dim(); ++ax) circ += 0.5 * (prev[ax] + cur[ax]) * d[ax] / sub;
      prev = cur;
    }
  }
  return finish(circ, 2.0 * std::numbers::pi * params.hbar);
}

QuantizationResult quantization_check_phase(const WaveField& psi, const std::vector<Point>& loop) {
  // With hbar factored out, circulation / h is the winding number itself.
  double w = phase_winding(psi, loop);
  return finish(w * 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
}

}  // namespace wc
