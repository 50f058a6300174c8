#include "wc/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "wc/fft.hpp"
#include "wc/hydrodynamics.hpp"
#include "wc/io.hpp"
#include "wc/miw.hpp"
#include "wc/propagator.hpp"
#include "wc/worlds.hpp"

namespace wc {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- parsing

std::string field(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(field(where, key) + ": required field is missing");
  return *it;
}

template <class T>
T as(const json& v, const std::string& where) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": has the wrong type (" + std::string(v.type_name()) + ")");
  }
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
  return as<T>(require(j, key, where), field(where, key));
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return as<T>(j.at(key), field(where, key));
}

double positive(double v, const std::string& where) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(where + ": must be a finite positive number");
  return v;
}

std::pair<double, double> interval(const json& v, const std::string& where) {
  auto a = as<std::vector<double>>(v, where);
  if (a.size() != 2) throw ConfigError(where + ": expected [lo, hi]");
  return {a[0], a[1]};
}

Point point(const json& v, const std::string& where) {
  auto a = as<std::vector<double>>(v, where);
  if (a.empty() || a.size() > 2) throw ConfigError(where + ": expected 1 or 2 coordinates");
  return {a[0], a.size() > 1 ? a[1] : 0.0};
}

std::vector<double> per_axis(const json& v, int dim, const std::string& where) {
  if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(dim), v.get<double>());
  auto a = as<std::vector<double>>(v, where);
  if (static_cast<int>(a.size()) != dim)
    throw ConfigError(where + ": expected " + std::to_string(dim) + " values");
  return a;
}

cplx coefficient(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  auto a = as<std::vector<double>>(v, where);
  if (a.size() != 2) throw ConfigError(where + ": expected a number or [re, im]");
  return {a[0], a[1]};
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Grid parse_grid(const json& j, const std::string& where) {
  const auto& ext = require(j, "extents", where);
  if (!ext.is_array()) throw ConfigError(field(where, "extents") + ": expected a list of [lo, hi]");
  std::vector<std::pair<double, double>> extents;
  for (std::size_t a = 0; a < ext.size(); ++a)
    extents.push_back(interval(ext[a], field(where, "extents[" + std::to_string(a) + "]")));
  auto n = get<std::vector<std::size_t>>(j, "npoints", where);
  try {
    return make_grid(extents, n);
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

PhysicsParams parse_physics(const json& j, int dim, const std::string& where) {
  PhysicsParams p = default_params(dim);
  if (j.is_null()) return p;
  p.hbar = get_or<double>(j, "hbar", 1.0, where);
  if (j.contains("masses")) p.masses = per_axis(j.at("masses"), dim, field(where, "masses"));
  if (j.contains("potential")) {
    const std::string w = field(where, "potential");
    const auto& pj = j.at("potential");
    auto type = get<std::string>(pj, "type", w);
    if (type == "free") {
      p.potential = FreePotential{};
    } else if (type == "harmonic") {
      HarmonicPotential h;
      h.omega = positive(get<double>(pj, "omega", w), field(w, "omega"));
      if (pj.contains("center")) {
        auto c = per_axis(pj.at("center"), dim, field(w, "center"));
        h.center = {c[0], dim > 1 ? c[1] : 0.0};
      }
      p.potential = h;
    } else if (type == "barrier") {
      BarrierPotential b;
      b.height = get<double>(pj, "height", w);
      b.width = positive(get<double>(pj, "width", w), field(w, "width"));
      b.center = get_or<double>(pj, "center", 0.0, w);
      b.axis = get_or<int>(pj, "axis", 0, w);
      if (b.axis < 0 || b.axis >= dim) throw ConfigError(field(w, "axis") + ": not an axis of the grid");
      p.potential = b;
    } else {
      throw ConfigError(field(w, "type") + ": unknown potential '" + type + "'; expected one of: free, harmonic, barrier");
    }
  }
  try {
    p.validate(dim);
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return p;
}

std::vector<NamedRegion> parse_regions(const json& j, const Grid& grid, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty list of regions");
  std::vector<NamedRegion> out;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string w = where + "[" + std::to_string(r) + "]";
    NamedRegion nr;
    nr.name = get_or<std::string>(j[r], "name", "region" + std::to_string(r), w);
    const auto& boxes = require(j[r], "boxes", w);
    if (!boxes.is_array() || boxes.empty()) throw ConfigError(field(w, "boxes") + ": expected a list of boxes");
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const std::string wb = field(w, "boxes[" + std::to_string(b) + "]");
      Box box;
      for (std::size_t a = 0; a < boxes[b].size(); ++a)
        box.push_back(interval(boxes[b][a], wb + "[" + std::to_string(a) + "]"));
      nr.boxes.push_back(box);
    }
    try {
      Region check(grid, nr.boxes, nr.name);
    } catch (const Error& e) {
      throw ConfigError(w + ": " + e.what());
    }
    out.push_back(std::move(nr));
  }
  return out;
}

MeasurementSetup parse_setup(const json& j, const Grid& grid, const std::string& where) {
  MeasurementSetup s;
  s.system_axis = get_or<int>(j, "system_axis", 0, where);
  s.pointer_axis = get_or<int>(j, "pointer_axis", 1, where);
  if (grid.dim() != 2 || s.system_axis == s.pointer_axis || s.system_axis < 0 || s.system_axis > 1 ||
      s.pointer_axis < 0 || s.pointer_axis > 1)
    throw ConfigError(where + ": a measurement needs a 2D grid with distinct system and pointer axes");
  s.pointer_sigma = positive(get_or<double>(j, "pointer_sigma", 0.5, where), field(where, "pointer_sigma"));
  s.g = get_or<double>(j, "g", 1.0, where);
  s.duration = positive(get_or<double>(j, "duration", 1.0, where), field(where, "duration"));
  s.separation_factor =
      positive(get_or<double>(j, "separation_factor", 8.0, where), field(where, "separation_factor"));
  const auto& outs = require(j, "outcomes", where);
  if (!outs.is_array() || outs.empty()) throw ConfigError(field(where, "outcomes") + ": expected a non-empty list");
  const auto& sx = grid.axis(s.system_axis);
  for (std::size_t a = 0; a < outs.size(); ++a) {
    const std::string w = field(where, "outcomes[" + std::to_string(a) + "]");
    Outcome o;
    o.eigenvalue = get<double>(outs[a], "eigenvalue", w);
    std::tie(o.lo, o.hi) = interval(require(outs[a], "region", w), field(w, "region"));
    if (o.lo < sx.lo || o.hi > sx.hi)
      throw ConfigError(field(w, "region") + ": lies outside the system axis extents");
    s.outcomes.push_back(o);
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

AnalysisSpec parse_analysis(const json& j, const ScenarioConfig& cfg, std::size_t index) {
  std::string where = "analyses[" + std::to_string(index) + "]";
  std::string type;
  if (j.is_string()) {
    type = j.get<std::string>();
  } else {
    type = get<std::string>(j, "type", where);
  }
  const json params = j.is_object() ? j : json::object();
  const auto& names = analysis_names();
  if (std::find(names.begin(), names.end(), type) == names.end()) {
    std::string best = names.front();
    for (const auto& n : names)
      if (levenshtein(type, n) < levenshtein(type, best)) best = n;
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError(where + ": unknown analysis '" + type + "'; did you mean '" + best +
                      "'? Valid analyses: " + list);
  }
  where += " (" + type + ")";

  auto need_grid = [&]() -> const Grid& {
    if (!cfg.grid) throw ConfigError(where + ": requires a grid");
    if (!cfg.run) throw ConfigError(where + ": requires a run section");
    return *cfg.grid;
  };

  if (type == "toy_model") {
    ToyModelAnalysis t;
    if (params.contains("domain")) t.domain = interval(params.at("domain"), field(where, "domain"));
    if (!(t.domain.second > t.domain.first) || t.domain.first < 0.0)
      throw ConfigError(field(where, "domain") + ": must be an increasing interval with lo >= 0");
    t.cells = get_or<std::size_t>(params, "cells", t.cells, where);
    t.a_values = get_or<std::vector<double>>(params, "a_values", t.a_values, where);
    if (params.contains("density_range"))
      t.density_range = interval(params.at("density_range"), field(where, "density_range"));
    t.density_points = get_or<std::size_t>(params, "density_points", t.density_points, where);
    if (t.cells < 1 || t.density_points < 1) throw ConfigError(where + ": counts must be >= 1");
    return t;
  }
  const Grid& grid = need_grid();
  if (type == "continuity") {
    ContinuityAnalysis c;
    if (grid.dim() != 1) throw ConfigError(where + ": the refinement study runs on 1D scenarios");
    c.levels = get_or<std::size_t>(params, "levels", c.levels, where);
    c.coarse_npoints = get_or<std::size_t>(params, "coarse_npoints", c.coarse_npoints, where);
    c.coarse_dt = positive(get_or<double>(params, "coarse_dt", c.coarse_dt, where), field(where, "coarse_dt"));
    c.time = positive(get_or<double>(params, "time", c.time, where), field(where, "time"));
    if (c.levels < 2) throw ConfigError(field(where, "levels") + ": need at least 2 levels");
    return c;
  }
  if (type == "bundle") {
    BundleAnalysis b;
    b.n = get_or<std::size_t>(params, "n", b.n, where);
    if (b.n < 2) throw ConfigError(field(where, "n") + ": need at least 2 trajectories");
    b.seeding = get_or<std::string>(params, "seeding", b.seeding, where);
    if (b.seeding != "linspace" && b.seeding != "density")
      throw ConfigError(field(where, "seeding") + ": expected 'linspace' or 'density'");
    if (b.seeding == "linspace") {
      const auto& r = require(params, "range", where);
      if (grid.dim() == 1) {
        b.range.push_back(interval(r, field(where, "range")));
      } else {
        for (std::size_t a = 0; a < r.size(); ++a)
          b.range.push_back(interval(r[a], field(where, "range[" + std::to_string(a) + "]")));
        if (b.range.size() != 2) throw ConfigError(field(where, "range") + ": expected one interval per axis");
      }
      for (std::size_t a = 0; a < b.range.size(); ++a) {
        const auto& ax = grid.axis(static_cast<int>(a));
        if (b.range[a].first < ax.lo || b.range[a].second >= ax.hi)
          throw ConfigError(field(where, "range") + ": lies outside the grid extents");
      }
    }
    if (params.contains("oracle")) {
      const auto& o = params.at("oracle");
      const std::string w = field(where, "oracle");
      auto kind = get<std::string>(o, "type", w);
      if (kind == "gaussian_spread") {
        b.oracle.kind = TrajectoryOracle::Kind::GaussianSpread;
        b.oracle.sigma0 = positive(get<double>(o, "sigma0", w), field(w, "sigma0"));
        b.oracle.center = get_or<double>(o, "center", 0.0, w);
        b.oracle.velocity = get_or<double>(o, "velocity", 0.0, w);
      } else if (kind == "static") {
        b.oracle.kind = TrajectoryOracle::Kind::Static;
      } else if (kind == "uniform") {
        b.oracle.kind = TrajectoryOracle::Kind::Uniform;
        b.oracle.velocity = get<double>(o, "velocity", w);
      } else {
        throw ConfigError(field(w, "type") + ": expected gaussian_spread, static or uniform");
      }
      if (grid.dim() != 1) throw ConfigError(w + ": trajectory oracles are 1D");
    }
    b.crossing_radius = get_or<double>(params, "crossing_radius", 0.0, where);
    b.equivariance = get_or<bool>(params, "equivariance", b.equivariance, where);
    b.refine = get_or<std::size_t>(params, "refine", b.refine, where);
    b.newtonian = get_or<bool>(params, "newtonian", b.newtonian, where);
    if (b.refine < 1) throw ConfigError(field(where, "refine") + ": must be >= 1");
    return b;
  }
  if (type == "measure") {
    MeasureAnalysis m;
    m.regions = parse_regions(require(params, "regions", where), grid, field(where, "regions"));
    const auto& rj = params.at("regions");
    for (std::size_t r = 0; r < rj.size(); ++r)
      m.expected.push_back(rj[r].contains("expected") ? std::optional<double>(rj[r].at("expected").get<double>())
                                                      : std::nullopt);
    m.frame = get_or<std::string>(params, "frame", m.frame, where);
    if (m.frame != "initial" && m.frame != "final")
      throw ConfigError(field(where, "frame") + ": expected 'initial' or 'final'");
    if (params.contains("surfaces")) {
      for (std::size_t s = 0; s < params.at("surfaces").size(); ++s) {
        const auto& sj = params.at("surfaces")[s];
        const std::string w = field(where, "surfaces[" + std::to_string(s) + "]");
        Surface sf;
        sf.axis = get<int>(sj, "axis", w);
        sf.level = get<double>(sj, "level", w);
        sf.orientation = get_or<int>(sj, "orientation", 1, w);
        if (sj.contains("bounds")) sf.bounds = interval(sj.at("bounds"), field(w, "bounds"));
        if (sf.axis < 0 || sf.axis >= grid.dim()) throw ConfigError(field(w, "axis") + ": not an axis of the grid");
        const auto& ax = grid.axis(sf.axis);
        if (sf.level < ax.lo || sf.level >= ax.hi) throw ConfigError(field(w, "level") + ": outside the grid extents");
        m.surfaces.push_back(sf);
      }
    }
    return m;
  }
  if (type == "measurement") {
    if (!cfg.measured) throw ConfigError(where + ": requires an initial_state of type 'measured'");
    MeasurementAnalysis m;
    m.outcome = get_or<std::size_t>(params, "outcome", 0, where);
    if (m.outcome >= cfg.measured->setup.outcomes.size()) throw ConfigError(field(where, "outcome") + ": no such outcome");
    m.q_bar = point(require(params, "q_bar", where), field(where, "q_bar"));
    m.horizon = positive(get_or<double>(params, "horizon", m.horizon, where), field(where, "horizon"));
    m.dt_traj = positive(get_or<double>(params, "dt_traj", cfg.run->dt_traj, where), field(where, "dt_traj"));
    m.control_g = get_or<double>(params, "control_g", m.control_g, where);
    m.control_q_bar = params.contains("control_q_bar") ? point(params.at("control_q_bar"), field(where, "control_q_bar"))
                                                       : m.q_bar;
    m.dynamical_steps = get_or<std::size_t>(params, "dynamical_steps", cfg.measured->steps, where);
    const double t_run = static_cast<double>(cfg.run->n_steps) * cfg.run->dt_step;
    if (m.horizon > t_run + 1e-9) throw ConfigError(field(where, "horizon") + ": exceeds the propagated time");
    if (!grid.contains(m.q_bar) || !grid.contains(m.control_q_bar))
      throw ConfigError(field(where, "q_bar") + ": lies outside the grid");
    return m;
  }
  if (type == "miw") {
    MiwAnalysis m;
    m.Ks = get_or<std::vector<std::size_t>>(params, "Ks", m.Ks, where);
    m.seeds = get_or<std::vector<std::uint64_t>>(params, "seeds", {}, where);
    m.seed_count = get_or<std::size_t>(params, "seed_count", m.seed_count, where);
    m.regions = parse_regions(require(params, "regions", where), grid, field(where, "regions"));
    m.dt = positive(get_or<double>(params, "dt", m.dt, where), field(where, "dt"));
    m.frame_subsample = get_or<std::size_t>(params, "frame_subsample", m.frame_subsample, where);
    m.density_K = get_or<std::size_t>(params, "density_K", m.density_K, where);
    m.dump_K = get_or<std::size_t>(params, "dump_K", m.dump_K, where);
    if (m.Ks.size() < 2) throw ConfigError(field(where, "Ks") + ": need at least two world counts");
    for (auto K : m.Ks)
      if (K < 2) throw ConfigError(field(where, "Ks") + ": every K must be >= 2");
    if (m.seeds.empty() && m.seed_count < 1) throw ConfigError(field(where, "seed_count") + ": must be >= 1");
    const std::size_t frames = cfg.run->n_steps / cfg.run->frame_stride;
    if (m.frame_subsample < 1 || frames % m.frame_subsample != 0)
      throw ConfigError(field(where, "frame_subsample") + ": must divide the stored frame count");
    if (m.density_K < 2 || m.dump_K < 2) throw ConfigError(where + ": ensemble sizes must be >= 2");
    return m;
  }
  // quantization
  QuantizationAnalysis q;
  if (grid.dim() != 2) throw ConfigError(where + ": loops need a 2D grid");
  q.frame = get_or<std::string>(params, "frame", q.frame, where);
  if (q.frame != "initial" && q.frame != "final" && q.frame != "both")
    throw ConfigError(field(where, "frame") + ": expected 'initial', 'final' or 'both'");
  const auto& loops = require(params, "loops", where);
  if (!loops.is_array() || loops.empty()) throw ConfigError(field(where, "loops") + ": expected a non-empty list");
  for (std::size_t l = 0; l < loops.size(); ++l) {
    const std::string w = field(where, "loops[" + std::to_string(l) + "]");
    QuantizationLoop lp;
    lp.center = point(require(loops[l], "center", w), field(w, "center"));
    lp.radius = positive(get<double>(loops[l], "radius", w), field(w, "radius"));
    lp.samples = get_or<std::size_t>(loops[l], "samples", lp.samples, w);
    lp.turns = get_or<int>(loops[l], "turns", 1, w);
    lp.expected = get_or<long>(loops[l], "expected", 0, w);
    for (int a = 0; a < 2; ++a) {
      const auto& ax = grid.axis(a);
      if (lp.center[a] - lp.radius < ax.lo || lp.center[a] + lp.radius >= ax.hi)
        throw ConfigError(w + ": loop leaves the grid extents");
    }
    if (lp.samples < 3 || lp.turns < 1) throw ConfigError(w + ": needs >= 3 samples and >= 1 turn");
    q.loops.push_back(lp);
  }
  return q;
}

}  // namespace

const std::vector<std::string>& analysis_names() {
  static const std::vector<std::string> names{"continuity", "bundle", "measure", "measurement",
                                              "miw", "toy_model", "quantization"};
  return names;
}

std::string analysis_name(const AnalysisSpec& spec) {
  return analysis_names().at(spec.index());
}

StateRecipe parse_recipe(const json& j, const PhysicsParams& params, const std::string& where) {
  auto type = get<std::string>(j, "type", where);
  if (type == "gaussian") {
    auto center = as<std::vector<double>>(require(j, "center", where), field(where, "center"));
    const int dim = static_cast<int>(center.size());
    auto sigma = per_axis(require(j, "sigma", where), dim, field(where, "sigma"));
    std::vector<double> k = j.contains("momentum") ? per_axis(j.at("momentum"), dim, field(where, "momentum"))
                                                   : std::vector<double>{};
    return StateRecipe::gaussian(center, sigma, k);
  }
  if (type == "harmonic") {
    auto n = get<std::vector<int>>(j, "n", where);
    const int dim = static_cast<int>(n.size());
    auto center = j.contains("center") ? per_axis(j.at("center"), dim, field(where, "center"))
                                       : std::vector<double>(n.size(), 0.0);
    std::vector<double> masses(params.masses.begin(), params.masses.begin() + std::min<long>(dim, static_cast<long>(params.masses.size())));
    return StateRecipe::harmonic_eigenstate(n, positive(get<double>(j, "omega", where), field(where, "omega")),
                                            center, masses, params.hbar);
  }
  if (type == "plane_wave") {
    auto k = get<std::vector<double>>(j, "k", where);
    cplx amp = j.contains("amplitude") ? coefficient(j.at("amplitude"), field(where, "amplitude")) : cplx(1.0);
    return StateRecipe::plane_wave(k, amp);
  }
  if (type == "vortex") {
    return StateRecipe::vortex(point(require(j, "center", where), field(where, "center")),
                               positive(get<double>(j, "sigma", where), field(where, "sigma")),
                               get<int>(j, "winding", where));
  }
  if (type == "superposition") {
    const auto& terms = require(j, "terms", where);
    if (!terms.is_array() || terms.empty()) throw ConfigError(field(where, "terms") + ": expected a non-empty list");
    std::vector<std::pair<cplx, StateRecipe>> parts;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const std::string w = field(where, "terms[" + std::to_string(t) + "]");
      cplx c = terms[t].contains("coefficient") ? coefficient(terms[t].at("coefficient"), field(w, "coefficient"))
                                                : cplx(1.0);
      parts.emplace_back(c, parse_recipe(require(terms[t], "state", w), params, field(w, "state")));
    }
    return StateRecipe::superposition(std::move(parts));
  }
  if (type == "product") {
    return StateRecipe::product(parse_recipe(require(j, "first", where), params, field(where, "first")),
                                parse_recipe(require(j, "second", where), params, field(where, "second")));
  }
  throw ConfigError(field(where, "type") + ": unknown state '" + type +
                    "'; expected gaussian, harmonic, plane_wave, vortex, superposition, product or measured");
}

ScenarioConfig parse_config(const json& j, const std::filesystem::path& source) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ScenarioConfig c;
  c.source = source;
  c.name = get<std::string>(j, "name", "");
  c.description = get_or<std::string>(j, "description", "", "");
  c.seed = get_or<std::uint64_t>(j, "seed", 0, "");
  c.output_dir = get_or<std::string>(j, "output_dir", "runs/" + c.name, "");
  if (j.contains("grid")) c.grid = parse_grid(j.at("grid"), "grid");
  const int dim = c.grid ? c.grid->dim() : 1;
  c.params = parse_physics(j.contains("physics") ? j.at("physics") : json(), dim, "physics");
  c.runtime_budget = get_or<double>(j, "runtime_budget_seconds", dim == 2 ? 600.0 : 60.0, "");
  positive(c.runtime_budget, "runtime_budget_seconds");

  if (j.contains("tolerances")) {
    const auto& tj = j.at("tolerances");
    if (!tj.is_object()) throw ConfigError("tolerances: expected an object of name: value");
    for (auto it = tj.begin(); it != tj.end(); ++it)
      c.tolerances[it.key()] = positive(as<double>(it.value(), "tolerances." + it.key()), "tolerances." + it.key());
  }
  if (j.contains("outputs")) c.frames_every = get_or<std::size_t>(j.at("outputs"), "frames_every", 0, "outputs");

  if (j.contains("run")) {
    const auto& r = j.at("run");
    RunSpec rs;
    rs.dt_step = get<double>(r, "dt_step", "run");
    if (!(rs.dt_step > 0.0) || !std::isfinite(rs.dt_step)) throw ConfigError("run.dt_step: must be > 0");
    rs.n_steps = get<std::size_t>(r, "n_steps", "run");
    if (rs.n_steps < 1) throw ConfigError("run.n_steps: must be >= 1");
    rs.frame_stride = get_or<std::size_t>(r, "frame_stride", 1, "run");
    if (rs.frame_stride < 1 || rs.n_steps % rs.frame_stride != 0)
      throw ConfigError("run.frame_stride: must be >= 1 and divide n_steps");
    rs.dt_traj = positive(get_or<double>(r, "dt_traj", rs.dt_step, "run"), "run.dt_traj");
    c.run = rs;
    if (!c.grid) throw ConfigError("grid: required when a run section is present");
    if (!j.contains("initial_state")) throw ConfigError("initial_state: required when a run section is present");
  }

  if (j.contains("initial_state")) {
    if (!c.grid) throw ConfigError("grid: required with an initial_state");
    const auto& s = j.at("initial_state");
    c.initial_state = s;
    if (get<std::string>(s, "type", "initial_state") == "measured") {
      MeasuredInitial m;
      m.setup = parse_setup(require(s, "setup", "initial_state"), *c.grid, "initial_state.setup");
      m.system = require(s, "system", "initial_state");
      auto mode = get_or<std::string>(s, "mode", "dynamical", "initial_state");
      if (mode != "dynamical" && mode != "impulsive")
        throw ConfigError("initial_state.mode: expected 'dynamical' or 'impulsive'");
      m.dynamical = mode == "dynamical";
      m.steps = get_or<std::size_t>(s, "steps", 100, "initial_state");
      auto rec = parse_recipe(m.system, default_params(1), "initial_state.system");
      if (rec.dim() != 1) throw ConfigError("initial_state.system: the measured system state must be 1D");
      c.measured = m;
    } else {
      auto rec = parse_recipe(s, c.params, "initial_state");
      if (rec.dim() != c.grid->dim())
        throw ConfigError("initial_state: state dimension does not match the grid");
    }
  }

  if (j.contains("analyses")) {
    const auto& a = j.at("analyses");
    if (!a.is_array()) throw ConfigError("analyses: expected a list");
    for (std::size_t i = 0; i < a.size(); ++i) c.analyses.push_back(parse_analysis(a[i], c, i));
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path);
}

// ---------------------------------------------------------------- running

bool RunSummary::pass() const {
  return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.pass; });
}

const Metric* RunSummary::find(const std::string& name) const {
  for (const auto& m : metrics)
    if (m.name == name) return &m;
  return nullptr;
}

json RunSummary::to_json() const {
  json ms = json::array();
  for (const auto& m : metrics) {
    json mj = {{"name", m.name}, {"analysis", m.analysis}, {"comparator", m.comparator}, {"pass", m.pass}};
    mj["value"] = std::isfinite(m.value) ? json(m.value) : json(std::isnan(m.value) ? "nan" : (m.value > 0 ? "inf" : "-inf"));
    if (m.comparator == "within") mj["threshold"] = {m.threshold, m.threshold_hi};
    else if (m.comparator != "info") mj["threshold"] = m.threshold;
    if (!m.note.empty()) mj["note"] = m.note;
    ms.push_back(mj);
  }
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  return {{"schema_version", io::kSchemaVersion},
          {"scenario", scenario},
          {"config", config.string()},
          {"seed", seed},
          {"versions", {{"worldcontinuum", kVersion}, {"fftw", "3"}}},
          {"threads", threads},
          {"runtime_seconds", runtime_seconds},
          {"pass", pass()},
          {"metrics", ms},
          {"tables", tables},
          {"artifacts", artifacts}};
}

double default_tolerance(const std::string& metric) {
  static const std::map<std::string, double> defaults{
      {"norm_drift", 1e-8},
      {"amount_drift", 1e-8},
      {"continuity_order", 0.3},
      {"trajectory_oracle_error", 1e-3},
      {"static_displacement", 1e-8},
      {"crossing_violations", 0.0},
      {"equivariance_l1", 0.02},
      {"equivariance_refinement_ratio", 1.0},
      {"newtonian_deviation", 1e-3},
      {"newtonian_initial_velocity", 1e-8},
      {"region_probability", 1e-4},
      {"born_difference", 1e-3},
      {"dynamical_impulsive_l2", 1e-6},
      {"collapse_divergence_spacings", 1e-3},
      {"control_ratio", 10.0},
      {"miw_slope", 0.15},
      {"miw_binomial_z", 3.0},
      {"toy_probability_error", 1e-6},
      {"toy_density_error", 1e-3},
      {"quantization_residual", 1e-3},
  };
  auto it = defaults.find(metric);
  if (it == defaults.end()) throw Error("no default tolerance for metric '" + metric + "'");
  return it->second;
}

namespace {

class Recorder {
 public:
  Recorder(RunSummary& s, const std::map<std::string, double>& tol) : s_(s), tol_(tol) {}

  void set_analysis(std::string a) { analysis_ = std::move(a); }

  double tolerance(const std::string& key) const {
    auto it = tol_.find(key);
    return it != tol_.end() ? it->second : default_tolerance(key);
  }
  void le(const std::string& name, double v, const std::string& key) { le_value(name, v, tolerance(key)); }
  void le_value(const std::string& name, double v, double thr) { add(name, v, "<=", thr, 0.0, v <= thr); }
  void ge_value(const std::string& name, double v, double thr) { add(name, v, ">=", thr, 0.0, v >= thr); }
  void within(const std::string& name, double v, double lo, double hi) { add(name, v, "within", lo, hi, v >= lo && v <= hi); }
  void eq(const std::string& name, double v, double target) { add(name, v, "==", target, 0.0, v == target); }
  void info(const std::string& name, double v, std::string note = {}) {
    add(name, v, "info", 0.0, 0.0, true);
    s_.metrics.back().note = std::move(note);
  }
  void fail(const std::string& name, const std::string& note) {
    add(name, std::numeric_limits<double>::quiet_NaN(), "==", 0.0, 0.0, false);
    s_.metrics.back().note = note;
  }

 private:
  void add(const std::string& name, double v, const char* cmp, double t, double t_hi, bool pass) {
    Metric m;
    m.name = name;
    m.analysis = analysis_;
    m.value = v;
    m.comparator = cmp;
    m.threshold = t;
    m.threshold_hi = t_hi;
    m.pass = pass && !std::isnan(v);
    s_.metrics.push_back(std::move(m));
  }

  RunSummary& s_;
  const std::map<std::string, double>& tol_;
  std::string analysis_ = "propagation";
};

struct Context {
  const ScenarioConfig& cfg;
  Recorder& rec;
  RunSummary& summary;
  std::filesystem::path out;
  bool write;
  std::uint64_t seed;
  const FrameStore* store = nullptr;
  std::optional<WaveField> system_psi;  // measured scenarios only

  void artifact(const std::string& name, const std::function<void(std::ostream&)>& fn) {
    if (!write) return;
    auto path = out / name;
    auto f = io::open_output(path);
    fn(f);
    summary.artifacts.push_back(path.string());
  }
};

WaveField build_initial(const ScenarioConfig& cfg, std::optional<WaveField>* system_out = nullptr) {
  const Grid& grid = *cfg.grid;
  if (cfg.measured) {
    const auto& m = *cfg.measured;
    Grid sgrid({grid.axis(m.setup.system_axis)});
    auto psi = normalize(make_state(sgrid, parse_recipe(m.system, default_params(1), "initial_state.system")));
    if (system_out) *system_out = psi;
    WaveField out = m.dynamical ? dynamical_measure(psi, m.setup, grid, m.steps)
                                : impulsive_measure(psi, m.setup, grid).psi;
    out.time = m.setup.duration;
    return out;
  }
  auto recipe = parse_recipe(*cfg.initial_state, cfg.params, "initial_state");
  auto psi = make_state(grid, recipe);
  const bool extended = !recipe.support().has_value();
  if (cfg.initial_state->value("normalize", !extended)) psi = normalize(psi);
  return psi;
}

double gaussian_spread_oracle(const TrajectoryOracle& o, const PhysicsParams& p, double x0, double t) {
  const double s = p.hbar * t / (2.0 * p.mass(0) * o.sigma0 * o.sigma0);
  return o.center + o.velocity * t + (x0 - o.center) * std::sqrt(1.0 + s * s);
}

// Exact band-limited velocity j / rho at x from the Fourier series of psi.
double spectral_velocity(const WaveField& psi, const PhysicsParams& p, double x) {
  const Grid& g = psi.grid;
  Fft fft(g);
  std::vector<cplx> spec = psi.amp;
  fft.forward(spec);
  const auto& k = fft.wavenumbers(0);
  const auto& ax = g.axis(0);
  const double n = static_cast<double>(ax.n);
  cplx val = 0.0, der = 0.0;
  for (std::size_t i = 0; i < ax.n; ++i) {
    if (2 * i == ax.n) continue;
    cplx e = std::exp(cplx(0.0, k[i] * (x - ax.coord(0)))) * spec[i] / n;
    val += e;
    der += cplx(0.0, k[i]) * e;
  }
  return p.hbar / p.mass(0) * (std::conj(val) * der).imag() / std::norm(val);
}

void run_continuity(Context& ctx, const ContinuityAnalysis& a) {
  const Grid& base = *ctx.cfg.grid;
  const auto& ax = base.axis(0);
  auto recipe = parse_recipe(*ctx.cfg.initial_state, ctx.cfg.params, "initial_state");
  std::vector<double> level_h, level_res;
  json rows = json::array();
  for (std::size_t l = 0; l < a.levels; ++l) {
    const std::size_t n = a.coarse_npoints << l;
    const double dt = a.coarse_dt / static_cast<double>(std::size_t{1} << l);
    auto g = make_grid({{ax.lo, ax.hi}}, {n});
    auto psi = normalize(make_state(g, recipe));
    const auto steps = static_cast<std::size_t>(std::llround(a.time / dt));
    auto store = evolve(psi, ctx.cfg.params, dt, steps, 1);
    auto r = continuity_residual(store, steps / 2);
    level_h.push_back(std::log2(g.spacing(0)));
    level_res.push_back(std::log2(r.l2));
    rows.push_back({{"level", l}, {"npoints", n}, {"dt", dt}, {"residual_l2", r.l2}});
    ctx.rec.info("continuity_residual_level" + std::to_string(l), r.l2);
  }
  auto [order, icpt] = fit_line(level_h, level_res);
  (void)icpt;
  ctx.summary.tables["continuity_levels"] = rows;
  const double tol = ctx.rec.tolerance("continuity_order");
  ctx.rec.within("continuity_order", order, a.expected_order - tol, a.expected_order + tol);
  if (ctx.store->size() >= 3) {
    auto r = continuity_residual(*ctx.store, ctx.store->size() / 2);
    ctx.rec.info("continuity_residual_run", r.l2);
  }
  ctx.artifact("continuity.csv", [&](std::ostream& o) {
    o << "level,npoints,dt,residual_l2\n";
    for (const auto& r : rows) o << r["level"] << ',' << r["npoints"] << ',' << r["dt"] << ',' << r["residual_l2"] << '\n';
  });
}

std::vector<Point> bundle_initials(Context& ctx, const BundleAnalysis& b, const WaveField& psi0) {
  if (b.seeding == "density") return sample_from_density(psi0.grid, density(psi0), b.n, ctx.seed);
  if (psi0.grid.dim() == 1) return linspace_seeds(b.range[0].first, b.range[0].second, b.n);
  return linspace_seeds(b.range[0], b.range[1], b.n, b.n);
}

double equivariance_l1(const FrameStore& store, const FieldSeries& vel, std::size_t refine, double dt_traj) {
  const Grid& g = store.grid();
  auto rho0 = density(store.frames.front());
  const double eps = 1e3 * node_threshold(rho0);
  auto lat = density_lattice(g, rho0, refine, eps);
  auto bundle = trajectory_function(vel, lat.points, dt_traj, "lattice");
  auto pf = pushforward_density(lat, bundle.positions_at(store.size() - 1), g);
  return l1_distance(g, pf.rho, density(store.frames.back()));
}

void run_bundle(Context& ctx, const BundleAnalysis& b) {
  const FrameStore& store = *ctx.store;
  const Grid& g = store.grid();
  const double dt_traj = ctx.cfg.run->dt_traj;
  const auto& psi0 = store.frames.front();
  auto vel = FieldSeries::velocity(store);
  auto initials = bundle_initials(ctx, b, psi0);
  auto bundle = trajectory_function(vel, initials, dt_traj, b.seeding);
  ctx.rec.info("bundle_size", static_cast<double>(bundle.size()));
  ctx.rec.info("bundle_aborted", static_cast<double>(bundle.size() - bundle.completed()));
  auto cr = check_no_crossing(bundle, b.crossing_radius);
  ctx.rec.le("crossing_violations", static_cast<double>(cr.violations.size()), "crossing_violations");
  ctx.artifact("trajectories.ndjson", [&](std::ostream& o) { io::write_trajectories_ndjson(o, bundle); });
  ctx.artifact("trajectories.csv", [&](std::ostream& o) { io::write_trajectories_csv(o, bundle); });

  if (b.oracle.kind != TrajectoryOracle::Kind::None) {
    double err = 0.0;
    for (const auto& tr : bundle.trajectories) {
      const double x0 = tr.initial[0];
      for (const auto& s : tr.samples) {
        double expect = x0;
        if (b.oracle.kind == TrajectoryOracle::Kind::GaussianSpread)
          expect = gaussian_spread_oracle(b.oracle, store.params, x0, s.t - store.t0());
        else if (b.oracle.kind == TrajectoryOracle::Kind::Uniform)
          expect = x0 + b.oracle.velocity * (s.t - store.t0());
        err = std::max(err, std::abs(s.q[0] - expect));
      }
      if (tr.status != TrajectoryStatus::Completed) err = std::numeric_limits<double>::infinity();
    }
    if (b.oracle.kind == TrajectoryOracle::Kind::Static)
      ctx.rec.le("static_displacement", err, "static_displacement");
    else
      ctx.rec.le("trajectory_oracle_error", err, "trajectory_oracle_error");
  }

  if (b.equivariance) {
    const double l1 = equivariance_l1(store, vel, b.refine, dt_traj);
    ctx.rec.le("equivariance_l1", l1, "equivariance_l1");
    // Twice the lattice density and half the trajectory step against the same |psi|^2.
    const double l1f = equivariance_l1(store, vel, b.refine * 2, dt_traj / 2.0);
    ctx.rec.info("equivariance_l1_refined", l1f);
    ctx.rec.le("equivariance_refinement_ratio", l1f / l1, "equivariance_refinement_ratio");
  }

  if (b.newtonian && g.dim() == 1) {
    NewtonianIntegrator newton(store);
    auto ens = newton.run(initials, dt_traj, 1, ctx.seed, b.seeding);
    double dev = 0.0, v0err = 0.0;
    std::size_t compared = 0;
    for (std::size_t w = 0; w < initials.size(); ++w) {
      const auto& tr = bundle.trajectories[w];
      if (tr.status != TrajectoryStatus::Completed || ens.status[w] != TrajectoryStatus::Completed) continue;
      ++compared;
      for (std::size_t s = 0; s < ens.times.size(); ++s)
        dev = std::max(dev, std::abs(ens.positions[s][w][0] - tr.samples[s].q[0]));
      v0err = std::max(v0err, std::abs(ens.velocities[0][w][0] - spectral_velocity(psi0, store.params, initials[w][0])));
    }
    ctx.rec.info("newtonian_compared", static_cast<double>(compared));
    ctx.rec.le("newtonian_deviation", compared ? dev : std::numeric_limits<double>::quiet_NaN(), "newtonian_deviation");
    ctx.rec.le("newtonian_initial_velocity", v0err, "newtonian_initial_velocity");
  }
}

void run_measure(Context& ctx, const MeasureAnalysis& m) {
  const FrameStore& store = *ctx.store;
  const auto& frame = m.frame == "initial" ? store.frames.front() : store.frames.back();
  auto rho = density(frame);
  double sum = 0.0;
  for (std::size_t r = 0; r < m.regions.size(); ++r) {
    Region region(frame.grid, m.regions[r].boxes, m.regions[r].name);
    auto rep = amount_report(rho, region);
    sum += rep.proportion;
    ctx.rec.info("amount_" + m.regions[r].name, rep.raw);
    if (m.expected[r])
      ctx.rec.le_value("probability_error_" + m.regions[r].name, std::abs(rep.proportion - *m.expected[r]),
                       ctx.rec.tolerance("region_probability"));
    else
      ctx.rec.info("probability_" + m.regions[r].name, rep.proportion);
  }
  ctx.rec.info("probability_sum", sum);
  if (!m.surfaces.empty()) {
    Fft fft(frame.grid);
    auto j = current(frame, store.params, fft);
    for (std::size_t s = 0; s < m.surfaces.size(); ++s)
      ctx.rec.info("flow_surface" + std::to_string(s), substantial_flow(frame.grid, j, m.surfaces[s]));
  }
}

void run_measurement(Context& ctx, const MeasurementAnalysis& m) {
  const FrameStore& store = *ctx.store;
  const auto& setup = ctx.cfg.measured->setup;
  const auto& post = store.frames.front();
  const auto& psi = *ctx.system_psi;

  auto rep = branch_decompose(post, setup);
  ctx.rec.info("branch_overlap", rep.overlap);
  ctx.rec.info("branch_weight_sum", rep.weight_sum);
  auto cmp = outcome_probability_via_worlds(post, setup);
  json rows = json::array();
  for (std::size_t a = 0; a < setup.outcomes.size(); ++a) {
    const double born = born_probability(psi, a, setup);
    const std::string tag = std::to_string(a);
    ctx.rec.info("p_born_" + tag, born);
    ctx.rec.info("p_worlds_" + tag, cmp.worlds[a]);
    ctx.rec.le("born_difference_" + tag, std::abs(cmp.worlds[a] - born), "born_difference");
    rows.push_back({{"outcome", a}, {"eigenvalue", setup.outcomes[a].eigenvalue}, {"p_born", born},
                    {"p_worlds", cmp.worlds[a]}, {"branch_weight", rep.branches[a].weight}});
  }
  ctx.rec.info("world_residual", cmp.residual);
  ctx.summary.tables["outcomes"] = rows;

  if (ctx.cfg.measured->dynamical) {
    auto imp = impulsive_measure(psi, setup, post.grid).psi;
    imp.time = post.time;
    ctx.rec.le("dynamical_impulsive_l2", l2_distance(imp, post), "dynamical_impulsive_l2");
  }

  auto collapse = subjective_collapse_compare(store, setup, m.outcome, m.q_bar, m.horizon, m.dt_traj, true);
  ctx.rec.info("collapse_dominance", collapse.dominance);
  ctx.rec.le("collapse_divergence_spacings", collapse.max_distance_spacings, "collapse_divergence_spacings");

  // Negative control: the same protocol with a weak coupling whose pointer
  // states overlap.
  MeasurementSetup weak = setup;
  weak.g = m.control_g;
  WaveField weak_post = ctx.cfg.measured->dynamical ? dynamical_measure(psi, weak, post.grid, m.dynamical_steps)
                                                    : impulsive_measure(psi, weak, post.grid).psi;
  weak_post.time = post.time;
  const auto steps = static_cast<std::size_t>(std::llround(m.horizon / store.dt_frame)) * store.frame_stride;
  auto weak_store = evolve(weak_post, store.params, store.dt_step, steps, store.frame_stride);
  auto control = subjective_collapse_compare(weak_store, weak, m.outcome, m.control_q_bar, m.horizon, m.dt_traj, false);
  ctx.rec.info("control_dominance", control.dominance);
  ctx.rec.info("control_divergence_spacings", control.max_distance_spacings);
  const double ratio = control.max_distance_spacings /
                       std::max(collapse.max_distance_spacings, std::numeric_limits<double>::min());
  ctx.rec.ge_value("control_ratio", ratio, ctx.rec.tolerance("control_ratio"));

  // Outcome probabilities are conserved by the later evolution.
  auto rho_end = density(store.frames.back());
  for (std::size_t a = 0; a < setup.outcomes.size(); ++a)
    ctx.rec.info("p_worlds_final_" + std::to_string(a), world_probability(rho_end, outcome_region(post.grid, setup, a)));
}

void run_miw(Context& ctx, const MiwAnalysis& m) {
  const FrameStore& full = *ctx.store;
  const Grid& g = full.grid();
  FrameStore coarse = m.frame_subsample > 1 ? subsample(full, m.frame_subsample) : FrameStore{};
  const FrameStore& store = m.frame_subsample > 1 ? coarse : full;
  NewtonianIntegrator newton(store);

  std::vector<Region> regions;
  for (const auto& r : m.regions) regions.emplace_back(g, r.boxes, r.name);
  auto rho0 = density(store.frames.front());
  auto rho_end = density(store.frames.back());
  std::vector<double> reference;
  for (const auto& r : regions) reference.push_back(world_probability(rho_end, r));

  std::vector<std::uint64_t> seeds = m.seeds;
  if (seeds.empty())
    for (std::size_t i = 0; i < m.seed_count; ++i) seeds.push_back(ctx.seed + i);

  auto study = miw_convergence(newton, rho0, regions, reference, m.Ks, seeds, m.dt);
  json rows = json::array();
  for (const auto& row : study.rows) {
    rows.push_back({{"K", row.K}, {"rms_error", row.error}, {"seed_errors", row.seed_errors}});
    ctx.rec.info("miw_error_K" + std::to_string(row.K), row.error);
  }
  ctx.summary.tables["miw_convergence"] = rows;
  const double tol = ctx.rec.tolerance("miw_slope");
  ctx.rec.within("miw_slope", study.slope, -0.5 - tol, -0.5 + tol);
  ctx.artifact("miw_convergence.csv", [&](std::ostream& o) { io::write_convergence_csv(o, study); });

  // One larger ensemble: frequencies against the binomial bound and the
  // kernel density estimate against rho0.
  auto initials = sample_worlds(g, rho0, m.density_K, ctx.seed);
  auto ens = newton.run(initials, m.dt, std::numeric_limits<std::size_t>::max() / 2, ctx.seed, "density-sampled");
  auto freq = miw_outcome_frequencies(ens.final_positions(), regions);
  double z = 0.0;
  for (std::size_t a = 0; a < regions.size(); ++a) {
    const double p = reference[a];
    const double sd = std::sqrt(std::max(p * (1.0 - p), 1e-300) / static_cast<double>(m.density_K));
    z = std::max(z, std::abs(freq.fractions[a] - p) / sd);
    ctx.rec.info("miw_fraction_" + m.regions[a].name, freq.fractions[a]);
    ctx.rec.info("continuum_probability_" + m.regions[a].name, p);
  }
  ctx.rec.info("miw_residual", freq.residual);
  ctx.rec.le("miw_binomial_z", z, "miw_binomial_z");
  const double h = silverman_bandwidth(initials, 0);
  for (double f : {1.0, 0.5, 0.25}) {
    auto kde = empirical_density(initials, g, f * h);
    std::ostringstream note;
    note << "bandwidth " << f * h;
    ctx.rec.info("empirical_density_l1_h" + std::to_string(static_cast<int>(std::lround(100 * f))), l1_distance(g, kde, rho0),
                 note.str());
  }

  auto dump = newton.run(sample_worlds(g, rho0, m.dump_K, ctx.seed + 7919), m.dt, 1, ctx.seed + 7919, "density-sampled");
  ctx.artifact("ensemble.ndjson", [&](std::ostream& o) { io::write_ensemble_ndjson(o, dump); });
}

void run_toy(Context& ctx, const ToyModelAnalysis& t) {
  LatticeDensity rho;
  rho.axis = Axis{t.domain.first, t.domain.second, t.cells};
  rho.values.assign(t.cells, 1.0 / (t.domain.second - t.domain.first));
  Map1D f;
  f.forward = [](double x) { return x * x; };
  f.inverse = [](double y) { return std::sqrt(std::max(y, 0.0)); };
  f.derivative = [](double x) { return 2.0 * x; };
  f.monotone = true;
  double perr = 0.0;
  for (double a : t.a_values) {
    double p = pushforward_measure(rho, f, 0.0, a);
    ctx.rec.info("toy_probability_a" + std::to_string(a), p);
    perr = std::max(perr, std::abs(p - std::sqrt(a)));
  }
  ctx.rec.le("toy_probability_error", perr, "toy_probability_error");
  double derr = 0.0;
  for (std::size_t i = 0; i < t.density_points; ++i) {
    const double y = t.density_points == 1
                         ? t.density_range.first
                         : t.density_range.first + (t.density_range.second - t.density_range.first) *
                                                       static_cast<double>(i) / static_cast<double>(t.density_points - 1);
    derr = std::max(derr, std::abs(induced_density(rho, f, y) - 1.0 / (2.0 * std::sqrt(y))));
  }
  ctx.rec.le("toy_density_error", derr, "toy_density_error");
}

void run_quantization(Context& ctx, const QuantizationAnalysis& q) {
  const FrameStore& store = *ctx.store;
  std::vector<std::pair<std::string, const WaveField*>> frames;
  if (q.frame != "final") frames.emplace_back("initial", &store.frames.front());
  if (q.frame != "initial") frames.emplace_back("final", &store.frames.back());
  for (const auto& [label, psi] : frames) {
    auto flow = flow_frame(*psi, store.params);
    for (std::size_t l = 0; l < q.loops.size(); ++l) {
      const auto& lp = q.loops[l];
      auto loop = circle_loop(lp.center, lp.radius, lp.samples, lp.turns);
      auto r = quantization_check(flow, store.params, loop);
      auto ph = quantization_check_phase(*psi, loop);
      const std::string tag = "loop" + std::to_string(l) + "_" + label;
      ctx.rec.eq("quantization_n_" + tag, static_cast<double>(r.n), static_cast<double>(lp.expected));
      ctx.rec.le("quantization_residual_" + tag, r.residual, "quantization_residual");
      ctx.rec.eq("phase_winding_n_" + tag, static_cast<double>(ph.n), static_cast<double>(lp.expected));
      ctx.rec.info("phase_winding_residual_" + tag, ph.residual);
    }
  }
}

}  // namespace

WaveField build_initial_state(const ScenarioConfig& config) {
  if (!config.grid) throw ConfigError("grid: required to build an initial state");
  if (!config.initial_state && !config.measured) throw ConfigError("initial_state: missing");
  return build_initial(config);
}

RunSummary run_scenario(const ScenarioConfig& cfg, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RunSummary summary;
  summary.scenario = cfg.name;
  summary.config = cfg.source;
  summary.seed = options.seed.value_or(cfg.seed);
  std::map<std::string, double> tol = cfg.tolerances;
  for (const auto& [k, v] : options.tolerances) tol[k] = v;
  Recorder rec(summary, tol);
  Context ctx{cfg, rec, summary, options.output_dir.value_or(cfg.output_dir), options.write_artifacts, summary.seed, nullptr, std::nullopt};

  FrameStore store;
  bool have_store = false;
  if (cfg.run) {
    try {
      WaveField psi0 = build_initial(cfg, &ctx.system_psi);
      store = evolve(psi0, cfg.params, cfg.run->dt_step, cfg.run->n_steps, cfg.run->frame_stride);
      have_store = true;
      rec.le("norm_drift", store.norm_drift(), "norm_drift");
      double mu0 = integrate(store.grid(), density(store.frames.front()));
      double amount = 0.0;
      for (const auto& f : store.frames) amount = std::max(amount, std::abs(integrate(f.grid, density(f)) - mu0) / mu0);
      rec.le("amount_drift", amount, "amount_drift");
      const double e0 = expected_energy(store.frames.front(), cfg.params);
      const double e1 = expected_energy(store.frames.back(), cfg.params);
      rec.info("energy_drift", std::abs(e1 - e0) / std::max(std::abs(e0), 1e-300), "relative");
      rec.info("frames", static_cast<double>(store.size()));
      ctx.store = &store;
      const std::size_t every = cfg.frames_every ? cfg.frames_every : store.size() - 1;
      ctx.artifact("frames.ndjson", [&](std::ostream& o) { io::write_frames_ndjson(o, store, std::max<std::size_t>(every, 1)); });
      ctx.artifact("flow_final.csv", [&](std::ostream& o) { io::write_flow_csv(o, flow_frame(store.frames.back(), cfg.params)); });
    } catch (const Error& e) {
      rec.fail("propagation_guard", e.what());
    }
  }

  for (const auto& spec : cfg.analyses) {
    const std::string name = analysis_name(spec);
    rec.set_analysis(name);
    if (!have_store && !std::holds_alternative<ToyModelAnalysis>(spec)) {
      rec.fail(name + "_skipped", "no propagated frames available");
      continue;
    }
    try {
      std::visit(
          [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ContinuityAnalysis>) run_continuity(ctx, a);
            else if constexpr (std::is_same_v<T, BundleAnalysis>) run_bundle(ctx, a);
            else if constexpr (std::is_same_v<T, MeasureAnalysis>) run_measure(ctx, a);
            else if constexpr (std::is_same_v<T, MeasurementAnalysis>) run_measurement(ctx, a);
            else if constexpr (std::is_same_v<T, MiwAnalysis>) run_miw(ctx, a);
            else if constexpr (std::is_same_v<T, ToyModelAnalysis>) run_toy(ctx, a);
            else run_quantization(ctx, a);
          },
          spec);
    } catch (const NumericalError& e) {
      rec.fail(name + "_guard", e.what());
    } catch (const Error& e) {
      rec.fail(name + "_error", e.what());
    }
  }

  rec.set_analysis("propagation");
  summary.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rec.le_value("runtime_seconds", summary.runtime_seconds, cfg.runtime_budget);
  if (options.write_artifacts) {
    auto path = ctx.out / "summary.json";
    summary.artifacts.push_back(path.string());
    auto f = io::open_output(path);
    f << summary.to_json().dump(2) << '\n';
  }
  return summary;
}

RunSummary run_scenario(const std::filesystem::path& config_path, const RunOptions& options) {
  return run_scenario(load_config(config_path), options);
}

std::filesystem::path default_scenario_dir() {
  return std::filesystem::path(WC_SOURCE_DIR) / "scenarios";
}

std::vector<ScenarioInfo> list_scenarios(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("scenario directory '" + dir.string() + "' does not exist");
  std::vector<ScenarioInfo> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    json j;
    try {
      j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
      throw Error(entry.path().string() + ": " + e.what());
    }
    out.push_back({j.value("name", entry.path().stem().string()), j.value("description", ""), entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

std::string render_report(const json& summary) {
  std::ostringstream o;
  o << "scenario " << summary.value("scenario", "?") << "  seed " << summary.value("seed", 0)
    << "  runtime " << std::fixed << std::setprecision(2) << summary.value("runtime_seconds", 0.0) << " s  "
    << (summary.value("pass", false) ? "PASS" : "FAIL") << '\n';
  o << std::defaultfloat;
  std::size_t width = 6;
  for (const auto& m : summary.at("metrics")) width = std::max(width, m.at("name").get<std::string>().size());
  for (const auto& m : summary.at("metrics")) {
    std::string cmp = m.at("comparator");
    o << "  " << (m.at("pass").get<bool>() ? "ok  " : "FAIL") << "  " << std::left << std::setw(static_cast<int>(width))
      << m.at("name").get<std::string>() << "  " << std::setw(14) << m.at("value").dump();
    if (cmp != "info") o << "  " << cmp << ' ' << m.at("threshold").dump();
    if (m.contains("note")) o << "  (" << m.at("note").get<std::string>() << ')';
    o << '\n';
  }
  if (summary.contains("tables") && summary.at("tables").contains("miw_convergence")) {
    o << "  MIW convergence (K, rms error):\n";
    for (const auto& r : summary.at("tables").at("miw_convergence"))
      o << "    " << r.at("K").get<std::size_t>() << "  " << r.at("rms_error").get<double>() << '\n';
  }
  return o.str();
}

}  // namespace wc
