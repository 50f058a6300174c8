#include "wc/io.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include <json.hpp>

namespace wc::io {

using nlohmann::json;

namespace {

json grid_json(const Grid& g) {
  json axes = json::array();
  for (const auto& ax : g.axes()) axes.push_back({{"lo", ax.lo}, {"hi", ax.hi}, {"n", ax.n}});
  return {{"dim", g.dim()}, {"axes", axes}};
}

Grid grid_from_json(const json& j) {
  std::vector<std::pair<double, double>> ext;
  std::vector<std::size_t> n;
  for (const auto& ax : j.at("axes")) {
    ext.emplace_back(ax.at("lo").get<double>(), ax.at("hi").get<double>());
    n.push_back(ax.at("n").get<std::size_t>());
  }
  return make_grid(ext, n);
}

json point_json(const Point& q, int dim) {
  json p = json::array();
  for (int a = 0; a < dim; ++a) p.push_back(q[static_cast<std::size_t>(a)]);
  return p;
}

}  // namespace

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(17);
  return out;
}

void write_frames_ndjson(std::ostream& out, const FrameStore& store, std::size_t every) {
  if (every == 0) throw Error("write_frames_ndjson: every must be >= 1");
  const json grid = grid_json(store.grid());
  for (std::size_t k = 0; k < store.size(); k += every) {
    const auto& f = store.frames[k];
    std::vector<double> re(f.amp.size()), im(f.amp.size());
    for (std::size_t i = 0; i < f.amp.size(); ++i) {
      re[i] = f.amp[i].real();
      im[i] = f.amp[i].imag();
    }
    json line = {{"schema_version", kSchemaVersion}, {"frame", k}, {"time", f.time},
                 {"grid", grid}, {"re", re}, {"im", im}};
    out << line.dump() << '\n';
  }
}

std::vector<WaveField> read_frames_ndjson(std::istream& in) {
  std::vector<WaveField> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    if (j.value("schema_version", 0) != kSchemaVersion) throw Error("frame NDJSON: unsupported schema_version");
    Grid g = grid_from_json(j.at("grid"));
    auto re = j.at("re").get<std::vector<double>>();
    auto im = j.at("im").get<std::vector<double>>();
    if (re.size() != im.size()) throw Error("frame NDJSON: re/im length mismatch");
    std::vector<cplx> amp(re.size());
    for (std::size_t i = 0; i < re.size(); ++i) amp[i] = {re[i], im[i]};
    frames.emplace_back(g, j.at("time").get<double>(), std::move(amp));
  }
  return frames;
}

void write_flow_csv(std::ostream& out, const FlowFrame& flow) {
  const Grid& g = flow.grid;
  const int d = g.dim();
  out << "time";
  for (int a = 0; a < d; ++a) out << ",q" << a;
  out << ",rho";
  for (int a = 0; a < d; ++a) out << ",j" << a;
  for (int a = 0; a < d; ++a) out << ",v" << a;
  out << ",node\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    Point q = g.point(i);
    out << flow.time;
    for (int a = 0; a < d; ++a) out << ',' << q[static_cast<std::size_t>(a)];
    out << ',' << flow.rho[i];
    for (int a = 0; a < d; ++a) out << ',' << flow.current[static_cast<std::size_t>(a)][i];
    for (int a = 0; a < d; ++a) out << ',' << flow.velocity[static_cast<std::size_t>(a)][i];
    out << ',' << static_cast<int>(flow.node_mask[i]) << '\n';
  }
}

void write_trajectories_ndjson(std::ostream& out, const TrajectoryBundle& bundle) {
  for (std::size_t k = 0; k < bundle.trajectories.size(); ++k) {
    const auto& tr = bundle.trajectories[k];
    json samples = json::array();
    for (const auto& s : tr.samples) {
      json row = json::array({s.t});
      for (int a = 0; a < bundle.dim; ++a) row.push_back(s.q[static_cast<std::size_t>(a)]);
      samples.push_back(row);
    }
    json line = {{"schema_version", kSchemaVersion}, {"id", k}, {"seeding", bundle.seeding},
                 {"initial", point_json(tr.initial, bundle.dim)}, {"status", to_string(tr.status)},
                 {"samples", samples}};
    out << line.dump() << '\n';
  }
}

void write_ensemble_ndjson(std::ostream& out, const WorldEnsemble& ens) {
  for (std::size_t w = 0; w < ens.K; ++w) {
    json samples = json::array();
    for (std::size_t s = 0; s < ens.times.size(); ++s) {
      json row = json::array({ens.times[s]});
      for (int a = 0; a < ens.dim; ++a) row.push_back(ens.positions[s][w][static_cast<std::size_t>(a)]);
      samples.push_back(row);
    }
    json line = {{"schema_version", kSchemaVersion}, {"world_id", w}, {"seed", ens.seed},
                 {"provenance", ens.provenance}, {"initial", point_json(ens.positions.front()[w], ens.dim)},
                 {"initial_velocity", point_json(ens.velocities.front()[w], ens.dim)},
                 {"status", to_string(ens.status[w])}, {"samples", samples}};
    out << line.dump() << '\n';
  }
}

void write_trajectories_csv(std::ostream& out, const TrajectoryBundle& bundle) {
  out << "id,time";
  for (int a = 0; a < bundle.dim; ++a) out << ",q" << a;
  out << ",status\n";
  for (std::size_t k = 0; k < bundle.trajectories.size(); ++k) {
    const auto& tr = bundle.trajectories[k];
    for (const auto& s : tr.samples) {
      out << k << ',' << s.t;
      for (int a = 0; a < bundle.dim; ++a) out << ',' << s.q[static_cast<std::size_t>(a)];
      out << ',' << to_string(tr.status) << '\n';
    }
  }
}

void write_convergence_csv(std::ostream& out, const ConvergenceStudy& study) {
  out << "K,seed,error\n";
  for (const auto& row : study.rows) {
    for (std::size_t s = 0; s < row.seed_errors.size(); ++s)
      out << row.K << ',' << study.seeds.at(s) << ',' << row.seed_errors[s] << '\n';
    out << row.K << ",rms," << row.error << '\n';
  }
}

}  // namespace wc::io
