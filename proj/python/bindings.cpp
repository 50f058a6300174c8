#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "wc/hydrodynamics.hpp"
#include "wc/measure.hpp"
#include "wc/miw.hpp"
#include "wc/propagator.hpp"
#include "wc/scenarios.hpp"
#include "wc/worlds.hpp"

namespace py = pybind11;
using namespace wc;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<py::ssize_t> shape_of(const Grid& g) {
  std::vector<py::ssize_t> s;
  for (const auto& a : g.axes()) s.push_back(static_cast<py::ssize_t>(a.n));
  return s;
}

py::array_t<double> real_array(const Grid& g, const std::vector<double>& v) {
  py::array_t<double> out(shape_of(g));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<cplx> complex_array(const WaveField& psi) {
  py::array_t<cplx> out(shape_of(psi.grid));
  std::copy(psi.amp.begin(), psi.amp.end(), out.mutable_data());
  return out;
}

std::vector<double> flat_field(const Grid& g, const RealArray& a) {
  if (static_cast<std::size_t>(a.size()) != g.size())
    throw Error("field has " + std::to_string(a.size()) + " values, grid has " + std::to_string(g.size()));
  return {a.data(), a.data() + a.size()};
}

std::vector<Point> points_from(const RealArray& a, int dim) {
  if (a.ndim() == 1 && dim == 1) {
    std::vector<Point> out;
    for (py::ssize_t i = 0; i < a.shape(0); ++i) out.push_back({a.at(i), 0.0});
    return out;
  }
  if (a.ndim() != 2 || a.shape(1) != dim) throw Error("points must have shape (n, " + std::to_string(dim) + ")");
  std::vector<Point> out;
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out.push_back({a.at(i, 0), dim == 2 ? a.at(i, 1) : 0.0});
  return out;
}

py::array_t<double> points_array(const std::vector<Point>& pts, int dim) {
  py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), static_cast<py::ssize_t>(dim)});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int a = 0; a < dim; ++a) w(static_cast<py::ssize_t>(i), a) = pts[i][static_cast<std::size_t>(a)];
  return out;
}

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

FrameStore evolve_config(const ScenarioConfig& c) {
  if (!c.run) throw ConfigError("run: required to evolve");
  return evolve(build_initial_state(c), c.params, c.run->dt_step, c.run->n_steps, c.run->frame_stride);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "World-continuum simulation core";
  m.attr("__version__") = kVersion;

  auto base = py::register_exception<Error>(m, "WorldContinuumError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<Grid>(m, "Grid")
      .def(py::init(&make_grid), py::arg("extents"), py::arg("npoints"))
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("shape", [](const Grid& g) { return py::tuple(py::cast(shape_of(g))); })
      .def_property_readonly("spacing", [](const Grid& g) {
        std::vector<double> s;
        for (int a = 0; a < g.dim(); ++a) s.push_back(g.spacing(a));
        return s;
      })
      .def_property_readonly("extents", [](const Grid& g) {
        std::vector<std::pair<double, double>> e;
        for (const auto& a : g.axes()) e.emplace_back(a.lo, a.hi);
        return e;
      })
      .def_property_readonly("cell_volume", &Grid::cell_volume)
      .def("coordinates", [](const Grid& g, int axis) {
        const Axis& a = g.axis(axis);
        py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(a.n)});
        double* d = out.mutable_data();
        for (std::size_t i = 0; i < a.n; ++i) d[i] = a.coord(i);
        return out;
      }, py::arg("axis") = 0, "Cell-centre coordinates along one axis")
      .def("__repr__", [](const Grid& g) { return "<Grid dim=" + std::to_string(g.dim()) + " size=" + std::to_string(g.size()) + ">"; });

  py::class_<WaveField>(m, "WaveField")
      .def_readonly("grid", &WaveField::grid)
      .def_readonly("time", &WaveField::time)
      .def_property_readonly("amplitudes", &complex_array)
      .def("density", [](const WaveField& psi) { return real_array(psi.grid, density(psi)); })
      .def("norm", &norm);

  py::class_<FrameStore>(m, "Frames")
      .def("__len__", &FrameStore::size)
      .def("__getitem__", [](const FrameStore& s, std::size_t k) { return s.frames.at(k); })
      .def_property_readonly("grid", &FrameStore::grid)
      .def_readonly("dt_frame", &FrameStore::dt_frame)
      .def_property_readonly("times", [](const FrameStore& s) {
        std::vector<double> t;
        for (const auto& f : s.frames) t.push_back(f.time);
        return t;
      })
      .def("norm_drift", &FrameStore::norm_drift)
      .def("flow", [](const FrameStore& s, std::size_t k) {
        auto f = flow_frame(s.frames.at(k), s.params);
        py::dict d;
        d["time"] = f.time;
        d["rho"] = real_array(f.grid, f.rho);
        py::list j, v;
        for (int a = 0; a < f.grid.dim(); ++a) {
          j.append(real_array(f.grid, f.current[static_cast<std::size_t>(a)]));
          v.append(real_array(f.grid, f.velocity[static_cast<std::size_t>(a)]));
        }
        d["current"] = j;
        d["velocity"] = v;
        std::vector<double> mask(f.node_mask.begin(), f.node_mask.end());
        d["node_mask"] = real_array(f.grid, mask).attr("astype")("bool");
        return d;
      }, py::arg("k"), "Density, current, velocity and node mask of frame k");

  py::class_<ScenarioConfig>(m, "Config")
      .def_static("parse", [](const std::string& text) { return parse_config(from_text(text)); }, py::arg("json_text"))
      .def_static("load", &load_config, py::arg("path"))
      .def_readonly("name", &ScenarioConfig::name)
      .def_readonly("description", &ScenarioConfig::description)
      .def_readonly("seed", &ScenarioConfig::seed)
      .def_property_readonly("grid", [](const ScenarioConfig& c) -> py::object {
        return c.grid ? py::cast(*c.grid) : py::none();
      })
      .def_property_readonly("analyses", [](const ScenarioConfig& c) {
        std::vector<std::string> names;
        for (const auto& a : c.analyses) names.push_back(analysis_name(a));
        return names;
      })
      .def("initial_state", &build_initial_state)
      .def("evolve", &evolve_config, py::call_guard<py::gil_scoped_release>(),
           "Propagates the initial state with the run settings");

  m.def("trajectories", [](const FrameStore& store, const RealArray& initials, double dt_traj) {
    const int dim = store.grid().dim();
    TrajectoryBundle b;
    {
      auto pts = points_from(initials, dim);
      py::gil_scoped_release release;
      b = trajectory_function(store, pts, dt_traj);
    }
    const std::size_t n = b.size(), ns = store.size();
    py::array_t<double> pos({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(ns), static_cast<py::ssize_t>(dim)});
    auto w = pos.mutable_unchecked<3>();
    std::vector<std::string> status;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& tr = b.trajectories[i];
      for (std::size_t k = 0; k < ns; ++k) {
        const Point& q = tr.samples[std::min(k, tr.samples.size() - 1)].q;
        for (int a = 0; a < dim; ++a) w(i, k, a) = q[static_cast<std::size_t>(a)];
      }
      status.push_back(to_string(tr.status));
    }
    py::dict d;
    d["positions"] = pos;
    d["status"] = status;
    return d;
  }, py::arg("frames"), py::arg("initials"), py::arg("dt_traj"),
        "First-order trajectories; positions has shape (n, frames, dim). Aborted paths repeat their last point.");

  m.def("sample_worlds", [](const Grid& g, const RealArray& rho, std::size_t K, std::uint64_t seed) {
    return points_array(sample_worlds(g, flat_field(g, rho), K, seed), g.dim());
  }, py::arg("grid"), py::arg("rho"), py::arg("K"), py::arg("seed"));

  m.def("newtonian_worlds", [](const FrameStore& store, const RealArray& initials, double dt, std::size_t record_stride) {
    const int dim = store.grid().dim();
    WorldEnsemble e;
    {
      auto pts = points_from(initials, dim);
      py::gil_scoped_release release;
      e = NewtonianIntegrator(store).run(pts, dt, record_stride);
    }
    py::list pos, vel;
    for (std::size_t s = 0; s < e.times.size(); ++s) {
      pos.append(points_array(e.positions[s], dim));
      vel.append(points_array(e.velocities[s], dim));
    }
    py::dict d;
    d["times"] = e.times;
    d["positions"] = py::module_::import("numpy").attr("stack")(pos);
    d["velocities"] = py::module_::import("numpy").attr("stack")(vel);
    return d;
  }, py::arg("frames"), py::arg("initials"), py::arg("dt"), py::arg("record_stride") = 1,
        "Second-order world dynamics; positions has shape (samples, K, dim)");

  m.def("world_probability", [](const Grid& g, const RealArray& rho, const std::vector<Box>& boxes) {
    return world_probability(flat_field(g, rho), Region(g, boxes));
  }, py::arg("grid"), py::arg("rho"), py::arg("boxes"), "Share of the world amount inside a union of boxes");

  m.def("substantial_amount", [](const Grid& g, const RealArray& rho, const std::vector<Box>& boxes) {
    return substantial_amount(flat_field(g, rho), Region(g, boxes));
  }, py::arg("grid"), py::arg("rho"), py::arg("boxes"));

  m.def("run_scenario", [](const std::filesystem::path& path, std::optional<std::filesystem::path> output_dir,
                           std::optional<std::uint64_t> seed, std::map<std::string, double> tolerances,
                           bool write_artifacts) {
    RunOptions opt{std::move(output_dir), seed, std::move(tolerances), write_artifacts};
    RunSummary s;
    {
      py::gil_scoped_release release;
      s = run_scenario(path, opt);
    }
    return to_python(s.to_json());
  }, py::arg("config"), py::arg("output_dir") = py::none(), py::arg("seed") = py::none(),
        py::arg("tolerances") = std::map<std::string, double>{}, py::arg("write_artifacts") = true);

  m.def("list_scenarios", [](std::optional<std::filesystem::path> dir) {
    py::list out;
    for (const auto& s : list_scenarios(dir.value_or(default_scenario_dir()))) {
      py::dict d;
      d["name"] = s.name;
      d["description"] = s.description;
      d["path"] = s.path.string();
      out.append(d);
    }
    return out;
  }, py::arg("dir") = py::none());

  m.def("scenario_dir", &default_scenario_dir);
  m.def("render_report", [](const std::string& summary_json) { return render_report(from_text(summary_json)); },
        py::arg("summary_json"));
}
