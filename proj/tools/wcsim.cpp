// wcsim: run, validate, list and report world-continuum scenarios.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "wc/scenarios.hpp"

namespace {

std::map<std::string, double> parse_tolerances(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw wc::ConfigError("--tol expects name=value, got '" + item + "'");
    double v = std::stod(item.substr(eq + 1));
    if (!(v > 0.0)) throw wc::ConfigError("--tol " + item.substr(0, eq) + ": tolerance must be positive");
    out[item.substr(0, eq)] = v;
  }
  return out;
}

std::filesystem::path resolve_config(const std::string& arg) {
  std::filesystem::path p(arg);
  if (std::filesystem::exists(p)) return p;
  auto bundled = wc::default_scenario_dir() / (arg + ".json");
  if (std::filesystem::exists(bundled)) return bundled;
  throw wc::Error("no config file or bundled scenario named '" + arg + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"World-continuum simulation: scenarios, metrics and reports"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::string> tolerances;
  bool no_artifacts = false;

  auto* run = app.add_subcommand("run", "Propagate a scenario and evaluate its metrics");
  run->add_option("-c,--config", config, "Config file or bundled scenario name")->required();
  run->add_option("-o,--out", out_dir, "Output directory (overrides the config)");
  auto* seed_opt = run->add_option("-s,--seed", seed, "Global seed override");
  run->add_option("-t,--threads", threads, "Worker threads (0 = runtime default)");
  run->add_option("--tol", tolerances, "Tolerance override name=value (repeatable)");
  run->add_flag("--no-artifacts", no_artifacts, "Only print the summary");

  auto* validate = app.add_subcommand("validate", "Check a config without running numerics");
  validate->add_option("-c,--config", config, "Config file or bundled scenario name")->required();

  std::string dir;
  auto* list = app.add_subcommand("list", "List bundled scenarios");
  list->add_option("-d,--dir", dir, "Scenario directory");

  std::string summary_path;
  auto* report = app.add_subcommand("report", "Re-render the summary of a previous run");
  report->add_option("path", summary_path, "summary.json or a run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (threads > 0) {
#ifdef _OPENMP
        omp_set_num_threads(threads);
#endif
      }
      wc::RunOptions opts;
      if (!out_dir.empty()) opts.output_dir = out_dir;
      if (*seed_opt) opts.seed = seed;
      opts.tolerances = parse_tolerances(tolerances);
      opts.write_artifacts = !no_artifacts;
      auto summary = wc::run_scenario(resolve_config(config), opts);
      std::cout << wc::render_report(summary.to_json());
      return summary.pass() ? EXIT_SUCCESS : EXIT_FAILURE;
    }
    if (*validate) {
      auto cfg = wc::load_config(resolve_config(config));
      std::cout << "valid: " << cfg.name << " (" << cfg.analyses.size() << " analyses";
      if (cfg.run) std::cout << ", " << cfg.run->n_steps << " steps";
      std::cout << ")\n";
      for (const auto& a : cfg.analyses) std::cout << "  - " << wc::analysis_name(a) << '\n';
      return EXIT_SUCCESS;
    }
    if (*list) {
      for (const auto& s : wc::list_scenarios(dir.empty() ? wc::default_scenario_dir() : std::filesystem::path(dir)))
        std::cout << s.name << "\t" << s.description << "\n";
      return EXIT_SUCCESS;
    }
    if (*report) {
      std::filesystem::path p(summary_path);
      if (std::filesystem::is_directory(p)) p /= "summary.json";
      std::ifstream in(p);
      if (!in) throw wc::Error("cannot open '" + p.string() + "'");
      auto j = nlohmann::json::parse(in);
      std::cout << wc::render_report(j);
      return j.value("pass", false) ? EXIT_SUCCESS : EXIT_FAILURE;
    }
  } catch (const wc::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return EXIT_SUCCESS;
}
