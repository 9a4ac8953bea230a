// Command-line driver: `netform run <config>` executes one configured
// simulation, `netform experiment <name>` runs a bundled scenario.

#include "netform/config.hpp"
#include "netform/experiments.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"netform: biological transport network formation simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  int threads = 1;
  int vtk_every = -1;

  CLI::App* run_cmd = app.add_subcommand("run", "run a configured simulation");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("--override", overrides, "key=value config overrides");
  run_cmd->add_option("--threads", threads, "internal thread count");
  run_cmd->add_option("--vtk-every", vtk_every,
                      "write a VTK snapshot every K accepted steps");

  std::string experiment;
  std::string out_dir = "out";
  CLI::App* exp_cmd =
      app.add_subcommand("experiment", "run a bundled experiment");
  exp_cmd->add_option("name", experiment, "experiment name")
      ->required()
      ->check(CLI::IsMember(netform::experiment_names()));
  exp_cmd->add_option("--out", out_dir, "output directory");
  exp_cmd->add_option("--override", overrides, "key=value config overrides");
  exp_cmd->add_option("--threads", threads, "internal thread count");

  CLI11_PARSE(app, argc, argv);
  Eigen::setNbThreads(threads);

  std::vector<std::pair<std::string, std::string>> kv;
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: override '" << o << "' is not key=value\n";
      return 2;
    }
    kv.push_back({o.substr(0, eq), o.substr(eq + 1)});
  }

  try {
    if (run_cmd->parsed()) {
      netform::RunConfig cfg = netform::parse_config(config_path);
      for (const auto& [k, v] : kv) netform::apply_override(cfg, k, v);
      if (vtk_every >= 0) cfg.output.vtk_every = vtk_every;
      cfg.validate();
      const netform::RunLog log = netform::execute_run(cfg);
      if (!log.completed) {
        std::cerr << "solver failure: " << log.failure << "\n";
        return 3;
      }
      std::cout << "completed " << log.rows.size() << " steps, final E = "
                << (log.rows.empty() ? log.initial_energy
                                     : log.rows.back().energy)
                << "\n";
      return 0;
    }
    const netform::ExperimentResult result =
        netform::run_experiment(experiment, kv, out_dir);
    for (const auto& [label, log] : result.logs)
      std::cout << label << ": "
                << (log.completed ? "completed" : "FAILED: " + log.failure)
                << " (" << log.rows.size() << " steps)\n";
    return result.status;
  } catch (const netform::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
