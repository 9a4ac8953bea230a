#include "netform/experiments.hpp"

#include "netform/timeloop.hpp"
#include "netform/vtk.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace netform {

namespace {

int verbosity() {
  const char* env = std::getenv("NETFORM_VERBOSE");
  return env ? std::atoi(env) : 0;
}

std::string snapshot_name(const std::string& prefix, Index counter) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%05d.vtk", counter);
  return prefix + buf;
}

} // namespace

RunLog execute_run(const RunConfig& cfg) {
  cfg.validate();
  const MeshTopology mesh = cfg.mesh.build();
  const FeCache fe = build_fe_cache(mesh, cfg.quad_degree);
  const SourceSpec source = cfg.make_source(mesh, fe);
  const RunOptions opts = cfg.run_options();

  const int verbose = verbosity();
  Index accepted = 0, snapshots = 0;
  StateVector last_state;
  RunCallbacks callbacks;
  callbacks.on_accept = [&](const StateVector& state, const StepResult&,
                            const LogRow& row) {
    ++accepted;
    last_state = state;
    if (!cfg.output.vtk_prefix.empty() && cfg.output.vtk_every > 0 &&
        accepted % cfg.output.vtk_every == 0)
      write_vtk(state, mesh, snapshot_name(cfg.output.vtk_prefix, snapshots++));
    if (verbose >= 2 || (verbose == 1 && accepted % 50 == 0))
      std::cerr << "t=" << row.t << " dt=" << row.dt << " E=" << row.energy
                << " newton=" << row.newton_iters << "\n";
  };

  const RunLog log =
      run_simulation(opts, mesh, fe, cfg.model, source, callbacks);

  if (!cfg.output.log_path.empty()) write_csv(log, cfg.output.log_path);
  if (accepted > 0) {
    if (!cfg.output.vtk_prefix.empty())
      write_vtk(last_state, mesh, cfg.output.vtk_prefix + "_final.vtk");
    if (!cfg.output.threshold_path.empty())
      write_threshold_cells(last_state, mesh, cfg.output.threshold,
                            cfg.output.threshold_path);
  }
  if (verbose >= 1)
    std::cerr << "run " << (log.completed ? "completed" : "FAILED") << ", "
              << log.rows.size() << " steps\n";
  return log;
}

std::vector<std::string> experiment_names() {
  return {"box2d",  "meshstudy", "gammasweep",
          "rsweep", "slab3d",    "integratorcompare"};
}

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

RunConfig base_config() { return RunConfig{}; } // defaults are the 2D box setup

void finish(RunConfig& cfg, const Overrides& overrides,
            const std::string& out_dir, const std::string& label) {
  cfg.output.log_path = out_dir + "/" + label + ".csv";
  for (const auto& [k, v] : overrides) apply_override(cfg, k, v);
}

} // namespace

ExperimentResult run_experiment(const std::string& name,
                                const Overrides& overrides,
                                const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  ExperimentResult result;
  std::vector<std::pair<std::string, RunConfig>> runs;

  if (name == "box2d") {
    RunConfig cfg = base_config();
    finish(cfg, overrides, out_dir, "box2d");
    runs.push_back({"box2d", cfg});
  } else if (name == "meshstudy") {
    RunConfig quad = base_config();
    quad.mesh.nx = quad.mesh.ny = 128;
    finish(quad, overrides, out_dir, "meshstudy_quad");
    RunConfig criss = base_config();
    criss.mesh.kind = MeshKind::TriCrissCross;
    finish(criss, overrides, out_dir, "meshstudy_crisscross");
    RunConfig regular = base_config();
    regular.mesh.kind = MeshKind::TriRegular;
    finish(regular, overrides, out_dir, "meshstudy_regular");
    runs = {{"quad", quad}, {"crisscross", criss}, {"regular", regular}};
  } else if (name == "gammasweep") {
    for (const Scalar gamma : {0.75, 0.5}) {
      RunConfig cfg = base_config();
      cfg.model.gamma = gamma;
      const std::string label = gamma == 0.5 ? "gamma0.5" : "gamma0.75";
      finish(cfg, overrides, out_dir, label);
      runs.push_back({label, cfg});
    }
  } else if (name == "rsweep") {
    for (const Scalar r : {1e-3, 1e-4, 1e-5}) {
      RunConfig cfg = base_config();
      cfg.model.r = r;
      cfg.time.t_end = 50; // covers the network-formation window
      char label[16];
      std::snprintf(label, sizeof(label), "r%.0e", r);
      finish(cfg, overrides, out_dir, label);
      runs.push_back({label, cfg});
    }
  } else if (name == "slab3d") {
    RunConfig cfg = base_config();
    cfg.mesh.kind = MeshKind::Hex;
    cfg.mesh.nx = cfg.mesh.ny = 32;
    cfg.mesh.nz = 16;
    cfg.mesh.z1 = 0.5;
    cfg.model.r = 1e-3;
    cfg.time.t_end = 70; // past network-formation onset (threshold crossing near t=55)
    cfg.output.threshold = 1e-2;
    cfg.output.threshold_path = out_dir + "/slab3d_threshold.txt";
    cfg.output.vtk_prefix = out_dir + "/slab3d";
    finish(cfg, overrides, out_dir, "slab3d");
    runs.push_back({"slab3d", cfg});
  } else if (name == "integratorcompare") {
    for (const Scheme s : {Scheme::BE, Scheme::BDF2, Scheme::CN}) {
      RunConfig cfg = base_config();
      cfg.time.scheme = s;
      const std::string label = "integrator_" + scheme_name(s);
      finish(cfg, overrides, out_dir, label);
      runs.push_back({scheme_name(s), cfg});
    }
  } else {
    throw ConfigError("unknown experiment '" + name + "'");
  }

  for (const auto& [label, cfg] : runs) {
    RunLog log = execute_run(cfg);
    if (!log.completed) result.status = 3;
    result.logs.push_back({label, std::move(log)});
  }
  return result;
}

} // namespace netform
