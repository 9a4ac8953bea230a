#pragma once

#include "netform/config.hpp"
#include "netform/diagnostics.hpp"

#include <string>
#include <utility>
#include <vector>

namespace netform {

// Runs one configured simulation and writes the artifacts named in
// cfg.output (CSV log, VTK snapshots, threshold cell list).
RunLog execute_run(const RunConfig& cfg);

struct ExperimentResult {
  int status = 0; // 0 ok, 3 solver failure
  std::vector<std::pair<std::string, RunLog>> logs; // label -> log
};

// Desk-scale experiment drivers: box2d, meshstudy, gammasweep, rsweep,
// slab3d, integratorcompare. Overrides are applied to every sub-run after
// the driver defaults. Artifacts land in out_dir.
ExperimentResult run_experiment(
    const std::string& name,
    const std::vector<std::pair<std::string, std::string>>& overrides,
    const std::string& out_dir);

std::vector<std::string> experiment_names();

} // namespace netform
