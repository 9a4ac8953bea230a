#pragma once

#include "netform/fespace.hpp"
#include "netform/mesh.hpp"
#include "netform/model.hpp"
#include "netform/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace netform {

inline constexpr const char* kBuildId = "netform 0.1.0";

struct LogRow {
  Scalar t = 0;
  Scalar dt = 0;
  Scalar energy = 0;
  Scalar dE_dt_neg = 0; // backward finite difference of logged energies
  Scalar spsd_fraction = 0;
  Index newton_iters = 0;
  Scalar krylov_avg = 0;
  Scalar wall_time = 0; // kept in memory only; excluded from the CSV
};

struct RunLog {
  std::vector<LogRow> rows;
  std::string scheme;
  std::string mesh_descriptor;
  std::string build_id = kBuildId;
  ModelParams params;
  Scalar initial_time = 0;
  Scalar initial_energy = 0;
  bool completed = false;
  std::string failure;
};

struct StepStats {
  Scalar dt = 0;
  Index newton_iters = 0;
  Index krylov_total = 0;
  Scalar wall_time = 0;
};

LogRow log_step(const StateVector& state, const StepStats& stats,
                const MeshTopology& mesh, const FeCache& fe,
                const ModelParams& params, Scalar prev_energy,
                Scalar prev_time);

// The CSV is bitwise reproducible: deterministic columns only, metadata in
// a '#' preamble.
void write_csv(const RunLog& log, std::ostream& out);
void write_csv(const RunLog& log, const std::string& path);

struct SymmetryError {
  Scalar linf = 0;
  Scalar l2 = 0;
  Scalar l2_rel = 0;
  bool map_valid = false;
};

// Mirror mismatch of the conductivity field under (x,y) -> (y,x), with the
// tensor transformed accordingly (diagonal components swap, C1 fixed).
// Throws std::invalid_argument for an invalid map.
SymmetryError symmetry_error(const StateVector& state,
                             const MeshTopology& mesh, const SymmetryMap& map);

// Transformed components of one cell tensor under the diagonal reflection.
CellVec mirror_components(const CellVec& comps);

} // namespace netform
