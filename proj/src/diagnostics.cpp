#include "netform/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace netform {

namespace {

std::string fmt(Scalar v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace

LogRow log_step(const StateVector& state, const StepStats& stats,
                const MeshTopology& mesh, const FeCache& fe,
                const ModelParams& params, Scalar prev_energy,
                Scalar prev_time) {
  LogRow row;
  row.t = state.time;
  row.dt = stats.dt;
  row.energy = energy(state, mesh, fe, params);
  row.dE_dt_neg = (prev_energy - row.energy) / (state.time - prev_time);
  row.spsd_fraction = min_eig_fraction(state, mesh);
  row.newton_iters = stats.newton_iters;
  row.krylov_avg = stats.newton_iters > 0
                       ? static_cast<Scalar>(stats.krylov_total) /
                             static_cast<Scalar>(stats.newton_iters)
                       : 0.0;
  row.wall_time = stats.wall_time;
  return row;
}

void write_csv(const RunLog& log, std::ostream& out) {
  out << "# netform run log\n";
  out << "# build: " << log.build_id << "\n";
  out << "# scheme: " << log.scheme << "\n";
  out << "# mesh: " << log.mesh_descriptor << "\n";
  out << "# params: r=" << fmt(log.params.r) << " nu=" << fmt(log.params.nu)
      << " gamma=" << fmt(log.params.gamma) << " eps=" << fmt(log.params.eps)
      << " dim=" << log.params.dim << "\n";
  out << "# initial: t=" << fmt(log.initial_time)
      << " E=" << fmt(log.initial_energy) << "\n";
  out << "# status: " << (log.completed ? "completed" : "failed") << "\n";
  if (!log.failure.empty()) out << "# failure: " << log.failure << "\n";
  out << "t,dt,E,dE_dt_neg,spsd_fraction,newton_iters,krylov_avg\n";
  for (const LogRow& r : log.rows)
    out << fmt(r.t) << "," << fmt(r.dt) << "," << fmt(r.energy) << ","
        << fmt(r.dE_dt_neg) << "," << fmt(r.spsd_fraction) << ","
        << r.newton_iters << "," << fmt(r.krylov_avg) << "\n";
}

void write_csv(const RunLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_csv: cannot open '" + path + "'");
  write_csv(log, out);
}

CellVec mirror_components(const CellVec& comps) {
  CellVec m = comps;
  if (comps.size() == 3) {
    std::swap(m(0), m(2));
  } else {
    // (xx,xy,xz,yy,yz,zz) under x<->y: xx<->yy, xz<->yz.
    std::swap(m(0), m(3));
    std::swap(m(2), m(4));
  }
  return m;
}

SymmetryError symmetry_error(const StateVector& state,
                             const MeshTopology& mesh,
                             const SymmetryMap& map) {
  if (!map.valid)
    throw std::invalid_argument("symmetry_error: symmetry map is not valid");
  const DofLayout layout = DofLayout::from_mesh(mesh);
  SymmetryError err;
  err.map_valid = true;
  Scalar sq = 0, ref_sq = 0;
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    const CellVec a = gather_components(state, layout, c);
    const CellVec b = gather_components(state, layout, map.mirror[c]);
    const SmallMat diff =
        components_to_matrix(b, mesh.dim) -
        components_to_matrix(mirror_components(a), mesh.dim);
    const Scalar d = diff.norm();
    err.linf = std::max(err.linf, d);
    sq += mesh.cell_volumes(c) * d * d;
    ref_sq += mesh.cell_volumes(c) *
              components_to_matrix(a, mesh.dim).squaredNorm();
  }
  err.l2 = std::sqrt(sq);
  err.l2_rel = ref_sq > 0 ? err.l2 / std::sqrt(ref_sq) : err.l2;
  return err;
}

} // namespace netform
