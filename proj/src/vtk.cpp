#include "netform/vtk.hpp"

#include "netform/model.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace netform {

namespace {

int vtk_cell_type(CellKind k) {
  switch (k) {
  case CellKind::Triangle: return 5;
  case CellKind::Quad: return 9;
  case CellKind::Hex: return 12;
  }
  return 0;
}

std::string fmt(Scalar v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* component_names_2d[] = {"C00", "C01", "C11"};
const char* component_names_3d[] = {"C00", "C01", "C02", "C11", "C12", "C22"};

void write_cell_scalars(std::ofstream& out, const std::string& name,
                        const std::vector<Scalar>& values) {
  out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (Scalar v : values) out << fmt(v) << "\n";
}

} // namespace

void write_vtk(const StateVector& state, const MeshTopology& mesh,
               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_vtk: cannot open '" + path + "'");
  const DofLayout layout = DofLayout::from_mesh(mesh);
  const Index vpc = verts_per_cell(mesh.kind);
  const Index nc = mesh.n_cells(), nv = mesh.n_vertices();

  out << "# vtk DataFile Version 3.0\n";
  out << "netform state t=" << fmt(state.time) << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (Index v = 0; v < nv; ++v) {
    out << fmt(mesh.vertices(v, 0)) << " " << fmt(mesh.vertices(v, 1)) << " "
        << fmt(mesh.dim == 3 ? mesh.vertices(v, 2) : 0.0) << "\n";
  }
  out << "CELLS " << nc << " " << nc * (vpc + 1) << "\n";
  for (Index c = 0; c < nc; ++c) {
    out << vpc;
    for (Index a = 0; a < vpc; ++a) out << " " << mesh.cells(c, a);
    out << "\n";
  }
  out << "CELL_TYPES " << nc << "\n";
  for (Index c = 0; c < nc; ++c) out << vtk_cell_type(mesh.kind) << "\n";

  out << "CELL_DATA " << nc << "\n";
  const auto names =
      mesh.dim == 2 ? component_names_2d : component_names_3d;
  std::vector<Scalar> column(nc);
  for (Index m = 0; m < layout.n_components; ++m) {
    for (Index c = 0; c < nc; ++c)
      column[c] = state.data(layout.cond_dof(m, c));
    write_cell_scalars(out, names[m], column);
  }
  std::vector<Scalar> cnorm(nc), lmin(nc);
  for (Index c = 0; c < nc; ++c) {
    const SmallMat C = cell_tensor(state, layout, c);
    cnorm[c] = C.norm();
    lmin[c] = min_eigenvalue(C);
  }
  write_cell_scalars(out, "Cnorm", cnorm);
  write_cell_scalars(out, "lambda_min", lmin);

  out << "POINT_DATA " << nv << "\n";
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (Index v = 0; v < nv; ++v)
    out << fmt(state.data(layout.pressure_offset() + v)) << "\n";
}

void write_threshold_cells(const StateVector& state, const MeshTopology& mesh,
                           Scalar threshold, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_threshold_cells: cannot open '" + path +
                             "'");
  const DofLayout layout = DofLayout::from_mesh(mesh);
  out << "# cells with |C|_F > " << fmt(threshold) << " at t="
      << fmt(state.time) << "\n";
  out << "# cell";
  for (Index d = 0; d < mesh.dim; ++d) out << " x" << d;
  out << " cnorm\n";
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    const Scalar norm = cell_tensor(state, layout, c).norm();
    if (norm <= threshold) continue;
    out << c;
    const RowVectorXd x = mesh.centroid(c);
    for (Index d = 0; d < mesh.dim; ++d) out << " " << fmt(x(d));
    out << " " << fmt(norm) << "\n";
  }
}

} // namespace netform
