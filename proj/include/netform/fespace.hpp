#pragma once

#include "netform/mesh.hpp"
#include "netform/types.hpp"

#include <vector>

namespace netform {

// Field-ordered unknowns: the d(d+1)/2 cellwise-constant conductivity
// components (C0, C1, ...), then the nodal pressure.
struct DofLayout {
  Index n_components = 0;
  Index n_cells = 0;
  Index n_vertices = 0;

  static DofLayout from_mesh(const MeshTopology& mesh) {
    return {sym_components(mesh.dim), mesh.n_cells(), mesh.n_vertices()};
  }

  Index n_cond_dofs() const { return n_components * n_cells; }
  Index n_pressure_dofs() const { return n_vertices; }
  Index size() const { return n_cond_dofs() + n_pressure_dofs(); }
  Index component_offset(Index m) const { return m * n_cells; }
  Index pressure_offset() const { return n_cond_dofs(); }
  Index cond_dof(Index component, Index cell) const {
    return component_offset(component) + cell;
  }
  std::vector<Index> field_offsets() const {
    std::vector<Index> off;
    for (Index m = 0; m <= n_components; ++m) off.push_back(m * n_cells);
    return off;
  }
  bool operator==(const DofLayout&) const = default;
};

struct StateVector {
  Vector data;
  Scalar time = 0;

  StateVector() = default;
  explicit StateVector(const DofLayout& layout, Scalar t = 0)
      : data(Vector::Zero(layout.size())), time(t) {}

  auto pressure(const DofLayout& l) { return data.segment(l.pressure_offset(), l.n_pressure_dofs()); }
  auto pressure(const DofLayout& l) const { return data.segment(l.pressure_offset(), l.n_pressure_dofs()); }
  auto component(const DofLayout& l, Index m) { return data.segment(l.component_offset(m), l.n_cells); }
  auto component(const DofLayout& l, Index m) const { return data.segment(l.component_offset(m), l.n_cells); }
};

// Stored symmetric components of a cell tensor, as a matrix:
// 2D (C0,C1,C2) -> [[C0,C1],[C1,C2]]; 3D (Cxx,Cxy,Cxz,Cyy,Cyz,Czz).
SmallMat components_to_matrix(const CellVec& comps, Index dim);
CellVec matrix_to_components(const SmallMat& C);
CellVec gather_components(const StateVector& u, const DofLayout& layout, Index cell);
SmallMat cell_tensor(const StateVector& u, const DofLayout& layout, Index cell);

// Per-cell, per-quadrature-point geometry used by assembly: physical basis
// gradients, basis values, and quadrature weight times |det J|.
struct FeCache {
  CellKind kind;
  Index dim = 0;
  Index n_qpoints = 0;
  QuadratureRule rule;
  // [cell][q]: (vpc x dim) physical gradients; wdet(cell, q) scalar weights.
  std::vector<std::vector<MatrixXd>> grads;
  MatrixXd wdet;       // n_cells x n_q
  MatrixXd basis;      // vpc x n_q, reference values (cell independent)
  MatrixXd qpoints_x;  // n_cells*n_q x dim, mapped quadrature points
  Vector lumped_pressure_mass; // sum over cells of vol/vpc at each vertex

  const MatrixXd& grad(Index cell, Index q) const { return grads[cell][q]; }
  RowVectorXd qpoint(Index cell, Index q) const {
    return qpoints_x.row(cell * n_qpoints + q);
  }
};

FeCache build_fe_cache(const MeshTopology& mesh, Index quad_degree);

// Gradient of the nodal pressure interpolant at a reference point of a cell.
Vector eval_pressure_gradient(const MeshTopology& mesh,
                              const Eigen::Ref<const Vector>& p_dofs,
                              Index cell, const Vector& xi);

} // namespace netform
