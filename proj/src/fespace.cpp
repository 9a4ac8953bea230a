#include "netform/fespace.hpp"

#include <stdexcept>

namespace netform {

SmallMat components_to_matrix(const CellVec& comps, Index dim) {
  SmallMat C(dim, dim);
  if (dim == 2) {
    C << comps(0), comps(1),
         comps(1), comps(2);
  } else {
    C << comps(0), comps(1), comps(2),
         comps(1), comps(3), comps(4),
         comps(2), comps(4), comps(5);
  }
  return C;
}

CellVec matrix_to_components(const SmallMat& C) {
  const Index dim = static_cast<Index>(C.rows());
  CellVec v(sym_components(dim));
  if (dim == 2)
    v << C(0, 0), C(0, 1), C(1, 1);
  else
    v << C(0, 0), C(0, 1), C(0, 2), C(1, 1), C(1, 2), C(2, 2);
  return v;
}

CellVec gather_components(const StateVector& u, const DofLayout& layout,
                          Index cell) {
  CellVec v(layout.n_components);
  for (Index m = 0; m < layout.n_components; ++m)
    v(m) = u.data(layout.cond_dof(m, cell));
  return v;
}

SmallMat cell_tensor(const StateVector& u, const DofLayout& layout,
                     Index cell) {
  const Index dim = layout.n_components == 3 ? 2 : 3;
  return components_to_matrix(gather_components(u, layout, cell), dim);
}

FeCache build_fe_cache(const MeshTopology& mesh, Index quad_degree) {
  FeCache fe;
  fe.kind = mesh.kind;
  fe.dim = mesh.dim;
  fe.rule = quadrature_for(mesh.kind, quad_degree);
  fe.n_qpoints = static_cast<Index>(fe.rule.points.rows());
  const Index vpc = verts_per_cell(mesh.kind);
  const Index nc = mesh.n_cells();

  fe.basis.resize(vpc, fe.n_qpoints);
  std::vector<MatrixXd> dref(fe.n_qpoints);
  for (Index q = 0; q < fe.n_qpoints; ++q) {
    const Vector xi = fe.rule.points.row(q).transpose();
    fe.basis.col(q) = shape_values(mesh.kind, xi);
    dref[q] = shape_gradients(mesh.kind, xi);
  }

  fe.grads.assign(nc, std::vector<MatrixXd>(fe.n_qpoints));
  fe.wdet.resize(nc, fe.n_qpoints);
  fe.qpoints_x.resize(nc * fe.n_qpoints, mesh.dim);
  for (Index c = 0; c < nc; ++c) {
    for (Index q = 0; q < fe.n_qpoints; ++q) {
      MatrixXd J = MatrixXd::Zero(mesh.dim, mesh.dim);
      for (Index a = 0; a < vpc; ++a)
        J += mesh.vertices.row(mesh.cells(c, a)).transpose() * dref[q].row(a);
      const Scalar det = J.determinant();
      if (det <= 0)
        throw std::runtime_error("fe cache: non-positive Jacobian in cell " +
                                 std::to_string(c));
      fe.wdet(c, q) = fe.rule.weights(q) * det;
      // Physical gradients: rows are dref * J^{-1}.
      fe.grads[c][q] = dref[q] * J.inverse();
      RowVectorXd x = RowVectorXd::Zero(mesh.dim);
      for (Index a = 0; a < vpc; ++a)
        x += fe.basis(a, q) * mesh.vertices.row(mesh.cells(c, a));
      fe.qpoints_x.row(c * fe.n_qpoints + q) = x;
    }
  }

  fe.lumped_pressure_mass = Vector::Zero(mesh.n_vertices());
  for (Index c = 0; c < nc; ++c)
    for (Index a = 0; a < vpc; ++a)
      fe.lumped_pressure_mass(mesh.cells(c, a)) += mesh.cell_volumes(c) / vpc;
  return fe;
}

Vector eval_pressure_gradient(const MeshTopology& mesh,
                              const Eigen::Ref<const Vector>& p_dofs,
                              Index cell, const Vector& xi) {
  const Index vpc = verts_per_cell(mesh.kind);
  const MatrixXd dref = shape_gradients(mesh.kind, xi);
  MatrixXd J = MatrixXd::Zero(mesh.dim, mesh.dim);
  for (Index a = 0; a < vpc; ++a)
    J += mesh.vertices.row(mesh.cells(cell, a)).transpose() * dref.row(a);
  const MatrixXd phys = dref * J.inverse();
  Vector g = Vector::Zero(mesh.dim);
  for (Index a = 0; a < vpc; ++a)
    g += p_dofs(mesh.cells(cell, a)) * phys.row(a).transpose();
  return g;
}

} // namespace netform
