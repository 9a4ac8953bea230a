#include "netform/assembly.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <stdexcept>

namespace netform {

Vector BlockJacobian::apply(const Vector& v) const {
  const Index nc = layout.n_cells;
  const Index ncomp = layout.n_components;
  const auto v_c = v.head(layout.n_cond_dofs());
  const auto v_p = v.tail(layout.n_pressure_dofs());
  Vector y(v.size());

  CellVec local(ncomp), out(ncomp);
  for (Index k = 0; k < nc; ++k) {
    for (Index m = 0; m < ncomp; ++m) local(m) = v_c(m * nc + k);
    out.noalias() = J00[k] * local;
    for (Index m = 0; m < ncomp; ++m) y(m * nc + k) = out(m);
  }
  y.head(layout.n_cond_dofs()) += J01 * v_p;
  y.tail(layout.n_pressure_dofs()) = J01.transpose() * v_c - D * v_p;
  return y;
}

MatrixXd BlockJacobian::dense() const {
  const Index n = layout.size();
  const Index nc = layout.n_cells;
  const Index ncomp = layout.n_components;
  MatrixXd A = MatrixXd::Zero(n, n);
  for (Index k = 0; k < nc; ++k)
    for (Index m = 0; m < ncomp; ++m)
      for (Index mm = 0; mm < ncomp; ++mm)
        A(m * nc + k, mm * nc + k) = J00[k](m, mm);
  const Index off = layout.pressure_offset();
  A.block(0, off, layout.n_cond_dofs(), layout.n_pressure_dofs()) =
      MatrixXd(J01);
  A.block(off, 0, layout.n_pressure_dofs(), layout.n_cond_dofs()) =
      MatrixXd(J01).transpose();
  A.block(off, off, layout.n_pressure_dofs(), layout.n_pressure_dofs()) =
      -MatrixXd(D);
  return A;
}

namespace {

// Flat index of (row, col) inside a compressed row-major pattern.
Index slot_of(const SparseMat& A, Index row, Index col) {
  const Index* cols = A.innerIndexPtr();
  const Index begin = A.outerIndexPtr()[row];
  const Index end = A.outerIndexPtr()[row + 1];
  const Index* it = std::lower_bound(cols + begin, cols + end, col);
  if (it == cols + end || *it != col)
    throw std::logic_error("assembly: sparsity slot not found");
  return static_cast<Index>(it - cols);
}

} // namespace

Assembler::Assembler(const MeshTopology& mesh, const FeCache& fe,
                     const ModelParams& params, const SourceSpec& source,
                     AssemblyOptions opts)
    : mesh_(mesh), fe_(fe), params_(params), source_(source), opts_(opts),
      layout_(DofLayout::from_mesh(mesh)) {
  params_.validate();
  const Index ncomp = layout_.n_components;
  s_scale_.resize(ncomp);
  if (mesh.dim == 2) {
    comp_ab_ = {{0, 0}, {0, 1}, {1, 1}};
  } else {
    comp_ab_ = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  }
  for (Index m = 0; m < ncomp; ++m) {
    const bool diag = comp_ab_[m].first == comp_ab_[m].second;
    s_scale_(m) = opts_.symmetrized ? (diag ? 0.5 : 1.0) : 1.0;
  }
  build_patterns();

  source_q_.resize(mesh.n_cells(), fe_.n_qpoints);
  for (Index c = 0; c < mesh.n_cells(); ++c)
    for (Index q = 0; q < fe_.n_qpoints; ++q)
      source_q_(c, q) = source_.eval(fe_.qpoint(c, q));
}

void Assembler::build_patterns() {
  const Index vpc = verts_per_cell(mesh_.kind);
  const Index nc = mesh_.n_cells();
  const Index np = layout_.n_pressure_dofs();
  const Index ncomp = layout_.n_components;

  std::vector<Eigen::Triplet<Scalar>> trips;
  trips.reserve(static_cast<size_t>(nc) * vpc * vpc);
  for (Index c = 0; c < nc; ++c)
    for (Index a = 0; a < vpc; ++a)
      for (Index b = 0; b < vpc; ++b)
        trips.emplace_back(mesh_.cells(c, a), mesh_.cells(c, b), 0.0);
  d_pattern_.resize(np, np);
  d_pattern_.setFromTriplets(trips.begin(), trips.end());
  d_pattern_.makeCompressed();
  d_slot_.resize(static_cast<size_t>(nc) * vpc * vpc);
  for (Index c = 0; c < nc; ++c)
    for (Index a = 0; a < vpc; ++a)
      for (Index b = 0; b < vpc; ++b)
        d_slot_[(static_cast<size_t>(c) * vpc + a) * vpc + b] =
            slot_of(d_pattern_, mesh_.cells(c, a), mesh_.cells(c, b));

  trips.clear();
  for (Index c = 0; c < nc; ++c)
    for (Index m = 0; m < ncomp; ++m)
      for (Index a = 0; a < vpc; ++a)
        trips.emplace_back(layout_.cond_dof(m, c), mesh_.cells(c, a), 0.0);
  j01_pattern_.resize(layout_.n_cond_dofs(), np);
  j01_pattern_.setFromTriplets(trips.begin(), trips.end());
  j01_pattern_.makeCompressed();
  b_slot_.resize(static_cast<size_t>(nc) * ncomp * vpc);
  for (Index c = 0; c < nc; ++c)
    for (Index m = 0; m < ncomp; ++m)
      for (Index a = 0; a < vpc; ++a)
        b_slot_[(static_cast<size_t>(c) * ncomp + m) * vpc + a] =
            slot_of(j01_pattern_, layout_.cond_dof(m, c), mesh_.cells(c, a));
}

Vector Assembler::residual(const StateVector& u, const Vector& udot,
                           Scalar /*t*/) const {
  const Index nc = mesh_.n_cells();
  const Index vpc = verts_per_cell(mesh_.kind);
  const Index ncomp = layout_.n_components;
  const Index p_off = layout_.pressure_offset();
  const Scalar p_sign = opts_.symmetrized ? -1.0 : 1.0;
  Vector F = Vector::Zero(layout_.size());

  Vector g(mesh_.dim);
  CellVec Q(ncomp);
  for (Index c = 0; c < nc; ++c) {
    const CellVec comps = gather_components(u, layout_, c);
    const SmallMat C = components_to_matrix(comps, mesh_.dim);
    if (opts_.ellipticity_guard) {
      const Scalar ell = min_eigenvalue(C) + params_.r;
      if (ell <= 0) throw EllipticityError(c, ell);
    }
    const Scalar mC = metabolic_factor(C, params_);
    SmallMat K = C;
    K.diagonal().array() += params_.r;

    Q.setZero();
    for (Index q = 0; q < fe_.n_qpoints; ++q) {
      const MatrixXd& dphi = fe_.grad(c, q);
      g.setZero();
      for (Index a = 0; a < vpc; ++a)
        g += u.data(p_off + mesh_.cells(c, a)) * dphi.row(a).transpose();
      const Scalar w = fe_.wdet(c, q);
      for (Index m = 0; m < ncomp; ++m)
        Q(m) += w * g(comp_ab_[m].first) * g(comp_ab_[m].second);
      const Vector flux = K * g;
      for (Index a = 0; a < vpc; ++a)
        F(p_off + mesh_.cells(c, a)) +=
            p_sign * (w * dphi.row(a).dot(flux) - w * source_q_(c, q) *
                      fe_.basis(a, q));
    }
    const Scalar vol = mesh_.cell_volumes(c);
    for (Index m = 0; m < ncomp; ++m)
      F(layout_.cond_dof(m, c)) =
          s_scale_(m) *
          (vol * (udot(layout_.cond_dof(m, c)) + mC * comps(m)) - Q(m));
  }
  return F;
}

BlockJacobian Assembler::jacobian(const StateVector& u, Scalar sigma) const {
  const Index nc = mesh_.n_cells();
  const Index vpc = verts_per_cell(mesh_.kind);
  const Index ncomp = layout_.n_components;
  const Index p_off = layout_.pressure_offset();

  BlockJacobian J;
  J.layout = layout_;
  J.sigma = sigma;
  J.J00.resize(nc);
  J.J01 = j01_pattern_;
  J.D = d_pattern_;
  Scalar* j01v = J.J01.valuePtr();
  Scalar* dv = J.D.valuePtr();
  std::fill(j01v, j01v + J.J01.nonZeros(), 0.0);
  std::fill(dv, dv + J.D.nonZeros(), 0.0);

  Vector g(mesh_.dim);
  for (Index c = 0; c < nc; ++c) {
    const CellVec comps = gather_components(u, layout_, c);
    const SmallMat C = components_to_matrix(comps, mesh_.dim);
    const JacCoeffs jc = jacobian_coeffs(C, params_);
    const Scalar vol = mesh_.cell_volumes(c);
    SmallMat K = C;
    K.diagonal().array() += params_.r;

    // J00 block: vol [ (sigma + nu alpha) diag(s) + nu beta v v^T ],
    // v_m = 2 s_m C^m; the rank-one part carries the
    // [[1,2,1],[2,4,2],[1,2,1]] factor pattern across components.
    CellBlock& blk = J.J00[c];
    CellVec v(ncomp);
    for (Index m = 0; m < ncomp; ++m) v(m) = 2.0 * s_scale_(m) * comps(m);
    blk = (params_.nu * jc.beta * vol) * (v * v.transpose());
    for (Index m = 0; m < ncomp; ++m)
      blk(m, m) += vol * (sigma + params_.nu * jc.alpha) * s_scale_(m);

    for (Index q = 0; q < fe_.n_qpoints; ++q) {
      const MatrixXd& dphi = fe_.grad(c, q);
      g.setZero();
      for (Index a = 0; a < vpc; ++a)
        g += u.data(p_off + mesh_.cells(c, a)) * dphi.row(a).transpose();
      const Scalar w = fe_.wdet(c, q);

      for (Index m = 0; m < ncomp; ++m) {
        const auto [aa, bb] = comp_ab_[m];
        const Scalar scale = opts_.symmetrized ? s_scale_(m) : 1.0;
        for (Index a = 0; a < vpc; ++a) {
          const Scalar coupling =
              g(aa) * dphi(a, bb) + g(bb) * dphi(a, aa);
          j01v[b_slot_[(static_cast<size_t>(c) * ncomp + m) * vpc + a]] -=
              scale * w * coupling;
        }
      }
      for (Index a = 0; a < vpc; ++a) {
        const Vector Kda = K * dphi.row(a).transpose();
        for (Index b = 0; b < vpc; ++b)
          dv[d_slot_[(static_cast<size_t>(c) * vpc + a) * vpc + b]] +=
              w * dphi.row(b).dot(Kda);
      }
    }
  }
  return J;
}

void Assembler::poisson_only(const StateVector& u, SparseMat& D,
                             Vector& rhs) const {
  const Index nc = mesh_.n_cells();
  const Index vpc = verts_per_cell(mesh_.kind);

  D = d_pattern_;
  Scalar* dv = D.valuePtr();
  std::fill(dv, dv + D.nonZeros(), 0.0);
  rhs = Vector::Zero(layout_.n_pressure_dofs());

  for (Index c = 0; c < nc; ++c) {
    const SmallMat C = cell_tensor(u, layout_, c);
    const Scalar ell = min_eigenvalue(C) + params_.r;
    if (ell <= 0) throw EllipticityError(c, ell);
    SmallMat K = C;
    K.diagonal().array() += params_.r;
    for (Index q = 0; q < fe_.n_qpoints; ++q) {
      const MatrixXd& dphi = fe_.grad(c, q);
      const Scalar w = fe_.wdet(c, q);
      for (Index a = 0; a < vpc; ++a) {
        const Vector Kda = K * dphi.row(a).transpose();
        for (Index b = 0; b < vpc; ++b)
          dv[d_slot_[(static_cast<size_t>(c) * vpc + a) * vpc + b]] +=
              w * dphi.row(b).dot(Kda);
        rhs(mesh_.cells(c, a)) += w * source_q_(c, q) * fe_.basis(a, q);
      }
    }
  }
}

Vector Assembler::consistent_rate(const StateVector& u) const {
  Vector rate = Vector::Zero(layout_.size());
  for (Index c = 0; c < mesh_.n_cells(); ++c) {
    const CellVec comps = gather_components(u, layout_, c);
    const SmallMat C = components_to_matrix(comps, mesh_.dim);
    const Scalar mC = metabolic_factor(C, params_);
    const CellVec outer = average_outer(u, c);
    for (Index m = 0; m < layout_.n_components; ++m)
      rate(layout_.cond_dof(m, c)) = outer(m) - mC * comps(m);
  }
  return rate;
}

CellVec Assembler::average_outer(const StateVector& u, Index cell) const {
  const Index vpc = verts_per_cell(mesh_.kind);
  const Index p_off = layout_.pressure_offset();
  CellVec Q = CellVec::Zero(layout_.n_components);
  Vector g(mesh_.dim);
  for (Index q = 0; q < fe_.n_qpoints; ++q) {
    const MatrixXd& dphi = fe_.grad(cell, q);
    g.setZero();
    for (Index a = 0; a < vpc; ++a)
      g += u.data(p_off + mesh_.cells(cell, a)) * dphi.row(a).transpose();
    for (Index m = 0; m < layout_.n_components; ++m)
      Q(m) += fe_.wdet(cell, q) * g(comp_ab_[m].first) * g(comp_ab_[m].second);
  }
  return Q / mesh_.cell_volumes(cell);
}

} // namespace netform
