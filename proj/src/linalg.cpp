#include "netform/linalg.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace netform {

void project_mean_zero(Eigen::Ref<Vector> v, const Vector& lumped_mass) {
  const Scalar mean = lumped_mass.dot(v) / lumped_mass.sum();
  v.array() -= mean;
}

Vector J00Factor::apply(const Vector& v_cond) const {
  Vector out(v_cond.size());
  CellVec local(n_components);
  for (Index k = 0; k < n_cells; ++k) {
    for (Index m = 0; m < n_components; ++m)
      local(m) = v_cond(m * n_cells + k);
    blocks[k].solveInPlace(local);
    for (Index m = 0; m < n_components; ++m)
      out(m * n_cells + k) = local(m);
  }
  return out;
}

void J00Factor::solve_in_place(Index cell, Eigen::Ref<MatrixXd> rhs) const {
  blocks[cell].solveInPlace(rhs);
}

J00Factor invert_J00_blocks(const BlockJacobian& J) {
  J00Factor f;
  f.n_cells = J.layout.n_cells;
  f.n_components = J.layout.n_components;
  f.blocks.resize(f.n_cells);
  for (Index k = 0; k < f.n_cells; ++k) {
    f.blocks[k].compute(J.J00[k]);
    if (f.blocks[k].info() != Eigen::Success)
      throw SolverBreakdown("invert_J00_blocks: non-SPD block at cell " +
                            std::to_string(k) +
                            " (large sigma restores definiteness)");
  }
  return f;
}

GaussSeidelPrec::GaussSeidelPrec(const SparseMat& A) : A_(&A) {
  const Index n = static_cast<Index>(A.rows());
  diag_slot_.resize(n);
  const Index* cols = A.innerIndexPtr();
  for (Index i = 0; i < n; ++i) {
    const Index begin = A.outerIndexPtr()[i], end = A.outerIndexPtr()[i + 1];
    const Index* it = std::lower_bound(cols + begin, cols + end, i);
    if (it == cols + end || *it != i)
      throw std::runtime_error("GaussSeidelPrec: missing diagonal entry");
    diag_slot_[i] = static_cast<Index>(it - cols);
  }
}

Vector GaussSeidelPrec::operator()(const Vector& r) const {
  const SparseMat& A = *A_;
  const Index n = static_cast<Index>(A.rows());
  const Index* outer = A.outerIndexPtr();
  const Index* cols = A.innerIndexPtr();
  const Scalar* vals = A.valuePtr();
  Vector z(n);
  // Forward sweep: (L + D) z = r.
  for (Index i = 0; i < n; ++i) {
    Scalar acc = r(i);
    for (Index s = outer[i]; s < outer[i + 1] && cols[s] < i; ++s)
      acc -= vals[s] * z(cols[s]);
    z(i) = acc / vals[diag_slot_[i]];
  }
  // Scale by D, then backward sweep: (D + U) out = D z.
  for (Index i = 0; i < n; ++i) z(i) *= vals[diag_slot_[i]];
  for (Index i = n - 1; i >= 0; --i) {
    Scalar acc = z(i);
    for (Index s = outer[i + 1] - 1; s >= outer[i] && cols[s] > i; --s)
      acc -= vals[s] * z(cols[s]);
    z(i) = acc / vals[diag_slot_[i]];
  }
  return z;
}

SparseMat build_schur_matrix(const BlockJacobian& J, const J00Factor& f,
                             SchurCache* cache) {
  const Index nc = J.layout.n_cells;
  const Index ncomp = J.layout.n_components;
  const Index* outer = J.J01.outerIndexPtr();
  const Index* cols = J.J01.innerIndexPtr();
  const Scalar* vals = J.J01.valuePtr();

  SchurCache local_cache;
  SchurCache& cc = cache ? *cache : local_cache;
  if (!cc.built) {
    cc.pattern = J.D;
    std::fill(cc.pattern.valuePtr(),
              cc.pattern.valuePtr() + cc.pattern.nonZeros(), 0.0);
    cc.cell_verts_sorted.resize(nc);
    // Vertices of each cell, in the (sorted) order J01 rows store them.
    for (Index k = 0; k < nc; ++k) {
      const Index row = k; // component 0 row of cell k
      for (Index s = outer[row]; s < outer[row + 1]; ++s)
        cc.cell_verts_sorted[k].push_back(cols[s]);
    }
    const Index* pouter = cc.pattern.outerIndexPtr();
    const Index* pcols = cc.pattern.innerIndexPtr();
    cc.slots.clear();
    for (Index k = 0; k < nc; ++k) {
      const auto& vs = cc.cell_verts_sorted[k];
      for (Index a = 0; a < static_cast<Index>(vs.size()); ++a)
        for (Index b = 0; b < static_cast<Index>(vs.size()); ++b) {
          const Index* it = std::lower_bound(pcols + pouter[vs[a]],
                                             pcols + pouter[vs[a] + 1], vs[b]);
          cc.slots.push_back(static_cast<Index>(it - pcols));
        }
    }
    cc.built = true;
  }

  SparseMat S = J.D;
  Scalar* sv = S.valuePtr();
  MatrixXd B, X, W;
  size_t slot_pos = 0;
  for (Index k = 0; k < nc; ++k) {
    const Index vpc = static_cast<Index>(cc.cell_verts_sorted[k].size());
    B.resize(ncomp, vpc);
    for (Index m = 0; m < ncomp; ++m) {
      const Index row = m * nc + k;
      for (Index s = outer[row], a = 0; s < outer[row + 1]; ++s, ++a)
        B(m, a) = vals[s];
    }
    X = B;
    f.solve_in_place(k, X);
    W.noalias() = B.transpose() * X;
    for (Index a = 0; a < vpc; ++a)
      for (Index b = 0; b < vpc; ++b)
        sv[cc.slots[slot_pos++]] += W(a, b);
  }
  return S;
}

SchurPreconditioner::SchurPreconditioner(const BlockJacobian& J,
                                         const Vector& lumped_mass,
                                         const SchurOptions& opts,
                                         SchurCache* cache)
    : J_(&J), lumped_mass_(lumped_mass), opts_(opts),
      j00_(invert_J00_blocks(J)), S_(build_schur_matrix(J, j00_, cache)) {
  if (opts_.inner == InnerSolverKind::Direct) {
    // Drop the last pressure dof: the reduced matrix is SPD and the solve
    // is exact on the mean-zero complement for compatible right-hand sides.
    const Index n = static_cast<Index>(S_.rows());
    Eigen::SparseMatrix<Scalar> reduced =
        Eigen::SparseMatrix<Scalar>(S_).topLeftCorner(n - 1, n - 1);
    direct_.compute(reduced);
    if (direct_.info() != Eigen::Success)
      throw SolverBreakdown("SchurPreconditioner: factorization failed");
  } else {
    sgs_ = std::make_unique<GaussSeidelPrec>(S_);
  }
}

Vector SchurPreconditioner::solve_schur(const Vector& b) const {
  ++counters_.schur_solves;
  Vector rhs = b;
  rhs.array() -= rhs.mean(); // compatibility: range(S) is orthogonal to 1
  Vector x(b.size());
  if (opts_.inner == InnerSolverKind::Direct) {
    const Index n = static_cast<Index>(b.size());
    x.head(n - 1) = direct_.solve(rhs.head(n - 1));
    x(n - 1) = 0.0;
  } else {
    const auto A = [this](const Vector& v) -> Vector { return S_ * v; };
    KrylovResult res = pcg(A, rhs, *sgs_, opts_.inner_rtol,
                           opts_.inner_max_iters, &lumped_mass_);
    counters_.inner_iterations += res.iterations;
    if (!res.ok()) ++counters_.inner_failures;
    x = res.x;
  }
  project_mean_zero(x, lumped_mass_);
  return x;
}

Vector SchurPreconditioner::apply(const Vector& rhs) const {
  const DofLayout& layout = J_->layout;
  const auto f = rhs.head(layout.n_cond_dofs());
  const auto g = rhs.tail(layout.n_pressure_dofs());

  const Vector t = j00_.apply(f);
  ++counters_.j00_applies;
  const Vector s_rhs = g - J_->J01.transpose() * t;
  Vector x(rhs.size());
  auto x_p = x.tail(layout.n_pressure_dofs());
  x_p = -solve_schur(s_rhs);
  x.head(layout.n_cond_dofs()) = t - j00_.apply(J_->J01 * x_p);
  ++counters_.j00_applies;
  return x;
}

KrylovResult solve_neumann(const SparseMat& A, const Vector& rhs,
                           const Vector& lumped_mass,
                           const SchurOptions& opts) {
  KrylovResult out;
  Vector b = rhs;
  b.array() -= b.mean();
  if (opts.inner == InnerSolverKind::Direct) {
    const Index n = static_cast<Index>(A.rows());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> ldlt;
    ldlt.compute(Eigen::SparseMatrix<Scalar>(A).topLeftCorner(n - 1, n - 1));
    if (ldlt.info() != Eigen::Success) {
      out.status = SolveStatus::NegativeCurvature;
      return out;
    }
    out.x = Vector::Zero(n);
    out.x.head(n - 1) = ldlt.solve(b.head(n - 1));
    out.residual_norm = (A * out.x - b).norm();
  } else {
    const GaussSeidelPrec sgs(A);
    const auto op = [&A](const Vector& v) -> Vector { return A * v; };
    out = pcg(op, b, sgs, opts.inner_rtol, opts.inner_max_iters, &lumped_mass);
  }
  project_mean_zero(out.x, lumped_mass);
  return out;
}

void write_matrix_market(const SparseMat& A, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_matrix_market: cannot open '" + path + "'");
  out << "%%MatrixMarket matrix coordinate real general\n";
  out.precision(17);
  out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  for (Index r = 0; r < A.outerSize(); ++r)
    for (SparseMat::InnerIterator it(A, r); it; ++it)
      out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

} // namespace netform
