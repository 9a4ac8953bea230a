#pragma once

#include "netform/assembly.hpp"
#include "netform/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include <memory>
#include <string>
#include <vector>

namespace netform {

// Subtracts the mass-weighted mean; idempotent.
void project_mean_zero(Eigen::Ref<Vector> v, const Vector& lumped_mass);

enum class SolveStatus { Converged, MaxIterations, Stagnated, NegativeCurvature };

struct KrylovResult {
  Vector x;
  Index iterations = 0;
  Scalar residual_norm = 0;
  SolveStatus status = SolveStatus::Converged;
  bool ok() const { return status == SolveStatus::Converged; }
};

struct GmresOptions {
  Scalar rtol = 1e-8;
  Scalar atol = 0.0;
  Index restart = 30;
  Index max_iters = 500;
};

struct IdentityPrec {
  Vector operator()(const Vector& v) const { return v; }
};

// Right-preconditioned restarted GMRES: the monitored norm is the true
// residual of A x = b. Non-convergence returns the best iterate found.
template <class Op, class Prec>
KrylovResult gmres(Op&& A, const Vector& b, Prec&& M,
                   const GmresOptions& opts) {
  KrylovResult out;
  const Index n = static_cast<Index>(b.size());
  const Scalar bnorm = b.norm();
  const Scalar tol = std::max(opts.rtol * bnorm, opts.atol);
  out.x = Vector::Zero(n);
  if (bnorm == 0.0) return out;

  Vector r = b;
  Scalar beta = bnorm;
  const Index m = std::max<Index>(1, opts.restart);
  MatrixXd V(n, m + 1);
  MatrixXd H = MatrixXd::Zero(m + 1, m);
  Vector cs(m), sn(m), g(m + 1);
  Scalar best_res = beta;

  while (out.iterations < opts.max_iters) {
    V.col(0) = r / beta;
    g.setZero();
    g(0) = beta;
    Index j = 0;
    for (; j < m && out.iterations < opts.max_iters; ++j) {
      Vector w = A(M(V.col(j)));
      for (Index i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(w);
        w -= H(i, j) * V.col(i);
      }
      H(j + 1, j) = w.norm();
      const bool breakdown = H(j + 1, j) <= 1e-14 * beta;
      if (!breakdown) V.col(j + 1) = w / H(j + 1, j);
      for (Index i = 0; i < j; ++i) {
        const Scalar t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
        H(i + 1, j) = -sn(i) * H(i, j) + cs(i) * H(i + 1, j);
        H(i, j) = t;
      }
      const Scalar denom = std::hypot(H(j, j), H(j + 1, j));
      cs(j) = H(j, j) / denom;
      sn(j) = H(j + 1, j) / denom;
      H(j, j) = denom;
      H(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      ++out.iterations;
      if (std::abs(g(j + 1)) <= tol || breakdown) {
        ++j;
        break;
      }
    }
    // Solve the small triangular system and update the iterate.
    Vector y = H.topLeftCorner(j, j)
                   .template triangularView<Eigen::Upper>()
                   .solve(g.head(j));
    out.x += M(V.leftCols(j) * y);
    r = b - A(out.x);
    const Scalar res = r.norm();
    out.residual_norm = res;
    if (res <= tol) {
      out.status = SolveStatus::Converged;
      return out;
    }
    if (res >= best_res * (1.0 - 1e-12) && out.iterations >= m) {
      out.status = SolveStatus::Stagnated;
      return out;
    }
    best_res = std::min(best_res, res);
    beta = res;
  }
  out.status = SolveStatus::MaxIterations;
  return out;
}

// Preconditioned conjugate gradients for SPD (possibly singular) systems.
// When `nullspace_guard` is non-null, residual and search directions are kept
// orthogonal to the constant vector and the solution is returned with
// mass-weighted zero mean.
template <class Op, class Prec>
KrylovResult pcg(Op&& A, const Vector& b, Prec&& M, Scalar rtol,
                 Index max_iters, const Vector* nullspace_guard = nullptr) {
  KrylovResult out;
  const Index n = static_cast<Index>(b.size());
  Vector r = b;
  if (nullspace_guard) r.array() -= r.mean();
  const Scalar tol = rtol * r.norm();
  out.x = Vector::Zero(n);
  if (r.norm() == 0.0) return out;

  Vector z = M(r);
  if (nullspace_guard) z.array() -= z.mean();
  Vector p = z;
  Scalar rz = r.dot(z);
  for (Index it = 0; it < max_iters; ++it) {
    const Vector q = A(p);
    const Scalar pq = p.dot(q);
    if (pq <= 0.0) {
      out.status = SolveStatus::NegativeCurvature;
      out.residual_norm = r.norm();
      return out;
    }
    const Scalar alpha = rz / pq;
    out.x += alpha * p;
    r -= alpha * q;
    if (nullspace_guard) r.array() -= r.mean();
    ++out.iterations;
    out.residual_norm = r.norm();
    if (out.residual_norm <= tol) {
      if (nullspace_guard) project_mean_zero(out.x, *nullspace_guard);
      out.status = SolveStatus::Converged;
      return out;
    }
    z = M(r);
    if (nullspace_guard) z.array() -= z.mean();
    const Scalar rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  if (nullspace_guard) project_mean_zero(out.x, *nullspace_guard);
  out.status = SolveStatus::MaxIterations;
  return out;
}

// Per-cell Cholesky factors of the cell-block-diagonal J00.
struct J00Factor {
  Index n_cells = 0;
  Index n_components = 0;
  std::vector<Eigen::LLT<CellBlock>> blocks;

  // J00^{-1} v on the field-major conductivity block.
  Vector apply(const Vector& v_cond) const;
  // In-place solve of a block right-hand side for one cell.
  void solve_in_place(Index cell, Eigen::Ref<MatrixXd> rhs) const;
};

// Throws std::runtime_error naming the first non-SPD cell block.
J00Factor invert_J00_blocks(const BlockJacobian& J);

// Symmetric Gauss-Seidel sweep preconditioner over a CSR matrix.
class GaussSeidelPrec {
public:
  explicit GaussSeidelPrec(const SparseMat& A);
  Vector operator()(const Vector& r) const;

private:
  const SparseMat* A_;
  std::vector<Index> diag_slot_;
};

enum class InnerSolverKind { Direct, PCG };

struct SchurOptions {
  InnerSolverKind inner = InnerSolverKind::Direct;
  Scalar inner_rtol = 1e-10;
  Index inner_max_iters = 5000;
};

// Reusable sparsity/slot workspace for repeated build_schur calls on the
// same mesh; filled on first use.
struct SchurCache {
  bool built = false;
  SparseMat pattern;
  std::vector<Index> slots; // per cell: vpc*vpc positions, sorted-vertex order
  std::vector<std::vector<Index>> cell_verts_sorted;
};

// Exact block factorization of J with the Schur complement
// S = D + J01^T J00^{-1} J01 assembled explicitly. Applying the
// preconditioner costs exactly two J00 block solves and one S solve.
class SchurPreconditioner {
public:
  SchurPreconditioner(const BlockJacobian& J, const Vector& lumped_mass,
                      const SchurOptions& opts, SchurCache* cache = nullptr);

  Vector apply(const Vector& rhs) const;
  Vector operator()(const Vector& rhs) const { return apply(rhs); }

  const SparseMat& schur() const { return S_; }
  const J00Factor& j00_factor() const { return j00_; }

  // Mean-zero solve of S x = b (compatible b), used by apply() and tests.
  Vector solve_schur(const Vector& b) const;

  struct Counters {
    long j00_applies = 0;
    long schur_solves = 0;
    long inner_iterations = 0;
    long inner_failures = 0;
  };
  const Counters& counters() const { return counters_; }
  void reset_counters() const { counters_ = {}; }

private:
  const BlockJacobian* J_;
  Vector lumped_mass_;
  SchurOptions opts_;
  J00Factor j00_;
  SparseMat S_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> direct_; // reduced system
  std::unique_ptr<GaussSeidelPrec> sgs_;
  mutable Counters counters_;
};

// S = D + J01^T J00^{-1} J01, sparsity contained in the D pattern.
SparseMat build_schur_matrix(const BlockJacobian& J, const J00Factor& f,
                             SchurCache* cache = nullptr);

// Mean-zero solution of the compatible singular Neumann system A x = rhs
// (A symmetric PSD with constant nullspace).
KrylovResult solve_neumann(const SparseMat& A, const Vector& rhs,
                           const Vector& lumped_mass,
                           const SchurOptions& opts);

void write_matrix_market(const SparseMat& A, const std::string& path);

} // namespace netform
