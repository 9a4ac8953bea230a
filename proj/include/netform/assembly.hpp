#pragma once

#include "netform/fespace.hpp"
#include "netform/mesh.hpp"
#include "netform/model.hpp"
#include "netform/types.hpp"

#include <utility>
#include <vector>

namespace netform {

// J = sigma dF/dudot + dF/du, stored by blocks. The conductivity block J00
// is cell-block-diagonal (one d(d+1)/2 block per cell, field-major dofs),
// J01 couples conductivity rows to pressure columns, and the pressure
// diagonal of the full matrix is -D.
struct BlockJacobian {
  DofLayout layout;
  Scalar sigma = 0;
  std::vector<CellBlock> J00;
  SparseMat J01; // n_cond_dofs x n_pressure_dofs
  SparseMat D;   // pressure stiffness, positive semi-definite

  Vector apply(const Vector& v) const;
  MatrixXd dense() const; // small meshes only (tests)
};

struct AssemblyOptions {
  Index quad_degree = 2;
  bool symmetrized = true; // the unsymmetrized variant exists for tests only
  bool ellipticity_guard = true;
};

// One instance per (mesh, params, source); immutable after construction and
// usable from the time loop for every residual/Jacobian evaluation.
class Assembler {
public:
  Assembler(const MeshTopology& mesh, const FeCache& fe,
            const ModelParams& params, const SourceSpec& source,
            AssemblyOptions opts = {});

  // F(udot, u, t): conductivity equations (diagonal components scaled 1/2,
  // off-diagonal 1), then the negated pressure equation. Throws
  // EllipticityError when some cell has lambda_min(C) + r <= 0.
  Vector residual(const StateVector& u, const Vector& udot, Scalar t) const;

  BlockJacobian jacobian(const StateVector& u, Scalar sigma) const;

  // Singular Neumann system D p = rhs for the conductivity carried by u.
  void poisson_only(const StateVector& u, SparseMat& D, Vector& rhs) const;

  // Cellwise time derivative satisfying the differential equations exactly:
  // dC^m/dt = mean(grad p x grad p)^m - m(C) C^m; pressure entries zero.
  Vector consistent_rate(const StateVector& u) const;

  const DofLayout& layout() const { return layout_; }
  const MeshTopology& mesh() const { return mesh_; }
  const FeCache& fe() const { return fe_; }
  const ModelParams& params() const { return params_; }
  const SourceSpec& source() const { return source_; }
  const Vector& row_scales() const { return s_scale_; }

private:
  void build_patterns();
  // Cell-average of grad p outer grad p, one entry per component.
  CellVec average_outer(const StateVector& u, Index cell) const;

  const MeshTopology& mesh_;
  const FeCache& fe_;
  ModelParams params_;
  SourceSpec source_;
  AssemblyOptions opts_;
  DofLayout layout_;
  Vector s_scale_;                              // 1/2 diagonal, 1 off-diagonal
  std::vector<std::pair<Index, Index>> comp_ab_; // component -> (a,b)
  SparseMat d_pattern_;
  std::vector<Index> d_slot_;   // per cell: vpc*vpc value slots in D
  SparseMat j01_pattern_;
  std::vector<Index> b_slot_;   // per cell: n_components*vpc slots in J01
  MatrixXd source_q_;           // cached S(x_q), n_cells x n_q
};

} // namespace netform
