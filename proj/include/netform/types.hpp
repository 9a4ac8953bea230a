#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>

namespace netform {

using Scalar = double;
using Index = int;

using Vector = Eigen::VectorXd;
using RowVectorXd = Eigen::RowVectorXd;
using MatrixXd = Eigen::MatrixXd;

// Compressed-row sparse storage throughout; Eigen solvers that want
// column-major get a converted copy at factorization time.
using SparseMat = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, Index>;

// Per-cell dense blocks: at most d(d+1)/2 = 6 rows/cols (3D), stack allocated.
using CellBlock = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;
using CellVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, 6, 1>;
using SmallMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using SmallVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, 3, 1>;

// Number of independent components of a symmetric d x d tensor.
inline constexpr Index sym_components(Index dim) { return dim * (dim + 1) / 2; }

// Recoverable signal: some cell lost ellipticity of C + rI. The time loop
// converts this into a step rejection.
class EllipticityError : public std::runtime_error {
public:
  EllipticityError(Index cell, Scalar lambda_min_plus_r)
      : std::runtime_error("ellipticity lost at cell " + std::to_string(cell) +
                           ": lambda_min(C) + r = " +
                           std::to_string(lambda_min_plus_r)),
        cell(cell), lambda_min_plus_r(lambda_min_plus_r) {}
  Index cell;
  Scalar lambda_min_plus_r;
};

// Recoverable linear-algebra failure during an implicit solve (a cell block
// turning indefinite at large time steps, a failed factorization). Newton
// reports it as a failed iteration; the time loop then shrinks the step.
class SolverBreakdown : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace netform
