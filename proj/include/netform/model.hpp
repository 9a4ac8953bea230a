#pragma once

#include "netform/fespace.hpp"
#include "netform/mesh.hpp"
#include "netform/types.hpp"

#include <functional>

namespace netform {

struct ModelParams {
  Scalar r = 1e-4;     // isotropic background permeability
  Scalar nu = 0.03;    // metabolic constant (already rescaled by c^2)
  Scalar gamma = 0.75; // metabolic exponent
  Scalar eps = 1e-5;   // regularization of the Frobenius norm
  Index dim = 2;

  // Throws for non-positive r/nu/eps or gamma outside (0,2];
  // warns on stderr for gamma outside [0.5,1].
  void validate() const;
};

struct SourceSpec {
  enum class Kind { Gaussian, Custom };
  Kind kind = Kind::Gaussian;
  Vector center;            // x0
  Scalar sharpness = 500.0; // exponent coefficient
  Scalar mean_offset = 0.0; // subtracted so the discrete integral vanishes
  std::function<Scalar(const RowVectorXd&)> custom; // raw S0 for Kind::Custom

  Scalar eval_raw(const RowVectorXd& x) const;
  Scalar eval(const RowVectorXd& x) const { return eval_raw(x) - mean_offset; }
};

// Computes mean_offset with the same quadrature as assembly so the discrete
// compatibility condition holds exactly.
SourceSpec make_gaussian_source(const Vector& center, Scalar sharpness,
                                const MeshTopology& mesh, const FeCache& fe);
SourceSpec make_custom_source(std::function<Scalar(const RowVectorXd&)> s0,
                              const MeshTopology& mesh, const FeCache& fe);
void compute_mean_offset(SourceSpec& spec, const MeshTopology& mesh,
                         const FeCache& fe);

// m(C) = nu * (|C|_F^2 + eps)^((gamma-2)/2) > 0.
Scalar metabolic_factor(const SmallMat& C, const ModelParams& params);

// alpha = (|C|^2+eps)^((gamma-2)/2), beta = (gamma-2)/2 (|C|^2+eps)^((gamma-4)/2).
struct JacCoeffs {
  Scalar alpha;
  Scalar beta;
};
JacCoeffs jacobian_coeffs(const SmallMat& C, const ModelParams& params);
JacCoeffs jacobian_coeffs_from_norm2(Scalar frob2, const ModelParams& params);

// E[C] = int grad p . (C + rI) grad p + (nu/gamma)(|C|^2+eps)^(gamma/2) dx,
// evaluated with the assembly quadrature.
Scalar energy(const StateVector& u, const MeshTopology& mesh,
              const FeCache& fe, const ModelParams& params);

// Smallest eigenvalue of a symmetric 2x2 or 3x3 matrix (closed forms).
Scalar min_eigenvalue(const SmallMat& C);

// Volume fraction of cells with lambda_min(C) < -tol_eig.
Scalar min_eig_fraction(const StateVector& u, const MeshTopology& mesh,
                        Scalar tol_eig = 0.0);

} // namespace netform
