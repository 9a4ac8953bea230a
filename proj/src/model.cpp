#include "netform/model.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace netform {

void ModelParams::validate() const {
  if (r <= 0 || nu <= 0 || eps <= 0)
    throw std::invalid_argument("model: r, nu, eps must be strictly positive");
  if (gamma <= 0 || gamma > 2)
    throw std::invalid_argument("model: gamma must lie in (0, 2]");
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("model: dim must be 2 or 3");
  if (gamma < 0.5 || gamma > 1.0)
    std::cerr << "warning: gamma = " << gamma
              << " outside the biologically typical range [0.5, 1]\n";
}

Scalar SourceSpec::eval_raw(const RowVectorXd& x) const {
  if (kind == Kind::Custom) return custom(x);
  return std::exp(-sharpness * (x.transpose() - center).squaredNorm());
}

void compute_mean_offset(SourceSpec& spec, const MeshTopology& mesh,
                         const FeCache& fe) {
  spec.mean_offset = 0.0;
  Scalar integral = 0.0;
  for (Index c = 0; c < mesh.n_cells(); ++c)
    for (Index q = 0; q < fe.n_qpoints; ++q)
      integral += fe.wdet(c, q) * spec.eval_raw(fe.qpoint(c, q));
  spec.mean_offset = integral / mesh.domain_volume();
}

SourceSpec make_gaussian_source(const Vector& center, Scalar sharpness,
                                const MeshTopology& mesh, const FeCache& fe) {
  SourceSpec spec;
  spec.kind = SourceSpec::Kind::Gaussian;
  spec.center = center;
  spec.sharpness = sharpness;
  compute_mean_offset(spec, mesh, fe);
  return spec;
}

SourceSpec make_custom_source(std::function<Scalar(const RowVectorXd&)> s0,
                              const MeshTopology& mesh, const FeCache& fe) {
  SourceSpec spec;
  spec.kind = SourceSpec::Kind::Custom;
  spec.custom = std::move(s0);
  compute_mean_offset(spec, mesh, fe);
  return spec;
}

Scalar metabolic_factor(const SmallMat& C, const ModelParams& params) {
  return params.nu *
         std::pow(C.squaredNorm() + params.eps, 0.5 * (params.gamma - 2.0));
}

JacCoeffs jacobian_coeffs_from_norm2(Scalar frob2, const ModelParams& params) {
  const Scalar base = frob2 + params.eps;
  const Scalar alpha = std::pow(base, 0.5 * (params.gamma - 2.0));
  const Scalar beta =
      0.5 * (params.gamma - 2.0) * std::pow(base, 0.5 * (params.gamma - 4.0));
  return {alpha, beta};
}

JacCoeffs jacobian_coeffs(const SmallMat& C, const ModelParams& params) {
  return jacobian_coeffs_from_norm2(C.squaredNorm(), params);
}

Scalar energy(const StateVector& u, const MeshTopology& mesh,
              const FeCache& fe, const ModelParams& params) {
  const DofLayout layout = DofLayout::from_mesh(mesh);
  const Index vpc = verts_per_cell(mesh.kind);
  Scalar total = 0.0;
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    const SmallMat C = cell_tensor(u, layout, c);
    // Dirichlet term at each quadrature point.
    SmallMat K = C;
    K.diagonal().array() += params.r;
    for (Index q = 0; q < fe.n_qpoints; ++q) {
      Vector g = Vector::Zero(mesh.dim);
      const MatrixXd& dphi = fe.grad(c, q);
      for (Index a = 0; a < vpc; ++a)
        g += u.data(layout.pressure_offset() + mesh.cells(c, a)) *
             dphi.row(a).transpose();
      total += fe.wdet(c, q) * g.dot(K * g);
    }
    // Metabolic term is cellwise constant under P0, hence exact.
    total += mesh.cell_volumes(c) * (params.nu / params.gamma) *
             std::pow(C.squaredNorm() + params.eps, 0.5 * params.gamma);
  }
  return total;
}

Scalar min_eigenvalue(const SmallMat& C) {
  if (C.rows() == 2) {
    const Scalar mean = 0.5 * (C(0, 0) + C(1, 1));
    const Scalar half_gap = 0.5 * (C(0, 0) - C(1, 1));
    return mean - std::sqrt(half_gap * half_gap + C(0, 1) * C(0, 1));
  }
  // Trigonometric closed form for symmetric 3x3.
  const Scalar p1 = C(0, 1) * C(0, 1) + C(0, 2) * C(0, 2) + C(1, 2) * C(1, 2);
  const Scalar q = C.trace() / 3.0;
  if (p1 == 0.0)
    return std::min({C(0, 0), C(1, 1), C(2, 2)});
  const Scalar p2 = (C(0, 0) - q) * (C(0, 0) - q) +
                    (C(1, 1) - q) * (C(1, 1) - q) +
                    (C(2, 2) - q) * (C(2, 2) - q) + 2.0 * p1;
  const Scalar p = std::sqrt(p2 / 6.0);
  SmallMat B = C;
  B.diagonal().array() -= q;
  B /= p;
  Scalar r_det = 0.5 * B.determinant();
  r_det = std::clamp(r_det, -1.0, 1.0);
  const Scalar phi = std::acos(r_det) / 3.0;
  // Smallest eigenvalue uses phi + 2*pi/3.
  return q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
}

Scalar min_eig_fraction(const StateVector& u, const MeshTopology& mesh,
                        Scalar tol_eig) {
  const DofLayout layout = DofLayout::from_mesh(mesh);
  Scalar bad = 0.0;
  for (Index c = 0; c < mesh.n_cells(); ++c)
    if (min_eigenvalue(cell_tensor(u, layout, c)) < -tol_eig)
      bad += mesh.cell_volumes(c);
  return bad / mesh.domain_volume();
}

} // namespace netform
