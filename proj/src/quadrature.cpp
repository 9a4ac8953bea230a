#include "netform/quadrature.hpp"

#include <stdexcept>

namespace netform {

namespace {

// Gauss-Legendre nodes/weights on [0,1]; n points integrate degree 2n-1.
void gauss_1d(Index n, Vector& x, Vector& w) {
  x.resize(n);
  w.resize(n);
  switch (n) {
  case 1:
    x << 0.5;
    w << 1.0;
    break;
  case 2: {
    const Scalar a = 0.5 / std::sqrt(3.0);
    x << 0.5 - a, 0.5 + a;
    w << 0.5, 0.5;
    break;
  }
  case 3: {
    const Scalar a = 0.5 * std::sqrt(0.6);
    x << 0.5 - a, 0.5, 0.5 + a;
    w << 5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0;
    break;
  }
  case 4: {
    const Scalar x1 = 0.3399810435848563, x2 = 0.8611363115940526;
    const Scalar w1 = 0.6521451548625461, w2 = 0.3478548451374538;
    x << 0.5 * (1 - x2), 0.5 * (1 - x1), 0.5 * (1 + x1), 0.5 * (1 + x2);
    w << 0.5 * w2, 0.5 * w1, 0.5 * w1, 0.5 * w2;
    break;
  }
  case 5: {
    const Scalar x1 = 0.5384693101056831, x2 = 0.9061798459386640;
    const Scalar w0 = 0.5688888888888889, w1 = 0.4786286704993665,
                 w2 = 0.2369268850561891;
    x << 0.5 * (1 - x2), 0.5 * (1 - x1), 0.5, 0.5 * (1 + x1), 0.5 * (1 + x2);
    w << 0.5 * w2, 0.5 * w1, 0.5 * w0, 0.5 * w1, 0.5 * w2;
    break;
  }
  default:
    throw std::invalid_argument("gauss_1d: unsupported point count");
  }
}

QuadratureRule tensor_rule(Index dim, Index degree) {
  if (degree < 0 || degree > 9)
    throw std::invalid_argument("quadrature_for: degree out of range for tensor cells");
  const Index n = std::max<Index>(1, (degree + 2) / 2); // 2n-1 >= degree
  Vector x, w;
  gauss_1d(n, x, w);
  QuadratureRule rule;
  rule.degree = 2 * n - 1;
  const Index npts = static_cast<Index>(std::pow(n, dim) + 0.5);
  rule.points.resize(npts, dim);
  rule.weights.resize(npts);
  Index q = 0;
  for (Index k = 0; k < (dim == 3 ? n : 1); ++k)
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        rule.points(q, 0) = x(i);
        rule.points(q, 1) = x(j);
        if (dim == 3) rule.points(q, 2) = x(k);
        rule.weights(q) = w(i) * w(j) * (dim == 3 ? w(k) : 1.0);
        ++q;
      }
  return rule;
}

QuadratureRule triangle_rule(Index degree) {
  QuadratureRule rule;
  if (degree <= 1) {
    rule.degree = 1;
    rule.points.resize(1, 2);
    rule.points << 1.0 / 3.0, 1.0 / 3.0;
    rule.weights.resize(1);
    rule.weights << 0.5;
  } else if (degree == 2) {
    rule.degree = 2;
    rule.points.resize(3, 2);
    rule.points << 1.0 / 6.0, 1.0 / 6.0,
                   2.0 / 3.0, 1.0 / 6.0,
                   1.0 / 6.0, 2.0 / 3.0;
    rule.weights = Vector::Constant(3, 1.0 / 6.0);
  } else if (degree <= 4) {
    // Six-point degree-4 rule with positive weights.
    rule.degree = 4;
    const Scalar a1 = 0.445948490915965, w1 = 0.223381589678011;
    const Scalar a2 = 0.091576213509771, w2 = 0.109951743655322;
    rule.points.resize(6, 2);
    rule.points << a1, a1,
                   1 - 2 * a1, a1,
                   a1, 1 - 2 * a1,
                   a2, a2,
                   1 - 2 * a2, a2,
                   a2, 1 - 2 * a2;
    rule.weights.resize(6);
    rule.weights << w1, w1, w1, w2, w2, w2;
    rule.weights *= 0.5;
  } else {
    throw std::invalid_argument("quadrature_for: triangle degree > 4 unsupported");
  }
  return rule;
}

} // namespace

QuadratureRule quadrature_for(CellKind kind, Index degree) {
  switch (kind) {
  case CellKind::Quad: return tensor_rule(2, degree);
  case CellKind::Hex: return tensor_rule(3, degree);
  case CellKind::Triangle: return triangle_rule(degree);
  }
  throw std::invalid_argument("quadrature_for: unknown cell kind");
}

Vector shape_values(CellKind kind, const Vector& xi) {
  Vector v(verts_per_cell(kind));
  switch (kind) {
  case CellKind::Triangle:
    v << 1 - xi(0) - xi(1), xi(0), xi(1);
    break;
  case CellKind::Quad: {
    const Scalar x = xi(0), y = xi(1);
    v << (1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y;
    break;
  }
  case CellKind::Hex: {
    const Scalar x = xi(0), y = xi(1), z = xi(2);
    v << (1 - x) * (1 - y) * (1 - z), x * (1 - y) * (1 - z),
         x * y * (1 - z), (1 - x) * y * (1 - z),
         (1 - x) * (1 - y) * z, x * (1 - y) * z,
         x * y * z, (1 - x) * y * z;
    break;
  }
  }
  return v;
}

MatrixXd shape_gradients(CellKind kind, const Vector& xi) {
  MatrixXd g(verts_per_cell(kind), cell_dim(kind));
  switch (kind) {
  case CellKind::Triangle:
    g << -1, -1,
          1, 0,
          0, 1;
    break;
  case CellKind::Quad: {
    const Scalar x = xi(0), y = xi(1);
    g << -(1 - y), -(1 - x),
          (1 - y), -x,
          y, x,
         -y, (1 - x);
    break;
  }
  case CellKind::Hex: {
    const Scalar x = xi(0), y = xi(1), z = xi(2);
    g << -(1 - y) * (1 - z), -(1 - x) * (1 - z), -(1 - x) * (1 - y),
          (1 - y) * (1 - z), -x * (1 - z), -x * (1 - y),
          y * (1 - z), x * (1 - z), -x * y,
         -y * (1 - z), (1 - x) * (1 - z), -(1 - x) * y,
         -(1 - y) * z, -(1 - x) * z, (1 - x) * (1 - y),
          (1 - y) * z, -x * z, x * (1 - y),
          y * z, x * z, x * y,
         -y * z, (1 - x) * z, (1 - x) * y;
    break;
  }
  }
  return g;
}

} // namespace netform
