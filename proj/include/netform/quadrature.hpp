#pragma once

#include "netform/types.hpp"

namespace netform {

enum class CellKind { Quad, Triangle, Hex };

inline Index cell_dim(CellKind k) { return k == CellKind::Hex ? 3 : 2; }
inline Index verts_per_cell(CellKind k) {
  switch (k) {
  case CellKind::Quad: return 4;
  case CellKind::Triangle: return 3;
  case CellKind::Hex: return 8;
  }
  return 0;
}

// Reference cells: unit square/cube [0,1]^d, unit right triangle
// {(0,0),(1,0),(0,1)}.
inline Scalar reference_measure(CellKind k) {
  return k == CellKind::Triangle ? 0.5 : 1.0;
}

struct QuadratureRule {
  MatrixXd points;  // n_points x dim, reference coordinates
  Vector weights;   // positive, sum to reference-cell measure
  Index degree = 0; // polynomial degree integrated exactly
};

// Rule exact for polynomials up to `degree`. Throws std::invalid_argument
// for unsupported degrees (quads/hexes up to 9, triangles up to 4).
QuadratureRule quadrature_for(CellKind kind, Index degree);

// Nodal basis of the pressure space on the reference cell: P1 on triangles,
// Q1 (bi/trilinear) on quads/hexes.
Vector shape_values(CellKind kind, const Vector& xi);
// Rows = vertices, cols = reference directions.
MatrixXd shape_gradients(CellKind kind, const Vector& xi);

} // namespace netform
