#pragma once

#include "netform/quadrature.hpp"
#include "netform/types.hpp"

#include <Eigen/Geometry>

#include <string>
#include <utility>
#include <vector>

namespace netform {

// Immutable after construction; safe to share across threads.
struct MeshTopology {
  Index dim = 2;
  CellKind kind = CellKind::Quad;
  MatrixXd vertices;                              // n_vertices x dim
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> cells; // n_cells x vpc
  Vector cell_volumes;
  std::vector<std::pair<Index, Index>> boundary_faces; // (cell, local face)

  Index n_vertices() const { return static_cast<Index>(vertices.rows()); }
  Index n_cells() const { return static_cast<Index>(cells.rows()); }
  Scalar domain_volume() const { return cell_volumes.sum(); }
  RowVectorXd centroid(Index cell) const;
  // Physical coordinates of a reference point inside a cell.
  RowVectorXd map_point(Index cell, const Vector& xi) const;
};

enum class TriangleStyle { CrissCross, Regular };

MeshTopology generate_structured_quad(Index nx, Index ny,
                                      const Eigen::AlignedBox2d& extent);
MeshTopology generate_triangles(Index nx, Index ny,
                                const Eigen::AlignedBox2d& extent,
                                TriangleStyle style);
MeshTopology generate_structured_hex(Index nx, Index ny, Index nz,
                                     const Eigen::AlignedBox3d& extent);

// Plain-text format: header `dim nv nc kind`, nv coordinate lines, nc
// 0-based connectivity lines; `#` starts a comment. kind is quad|tri|hex.
MeshTopology import_mesh(const std::string& path);
void export_mesh(const MeshTopology& mesh, const std::string& path);

// Pairs cells whose centroids are mirror images under (x,y) -> (y,x).
struct SymmetryMap {
  std::vector<Index> mirror;               // involution over cells
  std::vector<std::pair<Index, Index>> cell_pairs; // i < mirror(i) only
  bool valid = false;
};

SymmetryMap diagonal_symmetry_map(const MeshTopology& mesh);

} // namespace netform
