#include "netform/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>
#include <array>
#include <sstream>
#include <stdexcept>

namespace netform {

namespace {

void check_counts(Index nx, Index ny, Index nz) {
  if (nx < 1 || ny < 1 || nz < 1)
    throw std::invalid_argument("mesh generator: cell counts must be >= 1");
}

void check_extent(Scalar lx, Scalar ly, Scalar lz) {
  if (lx <= 0 || ly <= 0 || lz <= 0)
    throw std::invalid_argument("mesh generator: extent sides must be positive");
}

// Volume via quadrature of |det J|; exact for the cells we admit
// (affine triangles, bi/trilinear quads/hexes) at degree 3.
Scalar cell_volume(const MeshTopology& mesh, Index cell,
                   const QuadratureRule& rule, bool* inverted = nullptr) {
  const Index vpc = verts_per_cell(mesh.kind);
  Scalar vol = 0;
  for (Index q = 0; q < rule.points.rows(); ++q) {
    const Vector xi = rule.points.row(q).transpose();
    const MatrixXd dref = shape_gradients(mesh.kind, xi);
    MatrixXd J = MatrixXd::Zero(mesh.dim, mesh.dim);
    for (Index a = 0; a < vpc; ++a)
      J += mesh.vertices.row(mesh.cells(cell, a)).transpose() * dref.row(a);
    const Scalar det = J.determinant();
    if (det <= 0 && inverted) *inverted = true;
    vol += rule.weights(q) * det;
  }
  return vol;
}

struct FaceKey {
  std::array<Index, 4> v;
  bool operator==(const FaceKey&) const = default;
};

struct FaceKeyHash {
  size_t operator()(const FaceKey& k) const {
    size_t h = 1469598103934665603ull;
    for (Index i : k.v) {
      h ^= static_cast<size_t>(i) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return h;
  }
};

// Local faces with a canonical (sorted) vertex key, for boundary detection.
std::vector<std::vector<Index>> local_faces(CellKind kind) {
  switch (kind) {
  case CellKind::Triangle:
    return {{0, 1}, {1, 2}, {2, 0}};
  case CellKind::Quad:
    return {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  case CellKind::Hex:
    return {{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4},
            {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}};
  }
  return {};
}

void finalize(MeshTopology& mesh) {
  const Index vpc = verts_per_cell(mesh.kind);
  const Index nv = mesh.n_vertices();
  const QuadratureRule rule = quadrature_for(mesh.kind, 3);

  mesh.cell_volumes.resize(mesh.n_cells());
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    for (Index a = 0; a < vpc; ++a) {
      const Index v = mesh.cells(c, a);
      if (v < 0 || v >= nv)
        throw std::runtime_error("mesh: vertex index out of range in cell " +
                                 std::to_string(c));
      for (Index b = 0; b < a; ++b)
        if (mesh.cells(c, b) == v)
          throw std::runtime_error("mesh: repeated vertex in cell " +
                                   std::to_string(c));
    }
    bool inverted = false;
    mesh.cell_volumes(c) = cell_volume(mesh, c, rule, &inverted);
    if (inverted || mesh.cell_volumes(c) <= 0)
      throw std::runtime_error("mesh: inverted or degenerate cell " +
                               std::to_string(c));
  }

  // Face incidence: boundary faces appear once, interior faces twice.
  struct FaceRecord {
    Index cell;
    Index local_face;
    Index count;
  };
  std::unordered_map<FaceKey, FaceRecord, FaceKeyHash> incidence;
  const auto faces = local_faces(mesh.kind);
  incidence.reserve(static_cast<size_t>(mesh.n_cells()) * faces.size());
  for (Index c = 0; c < mesh.n_cells(); ++c)
    for (Index f = 0; f < static_cast<Index>(faces.size()); ++f) {
      FaceKey key{{-1, -1, -1, -1}};
      Index n = 0;
      for (Index lv : faces[f]) key.v[n++] = mesh.cells(c, lv);
      std::sort(key.v.begin(), key.v.begin() + n);
      auto [it, fresh] = incidence.try_emplace(key, FaceRecord{c, f, 0});
      ++it->second.count;
      if (it->second.count > 2)
        throw std::runtime_error("mesh: non-manifold face in cell " +
                                 std::to_string(c));
    }
  mesh.boundary_faces.clear();
  for (const auto& [key, rec] : incidence)
    if (rec.count == 1) mesh.boundary_faces.push_back({rec.cell, rec.local_face});
  // Deterministic ordering regardless of hash iteration.
  std::sort(mesh.boundary_faces.begin(), mesh.boundary_faces.end());
}

} // namespace

RowVectorXd MeshTopology::centroid(Index cell) const {
  RowVectorXd c = RowVectorXd::Zero(dim);
  const Index vpc = verts_per_cell(kind);
  for (Index a = 0; a < vpc; ++a) c += vertices.row(cells(cell, a));
  return c / static_cast<Scalar>(vpc);
}

RowVectorXd MeshTopology::map_point(Index cell, const Vector& xi) const {
  const Vector phi = shape_values(kind, xi);
  RowVectorXd x = RowVectorXd::Zero(dim);
  for (Index a = 0; a < verts_per_cell(kind); ++a)
    x += phi(a) * vertices.row(cells(cell, a));
  return x;
}

MeshTopology generate_structured_quad(Index nx, Index ny,
                                      const Eigen::AlignedBox2d& extent) {
  check_counts(nx, ny, 1);
  const Scalar lx = extent.sizes()(0), ly = extent.sizes()(1);
  check_extent(lx, ly, 1);

  MeshTopology mesh;
  mesh.dim = 2;
  mesh.kind = CellKind::Quad;
  mesh.vertices.resize((nx + 1) * (ny + 1), 2);
  for (Index j = 0; j <= ny; ++j)
    for (Index i = 0; i <= nx; ++i)
      mesh.vertices.row(j * (nx + 1) + i)
          << extent.min()(0) + lx * i / nx, extent.min()(1) + ly * j / ny;

  mesh.cells.resize(nx * ny, 4);
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      const Index v = j * (nx + 1) + i;
      mesh.cells.row(j * nx + i) << v, v + 1, v + nx + 2, v + nx + 1;
    }
  finalize(mesh);
  return mesh;
}

MeshTopology generate_triangles(Index nx, Index ny,
                                const Eigen::AlignedBox2d& extent,
                                TriangleStyle style) {
  check_counts(nx, ny, 1);
  const Scalar lx = extent.sizes()(0), ly = extent.sizes()(1);
  check_extent(lx, ly, 1);

  MeshTopology mesh;
  mesh.dim = 2;
  mesh.kind = CellKind::Triangle;
  const Index nvg = (nx + 1) * (ny + 1);
  const bool criss = style == TriangleStyle::CrissCross;
  mesh.vertices.resize(nvg + (criss ? nx * ny : 0), 2);
  for (Index j = 0; j <= ny; ++j)
    for (Index i = 0; i <= nx; ++i)
      mesh.vertices.row(j * (nx + 1) + i)
          << extent.min()(0) + lx * i / nx, extent.min()(1) + ly * j / ny;

  mesh.cells.resize((criss ? 4 : 2) * nx * ny, 3);
  Index c = 0;
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      const Index v00 = j * (nx + 1) + i, v10 = v00 + 1;
      const Index v01 = v00 + nx + 1, v11 = v01 + 1;
      if (criss) {
        const Index vc = nvg + j * nx + i;
        mesh.vertices.row(vc) << extent.min()(0) + lx * (i + 0.5) / nx,
                                 extent.min()(1) + ly * (j + 0.5) / ny;
        mesh.cells.row(c++) << v00, v10, vc; // bottom
        mesh.cells.row(c++) << v10, v11, vc; // right
        mesh.cells.row(c++) << v11, v01, vc; // top
        mesh.cells.row(c++) << v01, v00, vc; // left
      } else {
        // Split along the v00-v11 diagonal of each quad.
        mesh.cells.row(c++) << v00, v10, v11;
        mesh.cells.row(c++) << v00, v11, v01;
      }
    }
  finalize(mesh);
  return mesh;
}

MeshTopology generate_structured_hex(Index nx, Index ny, Index nz,
                                     const Eigen::AlignedBox3d& extent) {
  check_counts(nx, ny, nz);
  const Scalar lx = extent.sizes()(0), ly = extent.sizes()(1),
               lz = extent.sizes()(2);
  check_extent(lx, ly, lz);

  MeshTopology mesh;
  mesh.dim = 3;
  mesh.kind = CellKind::Hex;
  const Index sx = nx + 1, sxy = (nx + 1) * (ny + 1);
  mesh.vertices.resize(sxy * (nz + 1), 3);
  for (Index k = 0; k <= nz; ++k)
    for (Index j = 0; j <= ny; ++j)
      for (Index i = 0; i <= nx; ++i)
        mesh.vertices.row(k * sxy + j * sx + i)
            << extent.min()(0) + lx * i / nx, extent.min()(1) + ly * j / ny,
               extent.min()(2) + lz * k / nz;

  mesh.cells.resize(nx * ny * nz, 8);
  for (Index k = 0; k < nz; ++k)
    for (Index j = 0; j < ny; ++j)
      for (Index i = 0; i < nx; ++i) {
        const Index v = k * sxy + j * sx + i;
        mesh.cells.row((k * ny + j) * nx + i)
            << v, v + 1, v + sx + 1, v + sx,
               v + sxy, v + sxy + 1, v + sxy + sx + 1, v + sxy + sx;
      }
  finalize(mesh);
  return mesh;
}

namespace {

std::string kind_name(CellKind k) {
  switch (k) {
  case CellKind::Quad: return "quad";
  case CellKind::Triangle: return "tri";
  case CellKind::Hex: return "hex";
  }
  return "?";
}

CellKind kind_from_name(const std::string& s, int line) {
  if (s == "quad") return CellKind::Quad;
  if (s == "tri") return CellKind::Triangle;
  if (s == "hex") return CellKind::Hex;
  throw std::runtime_error("mesh import: unknown cell kind '" + s +
                           "' at line " + std::to_string(line));
}

// Strips comments, skips blank lines, tracks line numbers.
class LineReader {
public:
  explicit LineReader(std::istream& in) : in_(in) {}
  bool next(std::istringstream& fields) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      if (raw.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      fields = std::istringstream(raw);
      return true;
    }
    return false;
  }
  int line() const { return line_; }

private:
  std::istream& in_;
  int line_ = 0;
};

} // namespace

MeshTopology import_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("mesh import: cannot open '" + path + "'");
  LineReader reader(in);
  std::istringstream fields;

  if (!reader.next(fields))
    throw std::runtime_error("mesh import: empty file '" + path + "'");
  Index dim, nv, nc;
  std::string kind_str;
  if (!(fields >> dim >> nv >> nc >> kind_str))
    throw std::runtime_error("mesh import: bad header at line " +
                             std::to_string(reader.line()));
  MeshTopology mesh;
  mesh.kind = kind_from_name(kind_str, reader.line());
  mesh.dim = dim;
  if (dim != cell_dim(mesh.kind))
    throw std::runtime_error("mesh import: dim/kind mismatch at line " +
                             std::to_string(reader.line()));
  if (nv < 1 || nc < 1)
    throw std::runtime_error("mesh import: bad counts at line " +
                             std::to_string(reader.line()));

  mesh.vertices.resize(nv, dim);
  for (Index v = 0; v < nv; ++v) {
    if (!reader.next(fields))
      throw std::runtime_error("mesh import: truncated vertex list");
    for (Index d = 0; d < dim; ++d)
      if (!(fields >> mesh.vertices(v, d)))
        throw std::runtime_error("mesh import: bad coordinate at line " +
                                 std::to_string(reader.line()));
  }
  const Index vpc = verts_per_cell(mesh.kind);
  mesh.cells.resize(nc, vpc);
  for (Index c = 0; c < nc; ++c) {
    if (!reader.next(fields))
      throw std::runtime_error("mesh import: truncated cell list");
    for (Index a = 0; a < vpc; ++a)
      if (!(fields >> mesh.cells(c, a)))
        throw std::runtime_error("mesh import: bad connectivity at line " +
                                 std::to_string(reader.line()));
  }
  finalize(mesh);
  return mesh;
}

void export_mesh(const MeshTopology& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("mesh export: cannot open '" + path + "'");
  out.precision(17);
  out << mesh.dim << " " << mesh.n_vertices() << " " << mesh.n_cells() << " "
      << kind_name(mesh.kind) << "\n";
  for (Index v = 0; v < mesh.n_vertices(); ++v) {
    for (Index d = 0; d < mesh.dim; ++d)
      out << (d ? " " : "") << mesh.vertices(v, d);
    out << "\n";
  }
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    for (Index a = 0; a < verts_per_cell(mesh.kind); ++a)
      out << (a ? " " : "") << mesh.cells(c, a);
    out << "\n";
  }
}

SymmetryMap diagonal_symmetry_map(const MeshTopology& mesh) {
  SymmetryMap map;
  map.mirror.assign(mesh.n_cells(), -1);
  if (mesh.dim != 2) return map;

  const Scalar tol = 1e-10;
  // Quantized centroid lookup; neighbors of the quantized key absorb ties.
  const auto key_of = [&](Scalar x, Scalar y) {
    return std::pair<long long, long long>(std::llround(x / tol / 16),
                                           std::llround(y / tol / 16));
  };
  std::map<std::pair<long long, long long>, std::vector<Index>> buckets;
  MatrixXd centroids(mesh.n_cells(), 2);
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    centroids.row(c) = mesh.centroid(c);
    buckets[key_of(centroids(c, 0), centroids(c, 1))].push_back(c);
  }

  bool all_paired = true;
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    const Scalar mx = centroids(c, 1), my = centroids(c, 0); // reflected
    Index partner = -1;
    const auto base = key_of(mx, my);
    for (long long dx = -1; dx <= 1 && partner < 0; ++dx)
      for (long long dy = -1; dy <= 1 && partner < 0; ++dy) {
        const auto it = buckets.find({base.first + dx, base.second + dy});
        if (it == buckets.end()) continue;
        for (Index cand : it->second)
          if (std::abs(centroids(cand, 0) - mx) < tol &&
              std::abs(centroids(cand, 1) - my) < tol) {
            partner = cand;
            break;
          }
      }
    if (partner < 0) {
      all_paired = false;
      continue;
    }
    const Scalar vol_rel = std::abs(mesh.cell_volumes(c) -
                                    mesh.cell_volumes(partner)) /
                           mesh.cell_volumes(c);
    if (vol_rel > 1e-12) {
      all_paired = false;
      continue;
    }
    map.mirror[c] = partner;
  }

  // Involution check: mirror(mirror(c)) == c for every paired cell.
  if (all_paired)
    for (Index c = 0; c < mesh.n_cells(); ++c)
      if (map.mirror[c] < 0 || map.mirror[map.mirror[c]] != c) {
        all_paired = false;
        break;
      }

  map.valid = all_paired;
  if (map.valid)
    for (Index c = 0; c < mesh.n_cells(); ++c)
      if (c < map.mirror[c]) map.cell_pairs.push_back({c, map.mirror[c]});
  return map;
}

} // namespace netform
