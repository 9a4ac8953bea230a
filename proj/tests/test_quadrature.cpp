#include <doctest.h>

#include "netform/fespace.hpp"
#include "netform/quadrature.hpp"

#include <cmath>
#include <random>

using namespace netform;

namespace {

Scalar integrate_monomial(const QuadratureRule& rule, Index dim, Index a,
                          Index b, Index c) {
  Scalar sum = 0;
  for (Index q = 0; q < rule.points.rows(); ++q)
    sum += rule.weights(q) * std::pow(rule.points(q, 0), a) *
           std::pow(rule.points(q, 1), b) *
           (dim == 3 ? std::pow(rule.points(q, 2), c) : 1.0);
  return sum;
}

// Exact integrals on the reference cells.
Scalar exact_tensor(Index a, Index b, Index c) {
  return 1.0 / ((a + 1) * (b + 1) * (c + 1));
}

Scalar factorial(Index n) {
  Scalar f = 1;
  for (Index i = 2; i <= n; ++i) f *= i;
  return f;
}

// int_T x^a y^b over the unit right triangle = a! b! / (a+b+2)!.
Scalar exact_triangle(Index a, Index b) {
  return factorial(a) * factorial(b) / factorial(a + b + 2);
}

} // namespace

TEST_CASE("quad degree 1 is the midpoint rule") {
  const QuadratureRule r = quadrature_for(CellKind::Quad, 1);
  REQUIRE(r.points.rows() == 1);
  CHECK(r.points(0, 0) == doctest::Approx(0.5));
  CHECK(r.points(0, 1) == doctest::Approx(0.5));
  CHECK(r.weights(0) == doctest::Approx(1.0));
}

TEST_CASE("quad degree 3 is 2x2 Gauss and integrates x^3 y^3 exactly") {
  const QuadratureRule r = quadrature_for(CellKind::Quad, 3);
  REQUIRE(r.points.rows() == 4);
  CHECK(integrate_monomial(r, 2, 3, 3, 0) ==
        doctest::Approx(1.0 / 16.0).epsilon(1e-14));
}

TEST_CASE("triangle degree 2 has 3 points summing to the reference area") {
  const QuadratureRule r = quadrature_for(CellKind::Triangle, 2);
  REQUIRE(r.points.rows() == 3);
  CHECK(r.weights.sum() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("weights are positive and sum to the reference measure") {
  for (const CellKind kind :
       {CellKind::Quad, CellKind::Triangle, CellKind::Hex}) {
    const Index max_degree = kind == CellKind::Triangle ? 4 : 9;
    for (Index degree = 1; degree <= max_degree; ++degree) {
      const QuadratureRule r = quadrature_for(kind, degree);
      CHECK((r.weights.array() > 0).all());
      CHECK(std::abs(r.weights.sum() - reference_measure(kind)) < 1e-14);
    }
  }
}

TEST_CASE("rules integrate monomials up to the declared degree") {
  for (Index degree = 1; degree <= 5; ++degree) {
    const QuadratureRule rq = quadrature_for(CellKind::Quad, degree);
    for (Index a = 0; a <= rq.degree; ++a)
      for (Index b = 0; a + b <= rq.degree; ++b)
        CHECK(std::abs(integrate_monomial(rq, 2, a, b, 0) -
                       exact_tensor(a, b, 0)) < 1e-14);

    const QuadratureRule rh = quadrature_for(CellKind::Hex, degree);
    for (Index a = 0; a <= rh.degree; ++a)
      for (Index b = 0; a + b <= rh.degree; ++b)
        for (Index c = 0; a + b + c <= rh.degree; ++c)
          CHECK(std::abs(integrate_monomial(rh, 3, a, b, c) -
                         exact_tensor(a, b, c)) < 1e-14);
  }
  for (Index degree = 1; degree <= 4; ++degree) {
    const QuadratureRule rt = quadrature_for(CellKind::Triangle, degree);
    for (Index a = 0; a <= rt.degree; ++a)
      for (Index b = 0; a + b <= rt.degree; ++b)
        CHECK(std::abs(integrate_monomial(rt, 2, a, b, 0) -
                       exact_triangle(a, b)) < 1e-14);
  }
}

TEST_CASE("unsupported degrees are rejected") {
  CHECK_THROWS_AS(quadrature_for(CellKind::Triangle, 5), std::invalid_argument);
  CHECK_THROWS_AS(quadrature_for(CellKind::Quad, 10), std::invalid_argument);
  CHECK_THROWS_AS(quadrature_for(CellKind::Hex, -1), std::invalid_argument);
}

TEST_CASE("shape functions form a partition of unity with zero gradient sum") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<Scalar> unif(0.05, 0.45);
  for (const CellKind kind :
       {CellKind::Quad, CellKind::Triangle, CellKind::Hex}) {
    for (int trial = 0; trial < 10; ++trial) {
      Vector xi(cell_dim(kind));
      for (Index d = 0; d < xi.size(); ++d) xi(d) = unif(rng);
      CHECK(shape_values(kind, xi).sum() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(shape_gradients(kind, xi).colwise().sum().norm() < 1e-14);
    }
  }
}

TEST_CASE("dof layout is field-ordered and contiguous") {
  const MeshTopology mesh = generate_structured_quad(
      3, 2, Eigen::AlignedBox2d(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)));
  const DofLayout layout = DofLayout::from_mesh(mesh);
  CHECK(layout.n_components == 3);
  CHECK(layout.n_cond_dofs() == 18);
  CHECK(layout.n_pressure_dofs() == 12);
  CHECK(layout.size() == 30);
  const auto offsets = layout.field_offsets();
  REQUIRE(offsets.size() == 4);
  for (size_t i = 1; i < offsets.size(); ++i)
    CHECK(offsets[i] == offsets[i - 1] + 6);
  CHECK(layout.pressure_offset() == 18);
}

TEST_CASE("cell tensor assembles stored symmetric components") {
  const MeshTopology mesh = generate_structured_quad(
      1, 1, Eigen::AlignedBox2d(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)));
  const DofLayout layout = DofLayout::from_mesh(mesh);
  StateVector u(layout);

  u.component(layout, 0)(0) = 1;
  u.component(layout, 1)(0) = 0;
  u.component(layout, 2)(0) = 1;
  CHECK(cell_tensor(u, layout, 0).isApprox(MatrixXd::Identity(2, 2)));

  u.data.setZero();
  CHECK(cell_tensor(u, layout, 0).norm() == 0.0);

  u.component(layout, 0)(0) = 2;
  u.component(layout, 1)(0) = 1;
  u.component(layout, 2)(0) = 2;
  const SmallMat C = cell_tensor(u, layout, 0);
  CHECK(C(0, 1) == C(1, 0));
  CHECK(C.squaredNorm() == doctest::Approx(10.0));
}

TEST_CASE("pressure gradient: constants and linears are reproduced") {
  const MeshTopology mesh = generate_structured_quad(
      2, 2, Eigen::AlignedBox2d(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)));
  Vector p_const = Vector::Constant(mesh.n_vertices(), 3.25);
  Vector p_x(mesh.n_vertices());
  for (Index v = 0; v < mesh.n_vertices(); ++v) p_x(v) = mesh.vertices(v, 0);

  Vector xi(2);
  xi << 0.3, 0.7;
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    CHECK(eval_pressure_gradient(mesh, p_const, c, xi).norm() < 1e-14);
    const Vector g = eval_pressure_gradient(mesh, p_x, c, xi);
    CHECK(g(0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(g(1)) < 1e-13);
  }
}

TEST_CASE("pressure gradient of p = x*y matches the analytic (y, x)") {
  // x*y is bilinear, so the Q1 interpolant is exact and its gradient at the
  // cell centers must equal (y, x) evaluated there.
  const MeshTopology mesh = generate_structured_quad(
      2, 2, Eigen::AlignedBox2d(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)));
  Vector p(mesh.n_vertices());
  for (Index v = 0; v < mesh.n_vertices(); ++v)
    p(v) = mesh.vertices(v, 0) * mesh.vertices(v, 1);
  Vector center(2);
  center << 0.5, 0.5;
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    const RowVectorXd x = mesh.centroid(c);
    const Vector g = eval_pressure_gradient(mesh, p, c, center);
    CHECK(g(0) == doctest::Approx(x(1)).epsilon(1e-13));
    CHECK(g(1) == doctest::Approx(x(0)).epsilon(1e-13));
  }
}

TEST_CASE("linear fields are reproduced at every quadrature point") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<Scalar> unif(-2.0, 2.0);
  const Eigen::AlignedBox2d box2(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
  const Eigen::AlignedBox3d box3(Eigen::Vector3d(0, 0, 0),
                                 Eigen::Vector3d(1, 1, 1));
  std::vector<MeshTopology> meshes;
  meshes.push_back(generate_structured_quad(3, 3, box2));
  meshes.push_back(generate_triangles(3, 3, box2, TriangleStyle::CrissCross));
  meshes.push_back(generate_triangles(3, 3, box2, TriangleStyle::Regular));
  meshes.push_back(generate_structured_hex(2, 2, 2, box3));

  for (const MeshTopology& mesh : meshes) {
    const Scalar a = unif(rng);
    Vector b(mesh.dim);
    for (Index d = 0; d < mesh.dim; ++d) b(d) = unif(rng);
    Vector p(mesh.n_vertices());
    for (Index v = 0; v < mesh.n_vertices(); ++v)
      p(v) = a + b.dot(mesh.vertices.row(v).transpose());

    const FeCache fe = build_fe_cache(mesh, 2);
    for (Index c = 0; c < mesh.n_cells(); ++c)
      for (Index q = 0; q < fe.n_qpoints; ++q) {
        const Vector xi = fe.rule.points.row(q).transpose();
        CHECK((eval_pressure_gradient(mesh, p, c, xi) - b).norm() < 1e-13);
        CHECK(fe.basis.col(q).sum() == doctest::Approx(1.0).epsilon(1e-14));
      }
  }
}

TEST_CASE("fe cache weights integrate cell volumes") {
  const MeshTopology mesh = generate_triangles(
      4, 4, Eigen::AlignedBox2d(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)),
      TriangleStyle::CrissCross);
  const FeCache fe = build_fe_cache(mesh, 2);
  for (Index c = 0; c < mesh.n_cells(); ++c)
    CHECK(fe.wdet.row(c).sum() ==
          doctest::Approx(mesh.cell_volumes(c)).epsilon(1e-14));
  CHECK(fe.lumped_pressure_mass.sum() ==
        doctest::Approx(mesh.domain_volume()).epsilon(1e-13));
}
