#include <doctest.h>

#include "netform/newton.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>

using namespace netform;

namespace {

// Dense toy system with direct linear solves; records requested tolerances.
struct DenseSystem {
  std::function<Vector(const Vector&)> G;
  std::function<MatrixXd(const Vector&)> Jfn;
  MatrixXd J;
  std::vector<Scalar> requested_rtols;

  Vector residual(const Vector& u) { return G(u); }
  void prepare_jacobian(const Vector& u) { J = Jfn(u); }
  Vector apply_jacobian(const Vector& v) const { return J * v; }
  KrylovResult solve_linear(const Vector& rhs, Scalar rtol, Scalar) {
    requested_rtols.push_back(rtol);
    KrylovResult r;
    r.x = J.fullPivLu().solve(rhs);
    r.iterations = 1;
    return r;
  }
};

} // namespace

TEST_CASE("identity-jacobian system converges in one full step") {
  Vector b(3);
  b << 1, -2, 0.5;
  DenseSystem sys;
  sys.G = [b](const Vector& u) -> Vector { return u - b; };
  sys.Jfn = [](const Vector& u) { return MatrixXd::Identity(u.size(), u.size()); };
  const NewtonConfig cfg;
  const NewtonOutcome out = newton_solve(sys, Vector::Zero(3), cfg);
  CHECK(out.report.converged);
  CHECK(out.report.iters == 1);
  REQUIRE(out.report.line_search_steps.size() == 1);
  CHECK(out.report.line_search_steps[0] == doctest::Approx(1.0));
  CHECK((out.u - b).norm() < 1e-14);
  // The first linear solve uses the initial forcing term.
  REQUIRE(!sys.requested_rtols.empty());
  CHECK(sys.requested_rtols[0] == doctest::Approx(cfg.ew_eta0));
}

TEST_CASE("eisenstat-walker forcing: hand-computed table") {
  NewtonConfig cfg; // eta_max = 0.9
  // Residual ratio 0.25 with a negligible safeguard.
  CHECK(ew_forcing(1.0, 0.25, 1e-8, cfg) == doctest::Approx(0.0625).epsilon(1e-12));
  // Ratio 0.5: raw 0.25.
  CHECK(ew_forcing(1.0, 0.5, 1e-8, cfg) == doctest::Approx(0.25).epsilon(1e-12));
  // Diverging residual: capped at eta_max.
  CHECK(ew_forcing(1.0, 1.5, 1e-8, cfg) == doctest::Approx(0.9));
  // Safeguard active: 0.5^1.6180339887 = 0.32578... > raw 0.0625.
  CHECK(ew_forcing(1.0, 0.25, 0.5, cfg) == doctest::Approx(0.32578).epsilon(1e-4));
  // Safeguard above the cap: 0.95^phi = 0.92036 -> 0.9.
  CHECK(ew_forcing(1.0, 0.5, 0.95, cfg) == doctest::Approx(0.9));
}

TEST_CASE("raw forcing before safeguard: ratio 0.1 gives 0.01") {
  const Scalar raw = (0.1 / 1.0) * (0.1 / 1.0);
  CHECK(raw == doctest::Approx(0.01));
  NewtonConfig cfg;
  CHECK(ew_forcing(1.0, 0.1, 1e-12, cfg) == doctest::Approx(raw));
}

TEST_CASE("cubic backtracking accepts the exact Newton step on quadratics") {
  // G(u) = A u - b with SPD A: merit is quadratic, full step is exact.
  MatrixXd A(2, 2);
  A << 3, 1, 1, 2;
  Vector b(2);
  b << 1, -1;
  const auto G = [&](const Vector& u) -> Vector { return A * u - b; };
  Vector u0 = Vector::Zero(2);
  const Vector g0v = G(u0);
  const Vector d = A.fullPivLu().solve(-g0v);
  const Scalar slope0 = g0v.dot(A * d);
  const NewtonConfig cfg;
  const LineSearchResult ls =
      cubic_backtrack(G, u0, d, 0.5 * g0v.squaredNorm(), slope0, cfg);
  CHECK(ls.ok);
  CHECK(ls.lambda == doctest::Approx(1.0));
  CHECK(ls.backtracks == 0);
  CHECK(ls.merit < 1e-25);
}

TEST_CASE("cubic backtracking on u^3 - 1 from u = -1 with an overshooting "
          "direction") {
  const auto G = [](const Vector& u) -> Vector {
    Vector g(1);
    g(0) = u(0) * u(0) * u(0) - 1.0;
    return g;
  };
  Vector u0(1);
  u0 << -1.0;
  Vector d(1);
  d << 2.5; // overshoots the root at +1
  const Scalar g0 = 0.5 * 4.0;              // G(-1) = -2
  const Scalar slope0 = (-2.0) * 3.0 * 2.5; // G J d = -15
  const NewtonConfig cfg;
  const LineSearchResult ls = cubic_backtrack(G, u0, d, g0, slope0, cfg);
  CHECK(ls.ok);
  CHECK(ls.lambda < 1.0);
  CHECK(ls.merit < g0);

  // Scalar oracle: one quadratic interpolation step, same clamping rule.
  const Scalar u_full = -1.0 + 2.5;
  const Scalar merit_full = 0.5 * std::pow(u_full * u_full * u_full - 1.0, 2);
  Scalar lambda_expect = -slope0 / (2.0 * (merit_full - g0 - slope0));
  lambda_expect = std::min(0.5, std::max(0.1, lambda_expect));
  CHECK(ls.lambda == doctest::Approx(lambda_expect).epsilon(1e-12));
  CHECK(ls.backtracks == 1);
}

TEST_CASE("non-descent directions violate the precondition") {
  const auto G = [](const Vector& u) -> Vector { return u; };
  Vector u0(1), d(1);
  u0 << 1.0;
  d << 1.0;
  CHECK_THROWS_AS(cubic_backtrack(G, u0, d, 0.5, +1.0, NewtonConfig{}),
                  std::invalid_argument);
}

TEST_CASE("merit decreases monotonically across accepted iterations") {
  DenseSystem sys;
  sys.G = [](const Vector& u) -> Vector {
    Vector g(2);
    g(0) = u(0) * u(0) * u(0) - 1.0 + 0.3 * u(1);
    g(1) = std::tanh(u(1)) + 0.5 * u(1) - 0.2 + 0.1 * u(0);
    return g;
  };
  sys.Jfn = [](const Vector& u) {
    MatrixXd J(2, 2);
    const Scalar t = std::tanh(u(1));
    J << 3 * u(0) * u(0), 0.3, 0.1, (1 - t * t) + 0.5;
    return J;
  };
  Vector u0(2);
  u0 << 2.0, -1.0;
  NewtonConfig cfg;
  cfg.atol = 1e-13;
  const NewtonOutcome out = newton_solve(sys, u0, cfg);
  CHECK(out.report.converged);
  for (size_t k = 1; k < out.report.residual_history.size(); ++k)
    CHECK(out.report.residual_history[k] <=
          out.report.residual_history[k - 1] * (1 + 1e-12));
  CHECK(sys.G(out.u).norm() <= 1e-13);
}

TEST_CASE("superlinear contraction near the solution with exact solves") {
  DenseSystem sys;
  sys.G = [](const Vector& u) -> Vector {
    Vector g(3);
    for (Index i = 0; i < 3; ++i)
      g(i) = u(i) * u(i) * u(i) - (1.0 + 0.5 * i);
    return g;
  };
  sys.Jfn = [](const Vector& u) {
    MatrixXd J = MatrixXd::Zero(3, 3);
    for (Index i = 0; i < 3; ++i) J(i, i) = 3 * u(i) * u(i);
    return J;
  };
  Vector u0(3);
  u0 << 1.2, 1.1, 1.3;
  NewtonConfig cfg;
  cfg.atol = 1e-15;
  cfg.rtol = 0;
  cfg.ew_eta0 = 1e-12; // essentially exact solves throughout
  const NewtonOutcome out = newton_solve(sys, u0, cfg);
  CHECK(out.report.converged);
  const auto& hist = out.report.residual_history;
  REQUIRE(hist.size() >= 4);
  std::vector<Scalar> ratios;
  for (size_t k = 1; k < hist.size(); ++k)
    if (hist[k] > 1e-12) ratios.push_back(hist[k] / hist[k - 1]);
  // Ratios of successive residuals shrink toward zero until roundoff.
  REQUIRE(ratios.size() >= 2);
  for (size_t k = 1; k < ratios.size(); ++k) CHECK(ratios[k] < ratios[k - 1]);
  CHECK(ratios.back() < 1e-3);
}

TEST_CASE("lagged jacobian still converges, just more slowly") {
  DenseSystem sys;
  sys.G = [](const Vector& u) -> Vector {
    Vector g(2);
    g(0) = u(0) * u(0) * u(0) - 2.0;
    g(1) = u(1) * u(1) - 3.0;
    return g;
  };
  sys.Jfn = [](const Vector& u) {
    MatrixXd J = MatrixXd::Zero(2, 2);
    J(0, 0) = 3 * u(0) * u(0);
    J(1, 1) = 2 * u(1);
    return J;
  };
  Vector u0(2);
  u0 << 1.5, 2.0;
  NewtonConfig exact_cfg;
  exact_cfg.atol = 1e-13;
  NewtonConfig lagged_cfg = exact_cfg;
  lagged_cfg.lag_jacobian = true;
  DenseSystem sys2 = sys;
  const NewtonOutcome fresh = newton_solve(sys, u0, exact_cfg);
  const NewtonOutcome lagged = newton_solve(sys2, u0, lagged_cfg);
  CHECK(fresh.report.converged);
  CHECK(lagged.report.converged);
  CHECK(lagged.report.iters >= fresh.report.iters);
  CHECK((fresh.u - lagged.u).norm() < 1e-10);
}

TEST_CASE("nan residual fails immediately") {
  DenseSystem sys;
  sys.G = [](const Vector& u) -> Vector {
    Vector g(1);
    g(0) = std::sqrt(u(0)); // NaN for negative input
    return g;
  };
  sys.Jfn = [](const Vector&) { return MatrixXd::Identity(1, 1); };
  Vector u0(1);
  u0 << -1.0;
  const NewtonOutcome out = newton_solve(sys, u0, NewtonConfig{});
  CHECK_FALSE(out.report.converged);
  CHECK(out.report.failure.find("non-finite") != std::string::npos);
}

TEST_CASE("line-search exhaustion reports a diagnostic") {
  // A direction pointing away from any merit decrease: G(u) = u, d = huge
  // overshoot with a tiny allowed backtrack budget.
  DenseSystem sys;
  sys.G = [](const Vector& u) -> Vector {
    Vector g(1);
    g(0) = std::atan(u(0)) * 10.0;
    return g;
  };
  sys.Jfn = [](const Vector& u) {
    MatrixXd J(1, 1);
    J(0, 0) = 10.0 / (1 + u(0) * u(0));
    return J;
  };
  Vector u0(1);
  u0 << 50.0; // atan saturates; the Newton step is enormous
  NewtonConfig cfg;
  cfg.ls_max_backtracks = 1;
  cfg.max_iters = 3;
  const NewtonOutcome out = newton_solve(sys, u0, cfg);
  CHECK_FALSE(out.report.converged);
  CHECK(!out.report.failure.empty());
}
