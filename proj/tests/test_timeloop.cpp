#include <doctest.h>

#include "netform/diagnostics.hpp"
#include "netform/timeloop.hpp"

#include <cmath>
#include <sstream>

using namespace netform;

namespace {

const Eigen::AlignedBox2d kUnitSquare(Eigen::Vector2d(0, 0),
                                      Eigen::Vector2d(1, 1));

// Homogeneous reduction: with S = 0 and C = c I the whole field obeys the
// scalar ODE c' = -m(c) c, m(c) = nu (2 c^2 + eps)^((gamma-2)/2) in 2D.
struct ScalarModel {
  Scalar nu, gamma, eps;

  Scalar m(Scalar c) const {
    return nu * std::pow(2 * c * c + eps, 0.5 * (gamma - 2.0));
  }
  Scalar f(Scalar c) const { return -m(c) * c; }
  Scalar dm_dc(Scalar c) const {
    return nu * 0.5 * (gamma - 2.0) *
           std::pow(2 * c * c + eps, 0.5 * (gamma - 4.0)) * 4 * c;
  }

  // Newton solve of x + a m(x) x = b (captures BE/CN/BDF2 updates).
  Scalar implicit_solve(Scalar a, Scalar b, Scalar guess) const {
    Scalar x = guess;
    for (int it = 0; it < 100; ++it) {
      const Scalar g = x + a * m(x) * x - b;
      const Scalar dg = 1.0 + a * (m(x) + dm_dc(x) * x);
      const Scalar step = g / dg;
      x -= step;
      if (std::abs(step) < 1e-16 * (1 + std::abs(x))) break;
    }
    return x;
  }

  Scalar be(Scalar c, Scalar dt) const {
    return implicit_solve(dt, c, c);
  }
  Scalar cn(Scalar c, Scalar dt) const {
    return implicit_solve(0.5 * dt, c + 0.5 * dt * f(c), c);
  }
  Scalar bdf2(Scalar c, Scalar cm1, Scalar dt) const {
    return implicit_solve(2.0 * dt / 3.0, (4.0 * c - cm1) / 3.0, c);
  }

  // Integer step grid: no time accumulation drift in the reference.
  Scalar rk4_reference(Scalar c0, Scalar t_end, Scalar dt) const {
    const long long n = std::llround(t_end / dt);
    const Scalar h = t_end / static_cast<Scalar>(n);
    Scalar c = c0;
    for (long long k = 0; k < n; ++k) {
      const Scalar k1 = f(c);
      const Scalar k2 = f(c + 0.5 * h * k1);
      const Scalar k3 = f(c + 0.5 * h * k2);
      const Scalar k4 = f(c + h * k3);
      c += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return c;
  }
};

struct HomogeneousSetup {
  MeshTopology mesh;
  FeCache fe;
  DofLayout layout;
  ModelParams params;
  SourceSpec source;
  Assembler assembler;
  LinearOptions linear;

  explicit HomogeneousSetup(Scalar nu = 1.0)
      : mesh(generate_structured_quad(2, 2, kUnitSquare)),
        fe(build_fe_cache(mesh, 2)), layout(DofLayout::from_mesh(mesh)),
        params{make_params(nu)},
        source(make_custom_source([](const RowVectorXd&) { return 0.0; },
                                  mesh, fe)),
        assembler(mesh, fe, params, source) {}

  static ModelParams make_params(Scalar nu) {
    ModelParams p;
    p.nu = nu;
    return p;
  }

  ScalarModel scalar() const { return {params.nu, params.gamma, params.eps}; }

  StateVector initial(Scalar c0) const {
    StateVector u(layout);
    u.component(layout, 0).setConstant(c0);
    u.component(layout, 2).setConstant(c0);
    return u;
  }
};

} // namespace

TEST_CASE("init_consistent: zero source gives zero pressure") {
  HomogeneousSetup s;
  const StateVector u = init_consistent(nullptr, s.assembler, s.linear);
  CHECK(u.pressure(s.layout).lpNorm<Eigen::Infinity>() < 1e-12);
  for (Index c = 0; c < s.mesh.n_cells(); ++c) {
    CHECK(u.data(s.layout.cond_dof(0, c)) == 1.0);
    CHECK(u.data(s.layout.cond_dof(1, c)) == 0.0);
  }
}

TEST_CASE("init_consistent: algebraic residual vanishes after the solve") {
  const MeshTopology mesh = generate_structured_quad(64, 64, kUnitSquare);
  const FeCache fe = build_fe_cache(mesh, 2);
  ModelParams params;
  Vector center(2);
  center << 0.25, 0.25;
  const SourceSpec source = make_gaussian_source(center, 500.0, mesh, fe);
  const Assembler assembler(mesh, fe, params, source);
  const DofLayout layout = DofLayout::from_mesh(mesh);

  const StateVector u = init_consistent(nullptr, assembler, LinearOptions{});
  const Vector F =
      assembler.residual(u, Vector::Zero(layout.size()), 0.0);
  CHECK(F.tail(layout.n_pressure_dofs()).norm() < 1e-12);
  // Mean-zero pressure in the lumped-mass sense.
  CHECK(std::abs(fe.lumped_pressure_mass.dot(u.pressure(layout))) <
        1e-12 * fe.lumped_pressure_mass.sum());
}

TEST_CASE("init_consistent rejects indefinite initial data") {
  HomogeneousSetup s;
  const auto C0 = [](const RowVectorXd& x) -> SmallMat {
    SmallMat C(2, 2);
    if (x(0) < 0.5 && x(1) < 0.5)
      C << -1, 0, 0, -1;
    else
      C << 1, 0, 0, 1;
    return C;
  };
  CHECK_THROWS_AS(init_consistent(C0, s.assembler, s.linear),
                  std::invalid_argument);
}

TEST_CASE("be_step matches the scalar implicit solve per component") {
  HomogeneousSetup s;
  const ScalarModel scalar = s.scalar();
  for (const Scalar dt : {0.05, 0.5}) {
    StageSystem sys(s.assembler, s.linear);
    const StateVector u0 = s.initial(0.8);
    NewtonConfig newton;
    const StepResult step = be_step(u0, 0.0, dt, sys, newton);
    REQUIRE(step.accepted);
    const Scalar expected = scalar.be(0.8, dt);
    for (Index c = 0; c < s.mesh.n_cells(); ++c) {
      CHECK(step.u_new.data(s.layout.cond_dof(0, c)) ==
            doctest::Approx(expected).epsilon(1e-12));
      CHECK(std::abs(step.u_new.data(s.layout.cond_dof(1, c))) < 1e-13);
    }
  }
}

TEST_CASE("be_step: dt -> 0 leaves the state unchanged") {
  HomogeneousSetup s;
  StageSystem sys(s.assembler, s.linear);
  const StateVector u0 = s.initial(0.9);
  const StepResult step = be_step(u0, 0.0, 1e-12, sys, NewtonConfig{});
  REQUIRE(step.accepted);
  const Vector dC = (step.u_new.data - u0.data).head(s.layout.n_cond_dofs());
  CHECK(dC.norm() < 1e-9 * u0.data.head(s.layout.n_cond_dofs()).norm());
}

TEST_CASE("cn_step matches the scalar trapezoidal oracle") {
  HomogeneousSetup s;
  const ScalarModel scalar = s.scalar();
  const Scalar dt = 0.1;
  StageSystem sys(s.assembler, s.linear);
  const StateVector u0 = s.initial(0.8);
  const Vector rate = s.assembler.consistent_rate(u0);
  const StepResult step = cn_step(u0, rate, 0.0, dt, sys, NewtonConfig{});
  REQUIRE(step.accepted);
  const Scalar expected = scalar.cn(0.8, dt);
  for (Index c = 0; c < s.mesh.n_cells(); ++c)
    CHECK(step.u_new.data(s.layout.cond_dof(0, c)) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bdf2_step: local error shrinks by ~8x when halving dt") {
  HomogeneousSetup s;
  const ScalarModel scalar = s.scalar();
  const Scalar c0 = 0.8;
  const auto local_error = [&](Scalar dt) {
    // Exact history at t-dt and t from a fine reference.
    const Scalar cm1 = c0;
    const Scalar cn = scalar.rk4_reference(c0, dt, dt / 200);
    StateVector u_nm1 = s.initial(cm1);
    StateVector u_n = s.initial(cn);
    StageSystem sys(s.assembler, s.linear);
    const StepResult step =
        bdf2_step(u_n, u_nm1, dt, dt, sys, NewtonConfig{});
    REQUIRE(step.accepted);
    const Scalar reference = scalar.rk4_reference(c0, 2 * dt, dt / 200);
    return std::abs(step.u_new.data(s.layout.cond_dof(0, 0)) - reference);
  };
  const Scalar e1 = local_error(0.05);
  const Scalar e2 = local_error(0.025);
  CHECK(e1 / e2 == doctest::Approx(8.0).epsilon(0.2));
}

TEST_CASE("bdf2_step matches the scalar two-step oracle") {
  HomogeneousSetup s;
  const ScalarModel scalar = s.scalar();
  const Scalar dt = 0.1, c0 = 0.8;
  const Scalar c1 = scalar.be(c0, dt);
  StateVector u0 = s.initial(c0);
  StateVector u1 = s.initial(c1);
  StageSystem sys(s.assembler, s.linear);
  const StepResult step = bdf2_step(u1, u0, dt, dt, sys, NewtonConfig{});
  REQUIRE(step.accepted);
  const Scalar expected = scalar.bdf2(c1, c0, dt);
  for (Index c = 0; c < s.mesh.n_cells(); ++c)
    CHECK(step.u_new.data(s.layout.cond_dof(0, c)) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("global convergence orders on the homogeneous reduction") {
  // The full three-point slope measurement lives in the acceptance suite;
  // here one halving per scheme keeps the unit test quick.
  HomogeneousSetup s(0.03);
  const ScalarModel scalar = s.scalar();
  const Scalar t_end = 20.0;
  const Scalar reference = scalar.rk4_reference(1.0, t_end, 1e-5);

  const auto run_error = [&](Scheme scheme, Scalar dt) {
    RunOptions opts;
    opts.time.scheme = scheme;
    opts.time.dt0 = dt;
    opts.time.dt_min = dt;
    opts.time.dt_max = dt;
    opts.time.t_end = t_end;
    opts.time.adaptive = false;
    StateVector last;
    RunCallbacks cb;
    cb.on_accept = [&last](const StateVector& u, const StepResult&,
                           const LogRow&) { last = u; };
    const RunLog log =
        run_simulation(opts, s.mesh, s.fe, s.params, s.source, cb);
    REQUIRE(log.completed);
    return std::abs(last.data(0) - reference);
  };

  for (const auto& [scheme, expected_order] :
       std::vector<std::pair<Scheme, Scalar>>{
           {Scheme::BE, 1.0}, {Scheme::BDF2, 2.0}, {Scheme::CN, 2.0}}) {
    const Scalar e1 = run_error(scheme, 1e-2);
    const Scalar e2 = run_error(scheme, 5e-3);
    const Scalar slope = std::log2(e1 / e2);
    CHECK(std::abs(slope - expected_order) < 0.1);
  }
}

TEST_CASE("adaptive homogeneous run matches the scalar replay at all steps") {
  HomogeneousSetup s;
  const ScalarModel scalar = s.scalar();
  RunOptions opts;
  opts.time.t_end = 5.0;
  opts.time.dt0 = 1e-2;
  opts.time.lte_tol = 1e-4;

  std::vector<Scalar> dts;
  std::vector<Scalar> c_values;
  RunCallbacks cb;
  cb.on_accept = [&](const StateVector& u, const StepResult& step,
                     const LogRow&) {
    dts.push_back(step.dt_used);
    c_values.push_back(u.data(0));
  };
  const RunLog log = run_simulation(opts, s.mesh, s.fe, s.params, s.source, cb);
  REQUIRE(log.completed);
  REQUIRE(!dts.empty());

  Scalar c = 1.0;
  for (size_t k = 0; k < dts.size(); ++k) {
    c = scalar.be(c, dts[k]);
    CHECK(c_values[k] == doctest::Approx(c).epsilon(1e-10));
  }
}

TEST_CASE("adapt_dt follows the controller formula") {
  IntegratorConfig cfg;
  cfg.dt_min = 1e-6;
  cfg.dt_max = 10;
  cfg.lte_tol = 1e-3;
  StepResult ok;
  ok.accepted = true;
  ok.dt_used = 0.2;
  // lte at tolerance: safety factor only.
  CHECK(adapt_dt(ok, 1e-3, cfg) == doctest::Approx(0.9 * 0.2));
  // lte = 0: growth clamp.
  CHECK(adapt_dt(ok, 0.0, cfg) == doctest::Approx(0.4));
  // Very large lte: floor at dt/4.
  CHECK(adapt_dt(ok, 1e3, cfg) == doctest::Approx(0.05));
  // Rejected step: halve.
  StepResult bad;
  bad.accepted = false;
  bad.dt_used = 0.2;
  CHECK(adapt_dt(bad, 0.0, cfg) == doctest::Approx(0.1));
  // Clamped into [dt_min, dt_max].
  ok.dt_used = 8.0;
  CHECK(adapt_dt(ok, 0.0, cfg) == doctest::Approx(10.0));
}

TEST_CASE("one-step run: t_end = dt0 with a huge tolerance") {
  HomogeneousSetup s;
  RunOptions opts;
  opts.time.dt0 = 0.25;
  opts.time.t_end = 0.25;
  opts.time.lte_tol = 1e6;
  const RunLog log = run_simulation(opts, s.mesh, s.fe, s.params, s.source);
  CHECK(log.completed);
  CHECK(log.rows.size() == 1);
  CHECK(log.rows[0].t == doctest::Approx(0.25));
}

TEST_CASE("newton failure rejects the step and halves dt") {
  HomogeneousSetup s;
  StageSystem sys(s.assembler, s.linear);
  NewtonConfig strangled;
  strangled.max_iters = 1;
  strangled.rtol = 1e-14;
  strangled.atol = 1e-16;
  const StepResult step = be_step(s.initial(1.0), 0.0, 0.5, sys, strangled);
  CHECK_FALSE(step.accepted);
  CHECK(step.reject_reason == RejectReason::NewtonFail);
  CHECK(step.dt_next == doctest::Approx(0.25));
  CHECK(step.dt_next < step.dt_used);
}

TEST_CASE("short driven run: energy decays, SPSD holds, pressure mean-zero") {
  const MeshTopology mesh = generate_structured_quad(16, 16, kUnitSquare);
  const FeCache fe = build_fe_cache(mesh, 2);
  ModelParams params;
  Vector center(2);
  center << 0.25, 0.25;
  const SourceSpec source = make_gaussian_source(center, 500.0, mesh, fe);
  const DofLayout layout = DofLayout::from_mesh(mesh);

  RunOptions opts;
  opts.time.t_end = 2.0;

  std::vector<Scalar> pressure_means;
  RunCallbacks cb;
  cb.on_accept = [&](const StateVector& u, const StepResult&, const LogRow&) {
    pressure_means.push_back(
        std::abs(fe.lumped_pressure_mass.dot(u.pressure(layout))));
  };
  const RunLog log = run_simulation(opts, mesh, fe, params, source, cb);
  REQUIRE(log.completed);
  REQUIRE(log.rows.size() > 3);
  Scalar prev = log.initial_energy;
  for (const LogRow& row : log.rows) {
    CHECK(row.energy <= prev + 1e-10 * std::abs(prev));
    CHECK(row.spsd_fraction == 0.0);
    prev = row.energy;
  }
  for (const Scalar mean : pressure_means) CHECK(mean < 1e-10);
}

TEST_CASE("identical configurations produce bitwise-identical logs") {
  const MeshTopology mesh = generate_structured_quad(8, 8, kUnitSquare);
  const FeCache fe = build_fe_cache(mesh, 2);
  ModelParams params;
  Vector center(2);
  center << 0.25, 0.25;
  const SourceSpec source = make_gaussian_source(center, 500.0, mesh, fe);
  RunOptions opts;
  opts.time.t_end = 0.5;

  const auto csv_of = [&]() {
    const RunLog log = run_simulation(opts, mesh, fe, params, source);
    std::ostringstream os;
    write_csv(log, os);
    return os.str();
  };
  CHECK(csv_of() == csv_of());
}

TEST_CASE("integrator config validation") {
  IntegratorConfig cfg;
  cfg.dt_min = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.dt0 = 10;
  cfg.dt_max = 5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.t_end = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
