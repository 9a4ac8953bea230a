#include "netform/timeloop.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace netform {

std::string scheme_name(Scheme s) {
  switch (s) {
  case Scheme::BE: return "be";
  case Scheme::BDF2: return "bdf2";
  case Scheme::CN: return "cn";
  }
  return "?";
}

void IntegratorConfig::validate() const {
  if (!(dt_min > 0 && dt_min <= dt0 && dt0 <= dt_max))
    throw std::invalid_argument("integrator: need 0 < dt_min <= dt0 <= dt_max");
  if (t_end <= 0) throw std::invalid_argument("integrator: t_end must be > 0");
  if (lte_tol <= 0 || safety <= 0 || growth_max < 1)
    throw std::invalid_argument("integrator: bad controller constants");
}

StageSystem::StageSystem(const Assembler& assembler,
                         const LinearOptions& linear)
    : assembler_(&assembler), linear_(linear),
      lumped_mass_(assembler.fe().lumped_pressure_mass) {}

void StageSystem::set_stage(Scalar sigma, Vector u_ref, Vector extra,
                            Scalar t_new) {
  sigma_ = sigma;
  u_ref_ = std::move(u_ref);
  extra_ = std::move(extra);
  t_new_ = t_new;
}

Vector StageSystem::residual(const Vector& u) {
  StateVector state;
  state.data = u;
  state.time = t_new_;
  return assembler_->residual(state, sigma_ * (u - u_ref_) + extra_, t_new_);
}

void StageSystem::prepare_jacobian(const Vector& u) {
  StateVector state;
  state.data = u;
  state.time = t_new_;
  prec_.reset(); // points into J_; must go first
  J_.emplace(assembler_->jacobian(state, sigma_));
  prec_.emplace(*J_, lumped_mass_, linear_.schur, &schur_cache_);
}

Vector StageSystem::apply_jacobian(const Vector& v) const {
  return J_->apply(v);
}

KrylovResult StageSystem::solve_linear(const Vector& rhs, Scalar rtol,
                                       Scalar atol) {
  GmresOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  opts.restart = linear_.gmres_restart;
  opts.max_iters = linear_.gmres_max_iters;
  const auto A = [this](const Vector& v) { return J_->apply(v); };
  const auto M = [this](const Vector& v) { return prec_->apply(v); };
  return gmres(A, rhs, M, opts);
}

StateVector init_consistent(
    const std::function<SmallMat(const RowVectorXd&)>& C0,
    const Assembler& assembler, const LinearOptions& linear) {
  const DofLayout& layout = assembler.layout();
  const MeshTopology& mesh = assembler.mesh();
  StateVector u(layout);
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    const SmallMat C = C0 ? C0(mesh.centroid(c))
                          : SmallMat(SmallMat::Identity(mesh.dim, mesh.dim));
    if ((C - C.transpose()).norm() > 1e-12 * (1.0 + C.norm()))
      throw std::invalid_argument("init_consistent: C0 not symmetric at cell " +
                                  std::to_string(c));
    if (min_eigenvalue(C) < -1e-12 * (1.0 + C.norm()))
      throw std::invalid_argument(
          "init_consistent: C0 not positive semi-definite at cell " +
          std::to_string(c));
    const CellVec comps = matrix_to_components(C);
    for (Index m = 0; m < layout.n_components; ++m)
      u.data(layout.cond_dof(m, c)) = comps(m);
  }
  SparseMat D;
  Vector rhs;
  assembler.poisson_only(u, D, rhs);
  SchurOptions inner = linear.schur;
  inner.inner_rtol = std::min(inner.inner_rtol, 1e-12);
  const KrylovResult sol =
      solve_neumann(D, rhs, assembler.fe().lumped_pressure_mass, inner);
  if (sol.status == SolveStatus::NegativeCurvature)
    throw std::runtime_error("init_consistent: Poisson solve failed");
  u.pressure(layout) = sol.x;
  u.time = 0;
  return u;
}

namespace {

StepResult solve_stage(const StateVector& u_n, Scalar t, Scalar dt,
                       Scalar sigma, Vector u_ref, Vector extra,
                       StageSystem& sys, const NewtonConfig& newton) {
  StepResult result;
  result.dt_used = dt;
  sys.set_stage(sigma, std::move(u_ref), std::move(extra), t + dt);
  const NewtonOutcome outcome = newton_solve(sys, u_n.data, newton);
  result.newton_iters = outcome.report.iters;
  result.krylov_iters_total = outcome.report.total_krylov();
  if (!outcome.report.converged) {
    result.accepted = false;
    result.dt_next = 0.5 * dt;
    result.detail = outcome.report.failure;
    result.reject_reason =
        outcome.report.failure.find("ellipticity") != std::string::npos
            ? RejectReason::EllipticityGuard
            : RejectReason::NewtonFail;
    return result;
  }
  result.accepted = true;
  result.dt_next = dt;
  result.u_new.data = outcome.u;
  result.u_new.time = t + dt;
  return result;
}

} // namespace

StepResult be_step(const StateVector& u_n, Scalar t, Scalar dt,
                   StageSystem& sys, const NewtonConfig& newton) {
  if (dt <= 0) throw std::invalid_argument("be_step: dt must be positive");
  return solve_stage(u_n, t, dt, 1.0 / dt, u_n.data,
                     Vector::Zero(u_n.data.size()), sys, newton);
}

StepResult bdf2_step(const StateVector& u_n, const StateVector& u_nm1,
                     Scalar t, Scalar dt, StageSystem& sys,
                     const NewtonConfig& newton) {
  if (dt <= 0) throw std::invalid_argument("bdf2_step: dt must be positive");
  // Constant-step BDF2: udot = (3 u_{n+1} - 4 u_n + u_{n-1}) / (2 dt)
  //                          = 1.5/dt (u_{n+1} - u_n) + (u_{n-1} - u_n)/(2 dt).
  return solve_stage(u_n, t, dt, 1.5 / dt, u_n.data,
                     (u_nm1.data - u_n.data) / (2.0 * dt), sys, newton);
}

StepResult cn_step(const StateVector& u_n, const Vector& rate_n, Scalar t,
                   Scalar dt, StageSystem& sys, const NewtonConfig& newton) {
  if (dt <= 0) throw std::invalid_argument("cn_step: dt must be positive");
  // Trapezoidal differential update written in stage form:
  // udot = 2 (u_{n+1} - u_n)/dt - udot_n, so the conductivity rows equal
  // twice the trapezoidal residual and the Jacobian stays symmetric; the
  // algebraic pressure constraint is enforced at t_{n+1}.
  return solve_stage(u_n, t, dt, 2.0 / dt, u_n.data, -rate_n, sys, newton);
}

Scalar adapt_dt(const StepResult& prev, Scalar lte_estimate,
                const IntegratorConfig& cfg) {
  if (!prev.accepted)
    return std::max(cfg.dt_min, 0.5 * prev.dt_used);
  const Scalar dt = prev.dt_used;
  Scalar factor;
  if (lte_estimate <= 0) {
    factor = cfg.growth_max;
  } else {
    factor = cfg.safety *
             std::pow(cfg.lte_tol / lte_estimate,
                      1.0 / static_cast<Scalar>(cfg.order() + 1));
    factor = std::min(cfg.growth_max, std::max(0.25, factor));
  }
  return std::min(cfg.dt_max, std::max(cfg.dt_min, dt * factor));
}

namespace {

// Relative max norm of the predictor mismatch over the conductivity block;
// pressure is algebraic and excluded.
Scalar lte_norm(const Vector& diff, const Vector& u_new, Index n_cond) {
  Scalar m = 0;
  for (Index i = 0; i < n_cond; ++i)
    m = std::max(m, std::abs(diff(i)) / (1.0 + std::abs(u_new(i))));
  return m;
}

std::string describe_mesh(const MeshTopology& mesh) {
  std::ostringstream os;
  switch (mesh.kind) {
  case CellKind::Quad: os << "quad"; break;
  case CellKind::Triangle: os << "tri"; break;
  case CellKind::Hex: os << "hex"; break;
  }
  os << " dim=" << mesh.dim << " cells=" << mesh.n_cells()
     << " vertices=" << mesh.n_vertices();
  return os.str();
}

} // namespace

RunLog run_simulation(const RunOptions& opts, const MeshTopology& mesh,
                      const FeCache& fe, const ModelParams& params,
                      const SourceSpec& source, const RunCallbacks& callbacks) {
  opts.time.validate();
  params.validate();

  RunLog log;
  log.scheme = scheme_name(opts.time.scheme);
  log.mesh_descriptor = describe_mesh(mesh);
  log.params = params;

  AssemblyOptions aopts;
  aopts.quad_degree = opts.quad_degree;
  const Assembler assembler(mesh, fe, params, source, aopts);
  StageSystem sys(assembler, opts.linear);

  StateVector u = init_consistent(opts.initial_conductivity, assembler,
                                  opts.linear);
  Vector rate = assembler.consistent_rate(u);
  log.initial_time = 0;
  log.initial_energy = energy(u, mesh, fe, params);

  const DofLayout& layout = assembler.layout();
  const IntegratorConfig& tc = opts.time;
  Scalar t = 0, dt = tc.dt0;
  Scalar prev_energy = log.initial_energy, prev_time = 0;

  // BDF2 history; invalidated by rejections and step resizes.
  StateVector u_prev;
  Vector rate_prev;
  Scalar dt_hist = 0, dt_prev = 0;
  bool have_history = false, have_rate_prev = false;

  const Scalar t_tiny = 1e-12 * tc.t_end;
  const auto clock_now = std::chrono::steady_clock::now;

  while (t < tc.t_end - t_tiny) {
    dt = std::min(dt, tc.t_end - t);

    Scheme effective = tc.scheme;
    if (tc.scheme == Scheme::BDF2 && (!have_history || dt != dt_hist))
      effective = Scheme::BE; // restart BDF2 from a BE step after a resize

    const auto tic = clock_now();
    StepResult step;
    switch (effective) {
    case Scheme::BE: step = be_step(u, t, dt, sys, opts.newton); break;
    case Scheme::BDF2:
      step = bdf2_step(u, u_prev, t, dt, sys, opts.newton);
      break;
    case Scheme::CN: step = cn_step(u, rate, t, dt, sys, opts.newton); break;
    }

    if (!step.accepted) {
      if (dt <= tc.dt_min * (1 + 1e-12)) {
        log.failure = "step size collapse at t=" + std::to_string(t) + ": " +
                      step.detail;
        return log;
      }
      dt = adapt_dt(step, 0, tc);
      have_history = false;
      continue;
    }

    // Local truncation error against the rate-based predictor.
    Vector predictor = u.data + dt * rate;
    if (tc.order() >= 2 && have_rate_prev && dt_prev > 0)
      predictor += (0.5 * dt * dt / dt_prev) * (rate - rate_prev);
    Scalar lte = lte_norm(step.u_new.data - predictor, step.u_new.data,
                          layout.n_cond_dofs());
    if (tc.adaptive && lte > tc.lte_tol) {
      if (dt <= tc.dt_min * (1 + 1e-12)) {
        log.failure = "step size collapse (LTE) at t=" + std::to_string(t);
        return log;
      }
      step.accepted = false;
      step.reject_reason = RejectReason::LTE;
      dt = adapt_dt(StepResult{true, {}, dt, dt, 0, 0, RejectReason::None, ""},
                    lte, tc);
      dt = std::min(dt, 0.9 * step.dt_used); // rejection must shrink
      have_history = false;
      continue;
    }

    // Accept.
    u_prev = u;
    rate_prev = rate;
    have_rate_prev = true;
    dt_prev = dt;
    u = step.u_new;
    rate = assembler.consistent_rate(u);
    t += dt;
    u.time = t;
    dt_hist = dt;
    have_history = true;

    StepStats stats;
    stats.dt = dt;
    stats.newton_iters = step.newton_iters;
    stats.krylov_total = step.krylov_iters_total;
    stats.wall_time =
        std::chrono::duration<Scalar>(clock_now() - tic).count();
    const LogRow row = log_step(u, stats, mesh, fe, params, prev_energy,
                                prev_time);
    log.rows.push_back(row);
    prev_energy = row.energy;
    prev_time = t;
    if (callbacks.on_accept) callbacks.on_accept(u, step, row);

    if (tc.adaptive) {
      Scalar dt_next = adapt_dt(step, lte, tc);
      // Hold dt inside a 15% deadband under BDF2 so constant-step stretches
      // actually run BDF2 instead of degenerating into BE restarts.
      if (tc.scheme == Scheme::BDF2 && std::abs(dt_next - dt) <= 0.15 * dt)
        dt_next = dt;
      dt = dt_next;
    }
  }
  log.completed = true;
  return log;
}

} // namespace netform
