#pragma once

#include "netform/assembly.hpp"
#include "netform/diagnostics.hpp"
#include "netform/linalg.hpp"
#include "netform/newton.hpp"
#include "netform/types.hpp"

#include <functional>
#include <optional>

namespace netform {

enum class Scheme { BE, BDF2, CN };

std::string scheme_name(Scheme s);

struct IntegratorConfig {
  Scheme scheme = Scheme::BE;
  Scalar dt0 = 1e-3;
  Scalar dt_min = 1e-9;
  Scalar dt_max = 5.0;
  Scalar t_end = 200.0;
  Scalar lte_tol = 1e-3;
  Scalar safety = 0.9;
  Scalar growth_max = 2.0;
  bool adaptive = true;

  void validate() const;
  Index order() const { return scheme == Scheme::BE ? 1 : 2; }
};

struct LinearOptions {
  Index gmres_restart = 30;
  Index gmres_max_iters = 500;
  SchurOptions schur;
};

enum class RejectReason { None, NewtonFail, LTE, EllipticityGuard };

struct StepResult {
  bool accepted = false;
  StateVector u_new;
  Scalar dt_used = 0;
  Scalar dt_next = 0;
  Index newton_iters = 0;
  Index krylov_iters_total = 0;
  RejectReason reject_reason = RejectReason::None;
  std::string detail;
};

// Nonlinear system of one implicit stage:
// G(u) = F(sigma (u - u_ref) + extra, u, t). The difference-first form
// avoids catastrophic cancellation for small time steps (large sigma).
class StageSystem {
public:
  StageSystem(const Assembler& assembler, const LinearOptions& linear);

  void set_stage(Scalar sigma, Vector u_ref, Vector extra, Scalar t_new);

  Vector residual(const Vector& u);
  void prepare_jacobian(const Vector& u);
  Vector apply_jacobian(const Vector& v) const;
  KrylovResult solve_linear(const Vector& rhs, Scalar rtol, Scalar atol);

  const Assembler& assembler() const { return *assembler_; }
  const Vector& lumped_mass() const { return lumped_mass_; }
  const BlockJacobian& last_jacobian() const { return *J_; }
  const SchurPreconditioner& last_preconditioner() const { return *prec_; }

private:
  const Assembler* assembler_;
  LinearOptions linear_;
  Vector lumped_mass_;
  SchurCache schur_cache_;
  Scalar sigma_ = 0;
  Vector u_ref_;
  Vector extra_;
  Scalar t_new_ = 0;
  std::optional<BlockJacobian> J_;
  std::optional<SchurPreconditioner> prec_;
};

// Consistent initialization: the pressure block solves the Poisson
// constraint for the given cellwise-SPSD initial conductivity.
StateVector init_consistent(
    const std::function<SmallMat(const RowVectorXd&)>& C0,
    const Assembler& assembler, const LinearOptions& linear);

// One implicit step with the given scheme ingredients; rejected steps halve
// the time step. dt_next on success is left equal to dt (the caller's
// controller overrides it).
StepResult be_step(const StateVector& u_n, Scalar t, Scalar dt,
                   StageSystem& sys, const NewtonConfig& newton);
StepResult bdf2_step(const StateVector& u_n, const StateVector& u_nm1,
                     Scalar t, Scalar dt, StageSystem& sys,
                     const NewtonConfig& newton);
StepResult cn_step(const StateVector& u_n, const Vector& rate_n, Scalar t,
                   Scalar dt, StageSystem& sys, const NewtonConfig& newton);

// dt * safety * (lte_tol/lte)^(1/(order+1)), clamped to [dt/4, dt*growth_max]
// and then to [dt_min, dt_max]; rejected steps return dt/2.
Scalar adapt_dt(const StepResult& prev, Scalar lte_estimate,
                const IntegratorConfig& cfg);

struct RunOptions {
  IntegratorConfig time;
  NewtonConfig newton;
  LinearOptions linear;
  Index quad_degree = 2;
  // Initial conductivity at a cell centroid; identity by default.
  std::function<SmallMat(const RowVectorXd&)> initial_conductivity;
};

struct RunCallbacks {
  std::function<void(const StateVector&, const StepResult&, const LogRow&)>
      on_accept;
};

// Advances the DAE from the consistent initial state to t_end, logging one
// row per accepted step. Source mean offset must already be computed
// against `fe`.
RunLog run_simulation(const RunOptions& opts, const MeshTopology& mesh,
                      const FeCache& fe, const ModelParams& params,
                      const SourceSpec& source,
                      const RunCallbacks& callbacks = {});

} // namespace netform
