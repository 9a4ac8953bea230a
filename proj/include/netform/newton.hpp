#pragma once

#include "netform/linalg.hpp"
#include "netform/types.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace netform {

struct NewtonConfig {
  Scalar atol = 1e-14;
  Scalar rtol = 1e-12;
  Index max_iters = 50;
  Scalar ew_eta0 = 0.1;
  Scalar ew_eta_max = 0.9;
  Index ls_max_backtracks = 8;
  Scalar ls_alpha = 1e-4; // sufficient-decrease constant
  bool lag_jacobian = false;
};

struct NewtonReport {
  bool converged = false;
  Index iters = 0;
  std::vector<Scalar> residual_history;
  std::vector<Index> krylov_iters;
  std::vector<Scalar> line_search_steps;
  std::string failure;
  Index total_krylov() const {
    Index n = 0;
    for (Index k : krylov_iters) n += k;
    return n;
  }
};

// Eisenstat-Walker choice 2 with gamma = 1, alpha = 2, safeguarded by
// eta_prev^((1+sqrt(5))/2) and capped at ew_eta_max.
inline Scalar ew_forcing(Scalar prev_residual, Scalar curr_residual,
                         Scalar prev_eta, const NewtonConfig& cfg) {
  const Scalar ratio = curr_residual / prev_residual;
  const Scalar raw = ratio * ratio;
  const Scalar safeguard = std::pow(prev_eta, 0.5 * (1.0 + std::sqrt(5.0)));
  return std::min(cfg.ew_eta_max, std::max(raw, safeguard));
}

struct LineSearchResult {
  Scalar lambda = 0;
  Vector u_new;
  Vector g_new; // residual at the accepted point
  Scalar merit = 0;
  Index backtracks = 0;
  bool ok = false;
};

// Sufficient-decrease line search on the merit 0.5 |G|^2: full step first,
// quadratic interpolation on the first backtrack, cubic afterwards, with
// steps clamped to [0.1, 0.5] of the previous trial.
template <class ResidualFn>
LineSearchResult cubic_backtrack(ResidualFn&& G, const Vector& u,
                                 const Vector& direction, Scalar g0,
                                 Scalar slope0, const NewtonConfig& cfg) {
  if (!(slope0 < 0))
    throw std::invalid_argument("cubic_backtrack: direction is not a descent "
                                "direction (slope0 >= 0)");
  LineSearchResult out;
  const auto merit_at = [&](Scalar lam, Vector& g_out) -> Scalar {
    out.u_new = u + lam * direction;
    g_out = G(out.u_new);
    const Scalar m = 0.5 * g_out.squaredNorm();
    return std::isfinite(m) ? m : std::numeric_limits<Scalar>::infinity();
  };

  Scalar lambda = 1.0, lambda_prev = 0.0;
  Scalar merit = merit_at(lambda, out.g_new), merit_prev = 0.0;
  for (Index bt = 0; bt <= cfg.ls_max_backtracks; ++bt) {
    if (merit <= g0 + cfg.ls_alpha * lambda * slope0) {
      out.lambda = lambda;
      out.merit = merit;
      out.backtracks = bt;
      out.ok = true;
      return out;
    }
    if (bt == cfg.ls_max_backtracks) break;
    Scalar next;
    if (bt == 0 || !std::isfinite(merit)) {
      next = -slope0 / (2.0 * (merit - g0 - slope0));
      if (!std::isfinite(next)) next = 0.5 * lambda;
    } else {
      const Scalar r1 = merit - g0 - slope0 * lambda;
      const Scalar r2 = merit_prev - g0 - slope0 * lambda_prev;
      const Scalar den = lambda - lambda_prev;
      const Scalar a =
          (r1 / (lambda * lambda) - r2 / (lambda_prev * lambda_prev)) / den;
      const Scalar b = (-lambda_prev * r1 / (lambda * lambda) +
                        lambda * r2 / (lambda_prev * lambda_prev)) /
                       den;
      if (std::abs(a) < 1e-30) {
        next = -slope0 / (2.0 * b);
      } else {
        const Scalar disc = b * b - 3.0 * a * slope0;
        next = disc > 0 ? (-b + std::sqrt(disc)) / (3.0 * a) : 0.5 * lambda;
      }
      if (!std::isfinite(next)) next = 0.5 * lambda;
    }
    next = std::min(0.5 * lambda, std::max(0.1 * lambda, next));
    lambda_prev = lambda;
    merit_prev = merit;
    lambda = next;
    merit = merit_at(lambda, out.g_new);
    out.backtracks = bt + 1;
  }
  out.lambda = lambda;
  out.merit = merit;
  return out; // ok = false: exhausted backtracks
}

struct NewtonOutcome {
  Vector u;
  NewtonReport report;
};

// Inexact Newton with Eisenstat-Walker forcing on the inner solves.
// System requirements:
//   Vector residual(const Vector& u)            (may throw EllipticityError)
//   void   prepare_jacobian(const Vector& u)
//   Vector apply_jacobian(const Vector& v)
//   KrylovResult solve_linear(const Vector& rhs, Scalar rtol, Scalar atol)
template <class System>
NewtonOutcome newton_solve(System& sys, const Vector& u0,
                           const NewtonConfig& cfg) {
  NewtonOutcome out;
  out.u = u0;
  NewtonReport& rep = out.report;

  try {
    Vector G = sys.residual(out.u);
    Scalar res = G.norm();
    rep.residual_history.push_back(res);
    if (!std::isfinite(res)) {
      rep.failure = "non-finite initial residual";
      return out;
    }
    const Scalar stop_tol = std::max(cfg.atol, cfg.rtol * res);
    const Scalar lin_atol = 0.05 * stop_tol;
    Scalar eta = cfg.ew_eta0;
    Scalar prev_res = res;
    bool jacobian_ready = false;

    for (Index k = 0; k < cfg.max_iters; ++k) {
      if (res <= stop_tol) {
        rep.converged = true;
        return out;
      }
      if (k > 0) eta = ew_forcing(prev_res, res, eta, cfg);

      if (!jacobian_ready || !cfg.lag_jacobian) {
        sys.prepare_jacobian(out.u);
        jacobian_ready = true;
      }
      const KrylovResult lin = sys.solve_linear(-G, eta, lin_atol);
      rep.krylov_iters.push_back(lin.iterations);

      const Scalar slope = G.dot(sys.apply_jacobian(lin.x));
      if (!(slope < 0)) {
        rep.failure = "linear solve produced a non-descent direction";
        return out;
      }
      auto residual_fn = [&sys](const Vector& u) { return sys.residual(u); };
      const LineSearchResult ls = cubic_backtrack(
          residual_fn, out.u, lin.x, 0.5 * res * res, slope, cfg);
      if (!ls.ok) {
        // A negligible Newton direction means the state cannot move in
        // double precision: the residual sits at its representable floor
        // (about |J| ulp(u), far above atol for large sigma) and the merit
        // is roundoff. The iterate is the solution to available precision.
        if (lin.x.norm() <= 1e-12 * (1.0 + out.u.norm())) {
          rep.converged = true;
          return out;
        }
        rep.failure = "line search exhausted (last lambda " +
                      std::to_string(ls.lambda) + ")";
        return out;
      }
      out.u = ls.u_new;
      G = ls.g_new;
      prev_res = res;
      res = G.norm();
      if (!std::isfinite(res)) {
        rep.failure = "non-finite residual";
        return out;
      }
      ++rep.iters;
      rep.residual_history.push_back(res);
      rep.line_search_steps.push_back(ls.lambda);
    }
    rep.converged = res <= stop_tol;
    if (!rep.converged) rep.failure = "maximum Newton iterations reached";
  } catch (const EllipticityError& e) {
    rep.converged = false;
    rep.failure = e.what();
  } catch (const SolverBreakdown& e) {
    rep.converged = false;
    rep.failure = e.what();
  }
  return out;
}

} // namespace netform
