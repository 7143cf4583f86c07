#pragma once

// Two-step step-search solvers driven by the oracle simulators.
//
//   run_ss2_nc_g   descent + negative curvature steps, separate step size
//                  sequences alpha_k (descent) and beta_k (curvature)
//   run_ss_g       descent steps only (first-order baseline)
//   run_ss_nc_cg   capped-CG subsolver choosing a Newton-like or negative
//                  curvature step per iteration, one shared step size alpha_k
//
// Every iteration appends a fully instrumented record: true quantities and
// accuracy indicators are computed from oracle truths but never read by the
// control flow. Step size updates follow the flag-determined branch exactly,
// so traces can be replayed from (alpha0, beta0, tau) and the flags alone.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ncstep/directions.hpp"
#include "ncstep/oracles.hpp"
#include "ncstep/problems.hpp"
#include "ncstep/rng.hpp"

namespace ncstep {

struct SolverParams {
  double alpha0 = 1.0;
  double beta0 = 1.0;
  double tau = 0.5;
  double c_d = 0.2;
  double c_p = 0.2;
  double c_g = 0.0;
  double c_H = 0.0;
  double e_f = 0.0;
  double epsbar_g = 0.0;
  double epsbar_H = 0.0;
  double epsbar_lambda = 0.0;
  double gamma = 1.0;
  double delta = 1.0;
  double eta = 0.5;          // theory-side parameter, not read by the loop
  double eps_cap = 0.1;      // capped-CG detection threshold (SS-NC-CG only)
  long max_iters = 1000;
  long max_fevals = std::numeric_limits<long>::max();

  void validate() const {
    if (!(alpha0 > 0.0) || !(beta0 > 0.0))
      throw std::invalid_argument("solver params: alpha0, beta0 must be > 0");
    if (!(tau > 0.0 && tau < 1.0))
      throw std::invalid_argument("solver params: tau must lie in (0, 1)");
    if (!(c_d > 0.0 && c_d < 1.0) || !(c_p > 0.0 && c_p < 1.0))
      throw std::invalid_argument("solver params: c_d, c_p must lie in (0, 1)");
    if (c_g < 0.0 || c_H < 0.0 || e_f < 0.0)
      throw std::invalid_argument("solver params: c_g, c_H, e_f must be >= 0");
    if (epsbar_g < 0.0 || epsbar_H < 0.0 || epsbar_lambda < 0.0)
      throw std::invalid_argument("solver params: stationarity targets must be >= 0");
    if (!(gamma > 0.0 && gamma <= 1.0))
      throw std::invalid_argument("solver params: gamma must lie in (0, 1]");
    if (!(delta > 0.0)) throw std::invalid_argument("solver params: delta must be > 0");
    if (!(eta > 0.0 && eta < 1.0))
      throw std::invalid_argument("solver params: eta must lie in (0, 1)");
    if (!(eps_cap > 0.0)) throw std::invalid_argument("solver params: eps_cap must be > 0");
    if (max_iters < 1 || max_fevals < 1)
      throw std::invalid_argument("solver params: budgets must be >= 1");
  }
};

struct IterationRecord {
  long k = 0;
  long fevals_so_far = 0;          // cumulative, after this iteration
  Eigen::VectorXd x;               // iterate at the start of iteration k
  double f_true = 0.0;             // f(x_k)
  double fhat_true = 0.0;          // f(xhat_k)
  double F_est = 0.0;              // F_k when drawn, NaN otherwise
  double grad_true_norm = 0.0;     // ||grad f(x_k)||
  double g_est_norm = 0.0;
  double lambda_true = 0.0;        // lambda_min(hess f(x_k))
  double lambda_hat_true = 0.0;    // lambda_min(hess f(xhat_k))
  double lambda_est = 0.0;         // lambda_min(H_k), NaN when no Hessian drawn
  double alpha_k = 0.0;
  double beta_k = 0.0;
  double alpha_next = 0.0;
  double beta_next = 0.0;
  bool omega_g = false;            // descent step attempted
  bool omega_H = false;            // negative curvature step attempted
  bool theta_g = false;            // descent step successful
  bool theta_H = false;            // negative curvature step successful
  bool i_f = true;                 // E_k + E_k^+ <= e_f (vacuous when not drawn)
  bool i_g = true;                 // realized gradient accuracy event
  bool i_g_draw = true;            // which branch the gradient sampler took
  bool ihat_f = true;              // Ehat + max(Ehat^+, Ehat^-) <= e_f
  bool i_H = true;                 // Hessian accuracy event, eps_H^2 reading
  bool i_H_lin = true;             // same event with eps_H in place of eps_H^2
  int sign_choice = 0;             // +1 / -1 for accepted curvature steps, else 0
};

enum class RunStatus { HitStoppingTime, BudgetExhausted, Diverged };

struct RunResult {
  std::vector<IterationRecord> records;
  std::optional<long> stopping_time;
  RunStatus status = RunStatus::BudgetExhausted;
  long feval_count = 0;
  long geval_count = 0;
  long heval_count = 0;
  Eigen::VectorXd final_x;
  double final_f_true = 0.0;
};

namespace detail {

constexpr double kDivergenceRadius = 1e8;

inline double nan_d() { return std::numeric_limits<double>::quiet_NaN(); }

struct RunContext {
  const ProblemSpec& problem;
  const OracleConfig& ocfg;
  const SolverParams& params;
  RngStream f_rng;
  RngStream g_rng;
  RngStream h_rng;
  RunResult result;

  RunContext(const ProblemSpec& prob, const OracleConfig& oc, const SolverParams& sp,
             const RngStream& base)
      : problem(prob),
        ocfg(oc),
        params(sp),
        f_rng(base.substream(kRngTagFunction)),
        g_rng(base.substream(kRngTagGradient)),
        h_rng(base.substream(kRngTagHessian)) {}

  FunctionSample draw_f(const Eigen::VectorXd& at) {
    ++result.feval_count;
    return sample_f(problem, at, ocfg, f_rng);
  }

  bool stationary(double grad_norm, double lambda) const {
    return grad_norm <= params.epsbar_g &&
           lambda >= -std::max(params.epsbar_lambda, params.epsbar_H);
  }
};

// Descent phase: draw a gradient estimate, early-terminate on a small norm,
// otherwise run the relaxed Armijo test. Returns the interim iterate xhat.
struct DescentPhase {
  Eigen::VectorXd xhat;
  double alpha_next = 0.0;
  bool moved = false;
};

inline DescentPhase descent_phase(RunContext& ctx, const Eigen::VectorXd& x,
                                  double alpha, IterationRecord& rec) {
  const SolverParams& p = ctx.params;
  DescentPhase out;
  GradientSample gs = sample_g(ctx.problem, x, ctx.ocfg, ctx.g_rng);
  ++ctx.result.geval_count;
  rec.g_est_norm = gs.estimate.norm();
  rec.i_g = gs.accurate;
  rec.i_g_draw = gs.bernoulli_accurate;
  rec.F_est = nan_d();
  if (rec.g_est_norm <= p.c_g * p.epsbar_g) {
    // estimated gradient too small to promise progress; skip the step
    out.xhat = x;
    out.alpha_next = alpha;
    return out;
  }
  rec.omega_g = true;
  const Eigen::VectorXd d = -gs.estimate;
  const FunctionSample f0 = ctx.draw_f(x);
  const Eigen::VectorXd trial = x + alpha * d;
  const FunctionSample f1 = ctx.draw_f(trial);
  rec.F_est = f0.estimate;
  rec.i_f = (f0.error + f1.error) <= p.e_f;
  const double decrease_term = p.c_d * alpha * d.dot(gs.estimate);  // = -c_d a ||g||^2
  if (f1.estimate <= f0.estimate + decrease_term + p.e_f) {
    rec.theta_g = true;
    out.xhat = trial;
    out.alpha_next = alpha / p.tau;
    out.moved = true;
  } else {
    out.xhat = x;
    out.alpha_next = p.tau * alpha;
  }
  return out;
}

// Negative curvature phase at xhat with step size beta: draw a Hessian
// estimate, early-terminate unless the spectrum dips below the threshold,
// otherwise test both signs of the curvature direction. Writes the next
// iterate into x_next.
inline double nc_phase(RunContext& ctx, const Eigen::VectorXd& xhat, double beta,
                       IterationRecord& rec, Eigen::VectorXd& x_next) {
  const SolverParams& p = ctx.params;
  HessianSample hs = sample_H(ctx.problem, xhat, ctx.ocfg, ctx.h_rng);
  ++ctx.result.heval_count;
  const EigenResult eig = min_eigenpair(hs.estimate);
  rec.lambda_est = eig.lambda_min;
  rec.lambda_hat_true = min_eigenpair(hs.true_hess).lambda_min;
  const bool lambda_acc =
      std::abs(rec.lambda_hat_true - eig.lambda_min) <=
      ctx.ocfg.eps_lambda + ctx.ocfg.kappa_lambda * std::abs(rec.lambda_hat_true);
  const double threshold = p.c_H * std::max(p.epsbar_H, p.epsbar_lambda);
  if (eig.lambda_min >= -threshold) {
    rec.i_H = lambda_acc;      // directional part vacuous without q_k
    rec.i_H_lin = lambda_acc;
    x_next = xhat;
    return beta;
  }
  rec.omega_H = true;
  const NCDirection nc = nc_direction(hs.estimate, eig, p.gamma, p.delta);
  const double dir_err = ((hs.true_hess - hs.estimate) * nc.q).norm();
  const double rel_term = ctx.ocfg.kappa_H * std::abs(eig.lambda_min) * nc.q.norm();
  rec.i_H = lambda_acc && dir_err <= ctx.ocfg.eps_H * ctx.ocfg.eps_H + rel_term;
  rec.i_H_lin = lambda_acc && dir_err <= ctx.ocfg.eps_H + rel_term;

  const FunctionSample fh = ctx.draw_f(xhat);
  const FunctionSample fp = ctx.draw_f(xhat + beta * nc.q);
  const FunctionSample fm = ctx.draw_f(xhat - beta * nc.q);
  rec.ihat_f = (fh.error + std::max(fp.error, fm.error)) <= p.e_f;
  const double best = std::min(fp.estimate, fm.estimate);
  if (best <= fh.estimate + p.c_p * beta * beta * nc.curvature + p.e_f) {
    rec.theta_H = true;
    rec.sign_choice = fp.estimate <= fm.estimate ? 1 : -1;  // tie favors +q
    x_next = xhat + beta * (rec.sign_choice * nc.q);
    return beta / p.tau;
  }
  x_next = xhat;
  return p.tau * beta;
}

// Shared prologue: true quantities at x_k plus divergence screen.
inline bool open_record(RunContext& ctx, const Eigen::VectorXd& x, long k,
                        double alpha, double beta, IterationRecord& rec) {
  rec.k = k;
  rec.x = x;
  rec.alpha_k = alpha;
  rec.beta_k = beta;
  if (!x.allFinite() || x.norm() > kDivergenceRadius) return false;
  rec.f_true = ctx.problem.eval_f(x);
  if (!std::isfinite(rec.f_true)) return false;
  rec.grad_true_norm = ctx.problem.eval_grad(x).norm();
  rec.lambda_true = min_eigenpair(ctx.problem.eval_hess(x)).lambda_min;
  return true;
}

inline void finish_run(RunContext& ctx, const Eigen::VectorXd& x) {
  ctx.result.final_x = x;
  ctx.result.final_f_true =
      x.allFinite() ? ctx.problem.eval_f(x) : nan_d();
}

}  // namespace detail

/// Two-step method: a step-search descent step followed by a step-search
/// negative curvature step whenever the estimated spectrum warrants one.
inline RunResult run_ss2_nc_g(const ProblemSpec& problem, const OracleConfig& ocfg,
                              const SolverParams& params, const Eigen::VectorXd& x0,
                              const RngStream& rng) {
  ocfg.validate();
  params.validate();
  if (x0.size() != problem.dim)
    throw std::invalid_argument("run_ss2_nc_g: x0 dimension mismatch");
  detail::RunContext ctx(problem, ocfg, params, rng);
  Eigen::VectorXd x = x0;
  double alpha = params.alpha0;
  double beta = params.beta0;
  for (long k = 0; k < params.max_iters && ctx.result.feval_count < params.max_fevals;
       ++k) {
    IterationRecord rec;
    if (!detail::open_record(ctx, x, k, alpha, beta, rec)) {
      ctx.result.status = RunStatus::Diverged;
      detail::finish_run(ctx, x);
      return ctx.result;
    }
    const detail::DescentPhase dp = detail::descent_phase(ctx, x, alpha, rec);
    rec.fhat_true = dp.moved ? problem.eval_f(dp.xhat) : rec.f_true;
    Eigen::VectorXd x_next;
    const double beta_next = detail::nc_phase(ctx, dp.xhat, beta, rec, x_next);
    rec.alpha_next = dp.alpha_next;
    rec.beta_next = beta_next;
    rec.fevals_so_far = ctx.result.feval_count;
    const bool stop = ctx.stationary(rec.grad_true_norm, rec.lambda_true);
    ctx.result.records.push_back(std::move(rec));
    x = std::move(x_next);
    alpha = dp.alpha_next;
    beta = beta_next;
    if (stop) {
      ctx.result.stopping_time = k;
      ctx.result.status = RunStatus::HitStoppingTime;
      break;
    }
  }
  detail::finish_run(ctx, x);
  return ctx.result;
}

/// First-order baseline: the descent phase alone. The true minimum Hessian
/// eigenvalue is still recorded each iteration (instrumentation only, no
/// oracle cost).
inline RunResult run_ss_g(const ProblemSpec& problem, const OracleConfig& ocfg,
                          const SolverParams& params, const Eigen::VectorXd& x0,
                          const RngStream& rng) {
  ocfg.validate();
  params.validate();
  if (x0.size() != problem.dim)
    throw std::invalid_argument("run_ss_g: x0 dimension mismatch");
  detail::RunContext ctx(problem, ocfg, params, rng);
  Eigen::VectorXd x = x0;
  double alpha = params.alpha0;
  for (long k = 0; k < params.max_iters && ctx.result.feval_count < params.max_fevals;
       ++k) {
    IterationRecord rec;
    if (!detail::open_record(ctx, x, k, alpha, params.beta0, rec)) {
      ctx.result.status = RunStatus::Diverged;
      detail::finish_run(ctx, x);
      return ctx.result;
    }
    const detail::DescentPhase dp = detail::descent_phase(ctx, x, alpha, rec);
    rec.fhat_true = dp.moved ? problem.eval_f(dp.xhat) : rec.f_true;
    rec.lambda_hat_true =
        dp.moved ? min_eigenpair(problem.eval_hess(dp.xhat)).lambda_min
                 : rec.lambda_true;
    rec.lambda_est = detail::nan_d();
    rec.alpha_next = dp.alpha_next;
    rec.beta_next = params.beta0;
    rec.fevals_so_far = ctx.result.feval_count;
    const bool stop = ctx.stationary(rec.grad_true_norm, rec.lambda_true);
    ctx.result.records.push_back(std::move(rec));
    x = dp.xhat;
    alpha = dp.alpha_next;
    if (stop) {
      ctx.result.stopping_time = k;
      ctx.result.status = RunStatus::HitStoppingTime;
      break;
    }
  }
  detail::finish_run(ctx, x);
  return ctx.result;
}

/// Capped-CG variant: one step per iteration, Newton-like when the subsolver
/// solves the shifted system, negative curvature when it certifies one, with
/// a single shared step size sequence.
inline RunResult run_ss_nc_cg(const ProblemSpec& problem, const OracleConfig& ocfg,
                              const SolverParams& params, const Eigen::VectorXd& x0,
                              const RngStream& rng) {
  ocfg.validate();
  params.validate();
  if (x0.size() != problem.dim)
    throw std::invalid_argument("run_ss_nc_cg: x0 dimension mismatch");
  detail::RunContext ctx(problem, ocfg, params, rng);
  Eigen::VectorXd x = x0;
  double alpha = params.alpha0;
  const int cg_iters = static_cast<int>(2 * problem.dim);
  for (long k = 0; k < params.max_iters && ctx.result.feval_count < params.max_fevals;
       ++k) {
    IterationRecord rec;
    if (!detail::open_record(ctx, x, k, alpha, alpha, rec)) {
      ctx.result.status = RunStatus::Diverged;
      detail::finish_run(ctx, x);
      return ctx.result;
    }
    GradientSample gs = sample_g(problem, x, ocfg, ctx.g_rng);
    ++ctx.result.geval_count;
    rec.g_est_norm = gs.estimate.norm();
    rec.i_g = gs.accurate;
    rec.i_g_draw = gs.bernoulli_accurate;
    HessianSample hs = sample_H(problem, x, ocfg, ctx.h_rng);
    ++ctx.result.heval_count;
    rec.lambda_est = min_eigenpair(hs.estimate).lambda_min;
    rec.lambda_hat_true = rec.lambda_true;  // single phase, xhat = x
    rec.fhat_true = rec.f_true;
    rec.F_est = detail::nan_d();
    const bool lambda_acc =
        std::abs(rec.lambda_hat_true - rec.lambda_est) <=
        ocfg.eps_lambda + ocfg.kappa_lambda * std::abs(rec.lambda_hat_true);
    rec.i_H = lambda_acc;
    rec.i_H_lin = lambda_acc;

    const CGOutcome cg = capped_cg(hs.estimate, gs.estimate, params.eps_cap, cg_iters);
    Eigen::VectorXd x_next = x;
    double alpha_next = alpha;
    if (cg.kind == CGStepKind::NewtonLike) {
      if (cg.direction.squaredNorm() > 0.0) {
        rec.omega_g = true;
        const FunctionSample f0 = ctx.draw_f(x);
        const Eigen::VectorXd trial = x + alpha * cg.direction;
        const FunctionSample f1 = ctx.draw_f(trial);
        rec.F_est = f0.estimate;
        rec.i_f = (f0.error + f1.error) <= params.e_f;
        const double decrease = params.c_d * alpha * cg.direction.dot(gs.estimate);
        if (f1.estimate <= f0.estimate + decrease + params.e_f) {
          rec.theta_g = true;
          x_next = trial;
          alpha_next = alpha / params.tau;
        } else {
          alpha_next = params.tau * alpha;
        }
      }
      // zero direction (g = 0, no curvature certificate): nothing to test
    } else {
      rec.omega_H = true;
      const double pnorm2 = cg.direction.squaredNorm();
      const double curv_est = cg.direction.dot(hs.estimate * cg.direction) / pnorm2;
      const Eigen::VectorXd q =
          params.delta * std::abs(curv_est) * cg.direction / std::sqrt(pnorm2);
      const double qhq = q.dot(hs.estimate * q);
      const double dir_err = ((hs.true_hess - hs.estimate) * q).norm();
      const double rel_term = ocfg.kappa_H * std::abs(rec.lambda_est) * q.norm();
      rec.i_H = lambda_acc && dir_err <= ocfg.eps_H * ocfg.eps_H + rel_term;
      rec.i_H_lin = lambda_acc && dir_err <= ocfg.eps_H + rel_term;
      const FunctionSample fh = ctx.draw_f(x);
      const FunctionSample fp = ctx.draw_f(x + alpha * q);
      const FunctionSample fm = ctx.draw_f(x - alpha * q);
      rec.F_est = fh.estimate;
      rec.ihat_f = (fh.error + std::max(fp.error, fm.error)) <= params.e_f;
      const double best = std::min(fp.estimate, fm.estimate);
      if (best <= fh.estimate + params.c_p * alpha * alpha * qhq + params.e_f) {
        rec.theta_H = true;
        rec.sign_choice = fp.estimate <= fm.estimate ? 1 : -1;
        x_next = x + alpha * (rec.sign_choice * q);
        alpha_next = alpha / params.tau;
      } else {
        alpha_next = params.tau * alpha;
      }
    }
    rec.alpha_next = alpha_next;
    rec.beta_next = alpha_next;  // shared sequence
    rec.fevals_so_far = ctx.result.feval_count;
    const bool stop = ctx.stationary(rec.grad_true_norm, rec.lambda_true);
    ctx.result.records.push_back(std::move(rec));
    x = std::move(x_next);
    alpha = alpha_next;
    if (stop) {
      ctx.result.stopping_time = k;
      ctx.result.status = RunStatus::HitStoppingTime;
      break;
    }
  }
  detail::finish_run(ctx, x);
  return ctx.result;
}

}  // namespace ncstep
