#pragma once

// The measurable face of the convergence analysis: closed-form step size
// thresholds and decrease rates, parameter validation, stationarity stopping
// times, empirical tail curves, and the per-iteration lemma audit.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ncstep/oracles.hpp"
#include "ncstep/problems.hpp"
#include "ncstep/solver.hpp"

namespace ncstep {
namespace theory {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// kappa_g' = 1 - 2(1-eta)(1-kappa_g) / (1 + kappa_g + (1-eta)(1-kappa_g)).
/// Effective relative gradient error once the early-termination threshold
/// filters out small estimates; always in [0, 1) on the admissible domain.
inline double kappa_g_prime(double eta, double kappa_g) {
  if (!(eta > 0.0 && eta < 1.0))
    throw std::domain_error("kappa_g_prime: eta must lie in (0, 1)");
  if (!(kappa_g >= 0.0 && kappa_g < 1.0))
    throw std::domain_error("kappa_g_prime: kappa_g must lie in [0, 1)");
  const double w = (1.0 - eta) * (1.0 - kappa_g);
  return 1.0 - 2.0 * w / (1.0 + kappa_g + w);
}

/// Step size below which an accurate, non-terminated descent step must
/// succeed: alpha_bar = 2 (1/(1+kappa_g') - c_d) / L_g.
inline double alpha_bar(double lipschitz_g, double c_d, double kappa_gp) {
  if (!(lipschitz_g > 0.0)) throw std::domain_error("alpha_bar: L_g must be > 0");
  return 2.0 * (1.0 / (1.0 + kappa_gp) - c_d) / lipschitz_g;
}

/// Curvature-step analogue: beta_bar = 3 (gamma - kappa_H - 2 c_p gamma) / (2 delta L_H).
inline double beta_bar(double lipschitz_h, double gamma, double kappa_H, double c_p,
                       double delta) {
  if (!(lipschitz_h > 0.0)) throw std::domain_error("beta_bar: L_H must be > 0");
  if (!(delta > 0.0)) throw std::domain_error("beta_bar: delta must be > 0");
  return 3.0 * (gamma - kappa_H - 2.0 * c_p * gamma) / (2.0 * delta * lipschitz_h);
}

/// Guaranteed decrease rates on accurate successful steps. The literature
/// carries two variants of the descent rate (with and without the c_d
/// factor); both are reported and the audit checks the weaker printed form
/// plus the c_d-scaled one.
inline double h_d(double alpha, double c_g, double epsbar_g) {
  return c_g * c_g * epsbar_g * epsbar_g * alpha;
}

inline double h_p(double beta, double c_p, double gamma, double delta, double c_H,
                  double epsbar_H, double epsbar_lambda) {
  const double m = std::max(epsbar_H, epsbar_lambda);
  return c_p * gamma * delta * delta * c_H * c_H * c_H * m * m * m * beta * beta;
}

/// Inputs that live only in the reporting layer: the empirical-frequency
/// targets and the subexponential slack used by the neighborhood floors.
struct TailInputs {
  double pbar_g = 1.0;
  double pbar_H = 1.0;
  double s = 0.0;
};

struct TheoryConstants {
  double kappa_g_prime = 0.0;
  double alpha_bar = 0.0;
  double beta_bar = 0.0;
  double h_d_at_alpha_bar = 0.0;
  double h_p_at_beta_bar = 0.0;
  double c_alpha_beta = 0.0;        // min{c_d abar c_g^2 ebar_g^2, c_p bbar^2 c_H^3 m^3}
  double c_alpha_beta_hform = 0.0;  // min{h_d(abar), h_p(bbar)}
  double c_tau = 0.0;
  double neighborhood_floor_g = 0.0;
  double neighborhood_floor_H = 0.0;
  double neighborhood_floor_lambda = 0.0;
  bool alpha_bar_feasible = false;
  bool beta_bar_feasible = false;
};

/// Accuracy-driven floors on the stationarity targets. Zero noise components
/// impose no floor; infeasible parameter combinations report +inf.
inline double floor_epsbar_g(const OracleConfig& o, const SolverParams& p) {
  if (o.eps_g == 0.0) return 0.0;
  const double den =
      std::min(p.eta * p.c_g * (1.0 - o.kappa_g), 1.0 - o.kappa_g - p.c_g);
  if (!(den > 0.0)) return kInf;
  return 2.0 * o.eps_g / den;
}

inline double floor_epsbar_H(const OracleConfig& o, const SolverParams& p) {
  if (o.eps_H == 0.0) return 0.0;
  const double den = p.delta * (p.gamma - o.kappa_H - 2.0 * p.c_p * p.gamma);
  if (!(den > 0.0) || !(p.c_H > 0.0)) return kInf;
  return o.eps_H / p.c_H * std::sqrt(2.0 / den);
}

inline double floor_epsbar_lambda(const OracleConfig& o, const SolverParams& p) {
  if (o.eps_lambda == 0.0) return 0.0;
  const double den = 1.0 - o.kappa_lambda - p.c_H;
  if (!(den > 0.0)) return kInf;
  return o.eps_lambda / den;
}

inline TheoryConstants compute_constants(const ProblemSpec& problem,
                                         const OracleConfig& ocfg,
                                         const SolverParams& params,
                                         const TailInputs& tails = {}) {
  TheoryConstants c;
  c.kappa_g_prime = kappa_g_prime(params.eta, ocfg.kappa_g);
  c.alpha_bar = alpha_bar(problem.lipschitz_g, params.c_d, c.kappa_g_prime);
  c.beta_bar = beta_bar(problem.lipschitz_h, params.gamma, ocfg.kappa_H, params.c_p,
                        params.delta);
  c.alpha_bar_feasible = c.alpha_bar > 0.0;
  c.beta_bar_feasible = c.beta_bar > 0.0;
  c.h_d_at_alpha_bar = h_d(c.alpha_bar, params.c_g, params.epsbar_g);
  c.h_p_at_beta_bar = h_p(c.beta_bar, params.c_p, params.gamma, params.delta,
                          params.c_H, params.epsbar_H, params.epsbar_lambda);
  const double m = std::max(params.epsbar_H, params.epsbar_lambda);
  c.c_alpha_beta =
      std::min(params.c_d * c.alpha_bar * params.c_g * params.c_g * params.epsbar_g *
                   params.epsbar_g,
               params.c_p * c.beta_bar * c.beta_bar * params.c_H * params.c_H *
                   params.c_H * m * m * m);
  c.c_alpha_beta_hform = std::min(
      c.h_d_at_alpha_bar,
      h_p(c.beta_bar, params.c_p, params.gamma, params.delta, params.c_H,
          params.epsbar_H, params.epsbar_lambda));
  // c_tau = max{log_tau(abar/alpha0), log_tau(bbar/beta0), 0}, kept as a real
  // number (diagnostic only).
  const double lt = std::log(params.tau);
  double ca = -kInf, cb = -kInf;
  if (c.alpha_bar > 0.0) ca = std::log(c.alpha_bar / params.alpha0) / lt;
  if (c.beta_bar > 0.0) cb = std::log(c.beta_bar / params.beta0) / lt;
  c.c_tau = std::max({ca, cb, 0.0});

  // Noise-floor components of the convergence neighborhood. eps_c covers the
  // bounded case (16 eps_f) and gains 32/a + 4s under subexponential noise.
  double eps_c = 16.0 * ocfg.eps_f;
  if (ocfg.zeroth_model == ZerothOrderModel::Subexponential)
    eps_c += 32.0 / ocfg.subexp_a + 4.0 * tails.s;
  const double c_gh = tails.pbar_g * tails.pbar_H + tails.pbar_g + tails.pbar_H - 2.0;
  double noise_g = 0.0, noise_HL = 0.0;
  if (eps_c > 0.0) {
    const double dg =
        c_gh * params.c_d * c.alpha_bar * params.c_g * params.c_g;
    const double dh = c_gh * params.c_p * c.beta_bar * c.beta_bar * params.c_H *
                      params.c_H * params.c_H;
    noise_g = dg > 0.0 ? std::sqrt(eps_c / dg) : kInf;
    noise_HL = dh > 0.0 ? std::cbrt(eps_c / dh) : kInf;
  }
  c.neighborhood_floor_g = std::max(noise_g, floor_epsbar_g(ocfg, params));
  c.neighborhood_floor_H = std::max(noise_HL, floor_epsbar_H(ocfg, params));
  c.neighborhood_floor_lambda = std::max(noise_HL, floor_epsbar_lambda(ocfg, params));
  return c;
}

struct ParamCheck {
  std::string name;
  bool pass = true;
  bool applicable = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ParamCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (c.applicable && !c.pass) return false;
    return true;
  }
  std::string to_string() const {
    std::ostringstream os;
    for (const auto& c : checks) {
      os << (c.applicable ? (c.pass ? "[ok]   " : "[WARN] ") : "[n/a]  ") << c.name;
      if (!c.detail.empty()) os << "  (" << c.detail << ")";
      os << '\n';
    }
    return os.str();
  }
};

/// Check every admissibility inequality of the analysis. Violations are
/// warnings, not errors: the experiments deliberately misspecify e_f, and
/// c_g = 0 disables early termination (the checks tied to it become
/// non-applicable).
inline ValidationReport validate_params(const SolverParams& p, const OracleConfig& o) {
  ValidationReport r;
  auto push = [&r](const std::string& name, bool pass, bool applicable,
                   const std::string& detail) {
    r.checks.push_back({name, pass, applicable, detail});
  };
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };

  const double cd_upper =
      0.5 + (1.0 - p.eta) * (1.0 - o.kappa_g) / (2.0 * (1.0 + o.kappa_g));
  push("0 < c_d < 1/2 + (1-eta)(1-kappa_g)/(2(1+kappa_g))",
       p.c_d > 0.0 && p.c_d < cd_upper, true,
       "c_d=" + num(p.c_d) + " bound=" + num(cd_upper));
  push("0 < eta < 1", p.eta > 0.0 && p.eta < 1.0, true, "eta=" + num(p.eta));
  const bool cg_applicable = p.c_g > 0.0;
  push("0 < c_g < 1 - kappa_g", p.c_g > 0.0 && p.c_g < 1.0 - o.kappa_g, cg_applicable,
       cg_applicable ? "c_g=" + num(p.c_g)
                     : "early termination disabled (c_g = 0)");
  const double cp_upper = (p.gamma - o.kappa_H) / (2.0 * p.gamma);
  push("0 < c_p < (gamma - kappa_H)/(2 gamma)", p.c_p > 0.0 && p.c_p < cp_upper, true,
       "c_p=" + num(p.c_p) + " bound=" + num(cp_upper));
  push("0 <= kappa_H < gamma <= 1",
       o.kappa_H >= 0.0 && o.kappa_H < p.gamma && p.gamma <= 1.0, true,
       "kappa_H=" + num(o.kappa_H) + " gamma=" + num(p.gamma));
  push("0 < c_H < 1 - kappa_lambda", p.c_H > 0.0 && p.c_H < 1.0 - o.kappa_lambda,
       p.c_H > 0.0, p.c_H > 0.0 ? "c_H=" + num(p.c_H)
                                : "curvature termination threshold disabled");

  if (o.zeroth_model == ZerothOrderModel::Bounded) {
    push("e_f >= 2 eps_f", p.e_f >= 2.0 * o.eps_f, true,
         "e_f=" + num(p.e_f) + " 2eps_f=" + num(2.0 * o.eps_f));
  } else {
    const double bound = 2.0 * o.eps_f + 5.0 / o.subexp_a;
    push("e_f >= 2 eps_f + 5/a", p.e_f >= bound, true,
         "e_f=" + num(p.e_f) + " bound=" + num(bound));
  }

  const double fg = floor_epsbar_g(o, p);
  push("epsbar_g >= 2 eps_g / min{eta c_g (1-kappa_g), 1-kappa_g-c_g}",
       p.epsbar_g >= fg, o.eps_g > 0.0 && cg_applicable,
       "epsbar_g=" + num(p.epsbar_g) + " floor=" + num(fg));
  const double fH = floor_epsbar_H(o, p);
  push("epsbar_H >= eps_H/c_H sqrt(2/(delta(gamma-kappa_H-2 c_p gamma)))",
       p.epsbar_H >= fH, o.eps_H > 0.0, "epsbar_H=" + num(p.epsbar_H) + " floor=" + num(fH));
  const double fL = floor_epsbar_lambda(o, p);
  push("epsbar_lambda >= eps_lambda/(1-kappa_lambda-c_H)", p.epsbar_lambda >= fL,
       o.eps_lambda > 0.0,
       "epsbar_lambda=" + num(p.epsbar_lambda) + " floor=" + num(fL));
  return r;
}

/// First record index satisfying the second-order stationarity test, absent
/// if never satisfied. Uses the true quantities carried by the records.
inline std::optional<long> stopping_time(const std::vector<IterationRecord>& records,
                                         double epsbar_g, double epsbar_H,
                                         double epsbar_lambda) {
  const double lam_floor = -std::max(epsbar_lambda, epsbar_H);
  for (const auto& rec : records) {
    if (rec.grad_true_norm <= epsbar_g && rec.lambda_true >= lam_floor)
      return rec.k;
  }
  return std::nullopt;
}

struct TailPoint {
  long t = 0;
  double fraction_exceeding = 0.0;  // empirical P[N > t]
  double std_error = 0.0;
};

/// Empirical survival curve of the stopping time across runs. Runs that never
/// reach stationarity count as exceeding every t.
inline std::vector<TailPoint> tail_estimate(const std::vector<RunResult>& results,
                                            const std::vector<long>& t_grid) {
  if (results.size() < 2)
    throw std::invalid_argument("tail_estimate: need at least 2 runs");
  std::vector<TailPoint> curve;
  curve.reserve(t_grid.size());
  const double n = static_cast<double>(results.size());
  for (long t : t_grid) {
    long exceed = 0;
    for (const auto& r : results)
      if (!r.stopping_time.has_value() || *r.stopping_time > t) ++exceed;
    TailPoint pt;
    pt.t = t;
    pt.fraction_exceeding = static_cast<double>(exceed) / n;
    pt.std_error =
        std::sqrt(pt.fraction_exceeding * (1.0 - pt.fraction_exceeding) / n);
    curve.push_back(pt);
  }
  return curve;
}

/// Violation counts for the five per-iteration lemma properties, evaluated
/// over all iterations before each run's stopping time, plus the empirical
/// accuracy frequencies the submartingale conditions are compared against.
struct AuditCounts {
  long small_step_descent_failures = 0;   // (i)   i_g & omega_g & a_k <= abar & !theta_g
  long small_step_nc_failures = 0;        // (ii)  i_H & omega_H & b_k <= bbar & !theta_H
  long descent_decrease_violations = 0;   // (iii) printed form, h_d without c_d
  long nc_decrease_violations = 0;        // (iv)  printed form
  long both_skipped_before_stop = 0;      // (v)   i_g & !omega_g & i_H & !omega_H
  long descent_decrease_violations_cd = 0;  // (iii) with the c_d-scaled rate
  long half_step_safety_violations = 0;     // accepted half steps vs the 2e_f bound
  long iterations_audited = 0;
  long if_true = 0, if_total = 0;
  long ihatf_true = 0, ihatf_total = 0;
  long ig_true = 0, ig_total = 0;
  long ih_true = 0, ih_total = 0;

  long total_violations() const {
    return small_step_descent_failures + small_step_nc_failures +
           descent_decrease_violations + nc_decrease_violations +
           both_skipped_before_stop;
  }
  void merge(const AuditCounts& o) {
    small_step_descent_failures += o.small_step_descent_failures;
    small_step_nc_failures += o.small_step_nc_failures;
    descent_decrease_violations += o.descent_decrease_violations;
    nc_decrease_violations += o.nc_decrease_violations;
    both_skipped_before_stop += o.both_skipped_before_stop;
    descent_decrease_violations_cd += o.descent_decrease_violations_cd;
    half_step_safety_violations += o.half_step_safety_violations;
    iterations_audited += o.iterations_audited;
    if_true += o.if_true;
    if_total += o.if_total;
    ihatf_true += o.ihatf_true;
    ihatf_total += o.ihatf_total;
    ig_true += o.ig_true;
    ig_total += o.ig_total;
    ih_true += o.ih_true;
    ih_total += o.ih_total;
  }
};

inline AuditCounts lemma_audit_run(const RunResult& run, const TheoryConstants& tc,
                                   const SolverParams& params) {
  // Tiny relative slack so exact-arithmetic inequalities are not flagged on
  // floating-point roundoff.
  auto leq = [](double lhs, double rhs) {
    return lhs <= rhs + 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  };
  AuditCounts a;
  const long n = static_cast<long>(run.records.size());
  const long stop = run.stopping_time.value_or(n);
  for (long idx = 0; idx < std::min(stop, n); ++idx) {
    const IterationRecord& rec = run.records[static_cast<size_t>(idx)];
    ++a.iterations_audited;
    ++a.ig_total;
    a.ig_true += rec.i_g ? 1 : 0;
    ++a.ih_total;
    a.ih_true += rec.i_H ? 1 : 0;
    if (rec.omega_g) {
      ++a.if_total;
      a.if_true += rec.i_f ? 1 : 0;
    }
    if (rec.omega_H) {
      ++a.ihatf_total;
      a.ihatf_true += rec.ihat_f ? 1 : 0;
    }

    if (rec.i_g && rec.omega_g && rec.alpha_k <= tc.alpha_bar && !rec.theta_g)
      ++a.small_step_descent_failures;
    if (rec.i_H && rec.omega_H && rec.beta_k <= tc.beta_bar && !rec.theta_H)
      ++a.small_step_nc_failures;

    const double f_next = idx + 1 < n
                              ? run.records[static_cast<size_t>(idx) + 1].f_true
                              : run.final_f_true;
    if (rec.i_g && rec.omega_g && rec.theta_g) {
      const double hd = h_d(rec.alpha_k, params.c_g, params.epsbar_g);
      if (!leq(f_next, rec.f_true - hd + 4.0 * params.e_f))
        ++a.descent_decrease_violations;
      if (!leq(f_next, rec.f_true - params.c_d * hd + 4.0 * params.e_f))
        ++a.descent_decrease_violations_cd;
    }
    if (rec.i_H && rec.omega_H && rec.theta_H) {
      const double hp = h_p(rec.beta_k, params.c_p, params.gamma, params.delta,
                            params.c_H, params.epsbar_H, params.epsbar_lambda);
      if (!leq(f_next, rec.f_true - hp + 4.0 * params.e_f))
        ++a.nc_decrease_violations;
    }
    // Half-step safety bounds: under bounded noise each accepted half step
    // raises f by at most 2e_f, accuracy flags notwithstanding.
    if (rec.theta_g && !leq(rec.fhat_true, rec.f_true + 2.0 * params.e_f))
      ++a.half_step_safety_violations;
    if (rec.theta_H && !leq(f_next, rec.fhat_true + 2.0 * params.e_f))
      ++a.half_step_safety_violations;
    if (rec.i_g && !rec.omega_g && rec.i_H && !rec.omega_H)
      ++a.both_skipped_before_stop;
  }
  return a;
}

inline AuditCounts lemma_audit(const std::vector<RunResult>& results,
                               const TheoryConstants& tc, const SolverParams& params) {
  AuditCounts total;
  for (const auto& run : results) total.merge(lemma_audit_run(run, tc, params));
  return total;
}

}  // namespace theory
}  // namespace ncstep
