#pragma once

// Probabilistic oracle simulators.
//
// Each sampler perturbs the exact quantity so that a stated accuracy
// inequality holds either always (bounded / p = 1) or with the configured
// probability. Alongside every estimate we return the exact quantity and the
// realized error so the harness can audit accuracy events after the fact;
// the solver's control flow never sees these truths.
//
// Noise constructions:
//   function  (bounded):        F = f(x) + eps_f * U(-1,1)
//   function  (subexponential): F = f(x) + sign * (eps_f + Exp(a)), so the
//                               tail P[|err| >= s] = exp(-a (s - eps_f))
//                               holds with equality for s > eps_f
//   gradient:  g = grad + rho * u, u uniform on the unit sphere and
//              rho = r_max * U^(1/n) with r_max = eps_g + kappa_g ||grad||,
//              i.e. uniform in the accuracy ball
//   Hessian:   H = hess + rho * u with u a symmetrized Gaussian matrix
//              normalized in spectral norm and rho = eps_H * U^(1/n^2)
//
// Inaccurate draws (probability 1 - p_g, 1 - p_H) reuse the same directional
// construction scaled by failure_scale > 1, which lands outside the accuracy
// ball while keeping magnitudes finite.

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "ncstep/problems.hpp"
#include "ncstep/rng.hpp"

namespace ncstep {

enum class ZerothOrderModel { Bounded, Subexponential };

struct OracleConfig {
  ZerothOrderModel zeroth_model = ZerothOrderModel::Bounded;
  double eps_f = 0.0;
  double subexp_a = 1.0;   // tail rate, used only by the subexponential model
  double p_g = 1.0;
  double eps_g = 0.0;
  double kappa_g = 0.0;
  double p_H = 1.0;
  double eps_H = 0.0;
  double kappa_H = 0.0;
  double eps_lambda = 0.0;
  double kappa_lambda = 0.0;
  double failure_scale = 10.0;

  void validate() const {
    if (eps_f < 0 || eps_g < 0 || kappa_g < 0 || eps_H < 0 || kappa_H < 0 ||
        eps_lambda < 0 || kappa_lambda < 0)
      throw std::invalid_argument("oracle config: eps/kappa fields must be >= 0");
    if (!(p_g > 0.5 && p_g <= 1.0))
      throw std::invalid_argument("oracle config: p_g must lie in (1/2, 1]");
    if (!(p_H > 0.5 && p_H <= 1.0))
      throw std::invalid_argument("oracle config: p_H must lie in (1/2, 1]");
    if (zeroth_model == ZerothOrderModel::Subexponential && !(subexp_a > 0.0))
      throw std::invalid_argument("oracle config: subexponential model needs a > 0");
    if (!(failure_scale > 1.0))
      throw std::invalid_argument("oracle config: failure_scale must be > 1");
  }
};

// Substream tags, one per oracle kind.
inline constexpr std::uint64_t kRngTagFunction = 0;
inline constexpr std::uint64_t kRngTagGradient = 1;
inline constexpr std::uint64_t kRngTagHessian = 2;

struct FunctionSample {
  double estimate = 0.0;
  double true_value = 0.0;
  double error = 0.0;           // |estimate - true_value|
  bool within_eps_f = false;    // error <= eps_f (always true for bounded)
};

struct GradientSample {
  Eigen::VectorXd estimate;
  Eigen::VectorXd true_grad;
  double error_norm = 0.0;
  bool accurate = false;        // realized ||g - grad|| <= eps_g + kappa_g ||grad||
  bool bernoulli_accurate = false;  // which branch the sampler took
};

struct HessianSample {
  Eigen::MatrixXd estimate;     // exactly symmetric
  Eigen::MatrixXd true_hess;
  double spectral_error = 0.0;  // ||estimate - true_hess||_2, exact by construction
  bool bernoulli_accurate = false;
  // The two-part accuracy event references the eventual negative curvature
  // direction, so it is evaluated later by the solver once q_k exists.
};

inline FunctionSample sample_f(const ProblemSpec& problem, const Eigen::VectorXd& x,
                               const OracleConfig& cfg, RngStream& rng) {
  if (!x.allFinite()) throw std::invalid_argument("sample_f: non-finite point");
  FunctionSample s;
  s.true_value = problem.eval_f(x);
  if (cfg.zeroth_model == ZerothOrderModel::Bounded) {
    s.estimate = cfg.eps_f == 0.0 ? s.true_value
                                  : s.true_value + cfg.eps_f * rng.uniform_pm1();
  } else {
    const double sign = rng.uniform_sign();
    const double magnitude = cfg.eps_f + rng.exponential(cfg.subexp_a);
    s.estimate = s.true_value + sign * magnitude;
  }
  s.error = std::abs(s.estimate - s.true_value);
  s.within_eps_f = s.error <= cfg.eps_f;
  return s;
}

inline GradientSample sample_g(const ProblemSpec& problem, const Eigen::VectorXd& x,
                               const OracleConfig& cfg, RngStream& rng) {
  if (!x.allFinite()) throw std::invalid_argument("sample_g: non-finite point");
  GradientSample s;
  s.true_grad = problem.eval_grad(x);
  const double r_max = cfg.eps_g + cfg.kappa_g * s.true_grad.norm();
  if (r_max == 0.0) {
    s.estimate = s.true_grad;
    s.accurate = true;
    s.bernoulli_accurate = true;
    return s;
  }
  s.bernoulli_accurate = rng.u01() < cfg.p_g;
  const Eigen::VectorXd u = rng.unit_sphere(x.size());
  if (s.bernoulli_accurate) {
    const double rho =
        r_max * std::pow(rng.u01(), 1.0 / static_cast<double>(x.size()));
    s.estimate = s.true_grad + rho * u;
  } else {
    s.estimate = s.true_grad + cfg.failure_scale * r_max * u;
  }
  s.error_norm = (s.estimate - s.true_grad).norm();
  s.accurate = s.error_norm <= r_max;
  return s;
}

inline HessianSample sample_H(const ProblemSpec& problem, const Eigen::VectorXd& x,
                              const OracleConfig& cfg, RngStream& rng) {
  if (!x.allFinite()) throw std::invalid_argument("sample_H: non-finite point");
  HessianSample s;
  s.true_hess = problem.eval_hess(x);
  if (cfg.eps_H == 0.0) {
    s.estimate = s.true_hess;
    s.bernoulli_accurate = true;
    return s;
  }
  const Eigen::Index n = x.size();
  s.bernoulli_accurate = rng.u01() < cfg.p_H;
  // Symmetrize the Gaussian draw before normalizing; an asymmetric
  // perturbation would make the estimate's spectrum complex.
  Eigen::MatrixXd g = rng.normal_matrix(n, n);
  Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
  const double spectral =
      sym.selfadjointView<Eigen::Lower>().eigenvalues().cwiseAbs().maxCoeff();
  if (spectral == 0.0) {
    sym.setIdentity();  // degenerate zero draw; identity has unit spectral norm
  } else {
    sym /= spectral;
  }
  double rho;
  if (s.bernoulli_accurate) {
    rho = cfg.eps_H *
          std::pow(rng.u01(), 1.0 / static_cast<double>(n * n));
  } else {
    rho = cfg.failure_scale * cfg.eps_H;
  }
  s.estimate = s.true_hess + rho * sym;
  s.spectral_error = rho;  // ||rho * sym||_2 = rho exactly
  return s;
}

}  // namespace ncstep
