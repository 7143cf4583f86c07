#pragma once

// Analytic test objectives. These sit underneath the noisy oracle simulators
// as ground truth: exact value, gradient, and Hessian, plus Lipschitz
// metadata used by the diagnostic constants.
//
// Derivative checks in the test suite use the box [-2, 2]^n, which covers the
// region the experiment trajectories traverse.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace ncstep {

/// A smooth objective with exact evaluators. eval_hess must return an exactly
/// symmetric matrix (samplers and eigensolvers rely on it).
struct ProblemSpec {
  std::string name;
  Eigen::Index dim = 0;
  std::function<double(const Eigen::VectorXd&)> eval_f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval_grad;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> eval_hess;
  double lipschitz_g = 0.0;   // upper bound on sup ||hess(x)||_2, may be loose
  double lipschitz_h = 0.0;   // upper bound on the Hessian Lipschitz constant
  double lower_bound = 0.0;   // f(x) >= lower_bound everywhere
  Eigen::VectorXd default_start;
};

namespace detail {

// Chained Rosenbrock, shared by the 2-d and n-d constructors so that both
// evaluate the same expressions in the same order (the 2-d problem is the
// n = 2 instantiation, bit for bit).
inline double rosen_f(const Eigen::VectorXd& x) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = 1.0 - x[i];
    const double b = x[i + 1] - x[i] * x[i];
    acc += a * a + 100.0 * b * b;
  }
  return acc;
}

inline Eigen::VectorXd rosen_grad(const Eigen::VectorXd& x) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double b = x[i + 1] - x[i] * x[i];
    g[i] += -2.0 * (1.0 - x[i]) - 400.0 * x[i] * b;
    g[i + 1] += 200.0 * b;
  }
  return g;
}

inline Eigen::MatrixXd rosen_hess(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    h(i, i) += 2.0 + 1200.0 * x[i] * x[i] - 400.0 * x[i + 1];
    h(i + 1, i + 1) += 200.0;
    const double off = -400.0 * x[i];
    h(i, i + 1) = off;
    h(i + 1, i) = off;
  }
  return h;
}

}  // namespace detail

/// Classic 2-d Rosenbrock, start (-1.2, 1), minimizer (1, 1) with f = 0.
///
/// Lipschitz metadata: grid maxima over [-2, 2]^2 of the analytic spectral
/// norms (||hess||_2 peaks at 5717.99 in the (2, -2) corner; the third
/// derivative form peaks at 4849.4), rounded up.
inline ProblemSpec rosenbrock_2d() {
  ProblemSpec p;
  p.name = "rosenbrock2";
  p.dim = 2;
  p.eval_f = detail::rosen_f;
  p.eval_grad = detail::rosen_grad;
  p.eval_hess = detail::rosen_hess;
  p.lipschitz_g = 5750.0;
  p.lipschitz_h = 4900.0;
  p.lower_bound = 0.0;
  p.default_start = (Eigen::VectorXd(2) << -1.2, 1.0).finished();
  return p;
}

/// Chained Rosenbrock in dimension n >= 2; minimizer at all-ones with f = 0.
///
/// Lipschitz metadata via Gershgorin over [-2, 2]^n (diag <= 5802 plus
/// off-diagonal row sum <= 1600; third-derivative row sums <= 6000),
/// independent of n.
inline ProblemSpec rosenbrock_nd(Eigen::Index n) {
  if (n < 2) throw std::invalid_argument("rosenbrock_nd: dimension must be >= 2");
  ProblemSpec p;
  p.name = "rosenbrockN";
  p.dim = n;
  p.eval_f = detail::rosen_f;
  p.eval_grad = detail::rosen_grad;
  p.eval_hess = detail::rosen_hess;
  p.lipschitz_g = 7410.0;
  p.lipschitz_h = 6000.0;
  p.lower_bound = 0.0;
  p.default_start = Eigen::VectorXd::Zero(n);
  p.default_start[0] = -1.2;
  p.default_start[1] = 1.0;
  return p;
}

/// f(x) = x1^4/4 - x1^2/2 + x2^2/2. Strict saddle at the origin
/// (grad = 0, hess = diag(-1, 1)); global minima at (+-1, 0) with f = -1/4.
/// Starting here forces progress to come from curvature steps alone.
///
/// Over [-2, 2]^2: ||hess||_2 = |3 x1^2 - 1| <= 11, third derivative
/// form = |6 x1| <= 12 (both exact).
inline ProblemSpec saddle_quartic() {
  ProblemSpec p;
  p.name = "saddle_quartic";
  p.dim = 2;
  p.eval_f = [](const Eigen::VectorXd& x) {
    const double a = x[0] * x[0];
    return 0.25 * a * a - 0.5 * a + 0.5 * x[1] * x[1];
  };
  p.eval_grad = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(2);
    g[0] = x[0] * x[0] * x[0] - x[0];
    g[1] = x[1];
    return g;
  };
  p.eval_hess = [](const Eigen::VectorXd& x) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
    h(0, 0) = 3.0 * x[0] * x[0] - 1.0;
    h(1, 1) = 1.0;
    return h;
  };
  p.lipschitz_g = 11.0;
  p.lipschitz_h = 12.0;
  p.lower_bound = -0.25;
  p.default_start = Eigen::VectorXd::Zero(2);
  return p;
}

/// Harness-facing lookup. `dim` is consulted only by rosenbrockN.
inline ProblemSpec make_problem(const std::string& name, Eigen::Index dim = 2) {
  if (name == "rosenbrock2") return rosenbrock_2d();
  if (name == "rosenbrockN") return rosenbrock_nd(dim);
  if (name == "saddle_quartic") return saddle_quartic();
  throw std::invalid_argument("unknown problem: " + name);
}

}  // namespace ncstep
