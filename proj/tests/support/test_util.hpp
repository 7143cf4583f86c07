#pragma once

// Shared test helpers: central finite differences (independent derivative
// oracles) and random point/matrix generators.

#include <Eigen/Dense>

#include "ncstep/problems.hpp"
#include "ncstep/rng.hpp"

namespace ncstep_test {

inline Eigen::VectorXd fd_gradient(const ncstep::ProblemSpec& p,
                                   const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (p.eval_f(xp) - p.eval_f(xm)) / (2.0 * h);
  }
  return g;
}

inline Eigen::MatrixXd fd_hessian(const ncstep::ProblemSpec& p,
                                  const Eigen::VectorXd& x, double h = 1e-5) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    m.col(i) = (p.eval_grad(xp) - p.eval_grad(xm)) / (2.0 * h);
  }
  return 0.5 * (m + m.transpose());
}

/// Uniform point in the box [-r, r]^n.
inline Eigen::VectorXd random_box_point(ncstep::RngStream& rng, Eigen::Index n,
                                        double r = 2.0) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = r * rng.uniform_pm1();
  return x;
}

inline Eigen::MatrixXd random_symmetric(ncstep::RngStream& rng, Eigen::Index n) {
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rng.normal();
  return 0.5 * (m + m.transpose());
}

}  // namespace ncstep_test
