#pragma once

// Minimum eigenpairs, negative curvature directions, and the capped
// conjugate-gradient subsolver used by the CG-based baseline.

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace ncstep {

struct EigenResult {
  double lambda_min = 0.0;
  Eigen::VectorXd eigvec;   // unit norm, first nonzero component positive
  double residual = 0.0;    // ||H v - lambda v||_2
};

/// A direction q with q'Hq <= gamma * lambda_min(H) * ||q||^2 < 0 and
/// ||q|| = delta * |lambda_min(H)|.
struct NCDirection {
  Eigen::VectorXd q;
  double gamma = 0.0;
  double delta = 0.0;
  double curvature = 0.0;   // q'Hq
};

enum class CGStepKind { NewtonLike, NegativeCurvature };

struct CGOutcome {
  CGStepKind kind = CGStepKind::NewtonLike;
  Eigen::VectorXd direction;
  int iterations = 0;
};

/// Smallest eigenvalue and an associated unit eigenvector of a symmetric
/// matrix (dense tridiagonalization + implicit QR underneath). Deterministic
/// for fixed input: the eigenvector sign is normalized so that its first
/// nonzero component is positive.
inline EigenResult min_eigenpair(const Eigen::MatrixXd& h) {
  if (!h.allFinite()) throw std::invalid_argument("min_eigenpair: non-finite entries");
  if (h.rows() == 0 || h.rows() != h.cols())
    throw std::invalid_argument("min_eigenpair: matrix must be square and nonempty");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("min_eigenpair: eigendecomposition failed");
  EigenResult r;
  r.lambda_min = solver.eigenvalues()[0];  // ascending order
  r.eigvec = solver.eigenvectors().col(0);
  for (Eigen::Index i = 0; i < r.eigvec.size(); ++i) {
    if (r.eigvec[i] != 0.0) {
      if (r.eigvec[i] < 0.0) r.eigvec = -r.eigvec;
      break;
    }
  }
  r.residual = (h * r.eigvec - r.lambda_min * r.eigvec).norm();
  return r;
}

/// Scale the minimum eigenvector into a negative curvature direction:
/// q = delta * |lambda_min| * v. Then q'Hq = lambda_min ||q||^2, which
/// satisfies the gamma condition for any gamma <= 1.
inline NCDirection nc_direction(const Eigen::MatrixXd& h, const EigenResult& eig,
                                double gamma, double delta) {
  if (!(eig.lambda_min < 0.0))
    throw std::domain_error("nc_direction: matrix has no negative curvature");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("nc_direction: gamma must lie in (0, 1]");
  if (!(delta > 0.0))
    throw std::invalid_argument("nc_direction: delta must be > 0");
  NCDirection d;
  d.gamma = gamma;
  d.delta = delta;
  d.q = delta * std::abs(eig.lambda_min) * eig.eigvec;
  d.curvature = d.q.dot(h * d.q);
  return d;
}

/// Conjugate gradient on the shifted system (H + 2 eps_cap I) s = -g.
/// If any search direction p exposes p'(H + 2 eps_cap I)p <= eps_cap ||p||^2,
/// that p is returned as negative curvature; otherwise the CG iterate is
/// returned once the residual drops below 1e-6 ||g|| or max_iter is reached.
///
/// When g = 0 the Krylov space is empty; the diagonal of the shifted matrix
/// is scanned for a coordinate direction certifying negative curvature.
inline CGOutcome capped_cg(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                           double eps_cap, int max_iter) {
  const Eigen::Index n = h.rows();
  if (n == 0) throw std::invalid_argument("capped_cg: zero-dimensional input");
  if (h.cols() != n || g.size() != n)
    throw std::invalid_argument("capped_cg: dimension mismatch");
  if (!(eps_cap > 0.0)) throw std::invalid_argument("capped_cg: eps_cap must be > 0");
  if (max_iter < 1) throw std::invalid_argument("capped_cg: max_iter must be >= 1");

  const Eigen::MatrixXd shifted = h + 2.0 * eps_cap * Eigen::MatrixXd::Identity(n, n);
  CGOutcome out;

  const double gnorm = g.norm();
  if (gnorm == 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (shifted(i, i) <= eps_cap) {
        out.kind = CGStepKind::NegativeCurvature;
        out.direction = Eigen::VectorXd::Unit(n, i);
        return out;
      }
    }
    out.direction = Eigen::VectorXd::Zero(n);
    return out;
  }

  const double tol = 1e-6 * gnorm;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = -g;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd hp = shifted * p;
    const double php = p.dot(hp);
    if (php <= eps_cap * p.squaredNorm()) {
      out.kind = CGStepKind::NegativeCurvature;
      out.direction = p;
      out.iterations = it + 1;
      return out;
    }
    const double step = rr / php;
    s += step * p;
    r -= step * hp;
    const double rr_new = r.squaredNorm();
    out.iterations = it + 1;
    if (std::sqrt(rr_new) <= tol) break;
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  out.kind = CGStepKind::NewtonLike;
  out.direction = s;
  return out;
}

}  // namespace ncstep
