#pragma once

// Singular system S u = f with <c, u> = 0, solved through the rank-one
// augmented matrix S + gamma c c^T with Jacobi-preconditioned CG.

#include "itfem/sparse.hpp"

#include <functional>
#include <sstream>

namespace itfem {

struct SolveReport {
  Eigen::VectorXd u;
  int iterations = 0;
  double relative_residual = 0.0;  // |S~ u - f| / |f|
  double gamma = 0.0;
};

/// gamma = sum_i S_ii / sum_i c_i^2
inline double augment_gamma(const CsrMatrix& s, const Eigen::VectorXd& c) {
  const double cc = c.squaredNorm();
  if (!(cc > 0.0)) throw SolverError("zero constraint vector");
  return s.diagonal().sum() / cc;
}

/// y = (S + gamma c c^T) x, without forming the rank-one term.
class AugmentedOperator {
 public:
  AugmentedOperator(const CsrMatrix& s, const Eigen::VectorXd& c, double gamma) : s_(&s), c_(&c), gamma_(gamma) {}

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    s_->multiply(x, y);
    if (gamma_ != 0.0) y += (gamma_ * c_->dot(x)) * *c_;
  }

  Eigen::VectorXd diagonal() const {
    Eigen::VectorXd d = s_->diagonal();
    if (gamma_ != 0.0) d += gamma_ * c_->cwiseAbs2();
    return d;
  }

  int size() const { return s_->rows(); }

 private:
  const CsrMatrix* s_;
  const Eigen::VectorXd* c_;
  double gamma_;
};

using LinearOperator = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

inline int default_iteration_cap(int n) { return static_cast<int>(50.0 * std::sqrt(double(n))) + 1000; }

/// Preconditioned CG from a zero initial guess. Stops once the preconditioned
/// residual norm sqrt(r^T D^{-1} r) has dropped by `tol` relative to its
/// initial value.
inline SolveReport pcg(const LinearOperator& apply, const Eigen::VectorXd& diag, const Eigen::VectorXd& f,
                       double tol = 1e-9, int max_iterations = -1) {
  const int n = static_cast<int>(f.size());
  if (max_iterations < 0) max_iterations = default_iteration_cap(n);
  Eigen::VectorXd inv_diag(n);
  for (int i = 0; i < n; ++i) inv_diag[i] = diag[i] > 0.0 ? 1.0 / diag[i] : 1.0;

  SolveReport rep;
  rep.u = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = f;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd q(n);
  double rz = r.dot(z);
  const double norm0 = std::sqrt(std::max(rz, 0.0));
  const double fnorm = f.norm();
  if (norm0 == 0.0) return rep;

  int it = 0;
  double norm = norm0;
  while (norm > tol * norm0) {
    if (it >= max_iterations) {
      std::ostringstream os;
      os << "CG did not converge in " << max_iterations << " iterations (relative preconditioned residual "
         << norm / norm0 << ", n = " << n << ")";
      throw SolverError(os.str());
    }
    apply(p, q);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) throw SolverError("operator is not positive definite (p^T A p <= 0)");
    const double alpha = rz / pq;
    rep.u += alpha * p;
    r -= alpha * q;
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    norm = std::sqrt(std::max(rz, 0.0));
    ++it;
  }
  rep.iterations = it;
  Eigen::VectorXd res(n);
  apply(rep.u, res);
  rep.relative_residual = fnorm > 0.0 ? (res - f).norm() / fnorm : 0.0;
  return rep;
}

/// Solves S u = f subject to <c, u> = 0 (f must satisfy <f, e> = 0).
inline SolveReport solve_constrained(const CsrMatrix& s, const Eigen::VectorXd& c, const Eigen::VectorXd& f,
                                     double tol = 1e-9, int max_iterations = -1) {
  const double gamma = augment_gamma(s, c);
  const AugmentedOperator op(s, c, gamma);
  auto rep = pcg([&op](const Eigen::VectorXd& x, Eigen::VectorXd& y) { op.apply(x, y); }, op.diagonal(), f, tol,
                 max_iterations);
  rep.gamma = gamma;
  return rep;
}

}  // namespace itfem
