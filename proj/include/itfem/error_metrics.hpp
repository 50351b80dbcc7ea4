#pragma once

// Error measures on Gamma_h, convergence orders and condition number
// estimates of the constrained stiffness matrix.

#include "itfem/assembly.hpp"
#include "itfem/discrete_levelset.hpp"
#include "itfem/solver.hpp"

#include <optional>
#include <random>

namespace itfem {

struct ErrorNorms {
  double e_dist = 0.0;  // max |phi| over Gamma_h quadrature points
  double e_l2 = 0.0;    // |u^e - u_h|_{L2(Gamma_h)}
  double e_h1_t = 0.0;  // |P_h grad(u^e - u_h)|_{L2(Gamma_h)}
  double e_h1_n = 0.0;  // |grad u_h . n|_{L2(Gamma_h)}, n the exact normal
};

/// Default quadrature exactness 2k, one order above assembly.
inline ErrorNorms compute_errors(const ActiveMesh& mesh, const IsoMapping& map, const Eigen::VectorXd& u,
                                 const BenchmarkProblem& pb, int degree = -1) {
  if (degree < 0) degree = 2 * mesh.degree();
  const LevelSet& ls = pb.levelset;
  ErrorNorms err;
  double l2 = 0.0, h1t = 0.0, h1n = 0.0;
  const int nloc = mesh.nodes_per_element();
  Eigen::VectorXd ul(nloc);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = mesh.dofs(e);
    for (int a = 0; a < nloc; ++a) ul[a] = u[dofs[a]];
    for (const auto& p : surface_points(mesh, map, e, degree)) {
      err.e_dist = std::max(err.e_dist, std::abs(eval_phi(ls, p.y)));
      const double uh = p.basis.values.dot(ul);
      const Vec3 grad_uh = p.physical_grads().transpose() * ul;
      const Vec3 diff = exact_gradient(pb, p.y) - grad_uh;
      const Vec3 tang = diff - p.normal.dot(diff) * p.normal;
      const double du = exact_solution(pb, p.y) - uh;
      l2 += p.weight * du * du;
      h1t += p.weight * tang.squaredNorm();
      const double dn = grad_uh.dot(unit_normal(ls, p.y));
      h1n += p.weight * dn * dn;
    }
  }
  err.e_l2 = std::sqrt(l2);
  err.e_h1_t = std::sqrt(h1t);
  err.e_h1_n = std::sqrt(h1n);
  return err;
}

/// max |n_h - n| over surface quadrature points, n the exact unit normal at
/// the lifted point.
inline double normal_error_max(const ActiveMesh& mesh, const IsoMapping& map, const LevelSet& ls,
                               int degree = -1) {
  if (degree < 0) degree = 2 * mesh.degree();
  double worst = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (const auto& p : surface_points(mesh, map, e, degree)) {
      worst = std::max(worst, (p.normal - unit_normal(ls, p.y)).norm());
    }
  }
  return worst;
}

/// log2(e_{i-1} / e_i); undefined (nullopt) for the first entry and for
/// non-positive errors.
inline std::vector<std::optional<double>> eoc(const std::vector<double>& errors) {
  std::vector<std::optional<double>> out(errors.size());
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i - 1] > 0.0 && errors[i] > 0.0 && std::isfinite(errors[i - 1]) && std::isfinite(errors[i])) {
      out[i] = std::log2(errors[i - 1] / errors[i]);
    }
  }
  return out;
}

struct ConditionEstimate {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  int power_iterations = 0;
  int inverse_iterations = 0;
  int kernel_dimension = 0;  // dense path: exact kernel directions removed
  double resolution = 0.0;   // dense path: eigenvalues below this are roundoff

  bool resolved() const { return lambda_min > resolution; }

  /// lambda_max / lambda_min; when lambda_min is below the eigensolver
  /// resolution, the lower bound lambda_max / (max(lambda_min, 0) + resolution).
  double condition() const {
    if (resolved()) return lambda_max / lambda_min;
    return lambda_max / (std::max(lambda_min, 0.0) + resolution);
  }
};

struct ConditionOptions {
  int max_size = 20000;
  double rel_tol = 1e-6;
  int max_power_iterations = 5000;
  int max_inverse_iterations = 300;
  double solve_tol = 1e-11;
  unsigned seed = 12345;
};

/// Extreme eigenvalues of S on the hyperplane c.u = 0: power iteration for
/// the largest, inverse iteration (constrained solves with S + gamma c c^T)
/// for the smallest.
inline ConditionEstimate estimate_condition(const CsrMatrix& s, const Eigen::VectorXd& c,
                                            const ConditionOptions& opt = {}) {
  const int n = s.rows();
  if (n > opt.max_size) throw SolverError("system too large for condition estimation");
  const double cc = c.squaredNorm();
  auto project = [&](Eigen::VectorXd& v) {
    if (cc > 0.0) v -= (c.dot(v) / cc) * c;
  };
  std::mt19937 rng(opt.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = dist(rng);
  project(x);
  x.normalize();

  ConditionEstimate est;
  Eigen::VectorXd y(n);
  double lambda = 0.0;
  bool converged = false;
  for (int it = 1; it <= opt.max_power_iterations; ++it) {
    s.multiply(x, y);
    project(y);
    const double next = x.dot(y);
    x = y / y.norm();
    est.power_iterations = it;
    if (it > 1 && std::abs(next - lambda) <= opt.rel_tol * std::abs(next)) {
      lambda = next;
      converged = true;
      break;
    }
    lambda = next;
  }
  if (!converged) {
    throw SolverError("power iteration did not converge in " + std::to_string(opt.max_power_iterations) +
                      " iterations");
  }
  est.lambda_max = lambda;

  const double gamma = augment_gamma(s, c);
  const AugmentedOperator op(s, c, gamma);
  const Eigen::VectorXd diag = op.diagonal();
  const LinearOperator apply = [&op](const Eigen::VectorXd& a, Eigen::VectorXd& b) { op.apply(a, b); };
  const Eigen::VectorXd zc = pcg(apply, diag, c, opt.solve_tol).u;
  const double czc = c.dot(zc);

  for (int i = 0; i < n; ++i) x[i] = dist(rng);
  project(x);
  x.normalize();
  converged = false;
  lambda = 0.0;
  for (int it = 1; it <= opt.max_inverse_iterations; ++it) {
    Eigen::VectorXd w = pcg(apply, diag, x, opt.solve_tol).u;
    w -= (c.dot(w) / czc) * zc;
    w.normalize();
    s.multiply(w, y);
    const double next = w.dot(y);
    x = w;
    est.inverse_iterations = it;
    if (it > 1 && std::abs(next - lambda) <= opt.rel_tol * std::abs(next)) {
      lambda = next;
      converged = true;
      break;
    }
    lambda = next;
  }
  if (!converged) {
    throw SolverError("inverse iteration did not converge in " + std::to_string(opt.max_inverse_iterations) +
                      " iterations");
  }
  est.lambda_min = lambda;
  return est;
}

namespace detail {

/// Orthonormal basis of the orthogonal complement of span(cols).
inline Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& cols) {
  const int n = static_cast<int>(cols.rows());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cols);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - rank);
}

}  // namespace detail

/// For an affine level set l and p >= 1, the products l^p v with v of degree
/// k - p have vanishing derivatives of order < p on Gamma_h = Gamma_lin.
/// p = 1 spans the kernel of the unstabilized stiffness matrix, p = 2 that of
/// the full-gradient surface stabilization. Returns the interpolants as
/// columns (none if p > k).
inline Eigen::MatrixXd trace_kernel_basis(const ActiveMesh& mesh, const LevelSet& ls, int power) {
  if (ls.kind != SurfaceKind::plane) throw GeometryError("kernel basis needs an affine level set");
  const int n = mesh.num_dofs();
  const int k = mesh.degree();
  if (power < 1 || power > k) return Eigen::MatrixXd(n, 0);
  auto lp = [&](const Vec3& x) { return std::pow(eval_phi(ls, x), power); };
  if (power == k) {
    Eigen::MatrixXd out(n, 1);
    for (int d = 0; d < n; ++d) out(d, 0) = lp(mesh.dof_position(d));
    return out;
  }
  const ActiveMesh low = build_active_mesh(ls, mesh.params().n, k - power);
  if (low.elements() != mesh.elements()) throw MeshError("active sets differ between degrees");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, low.num_dofs());
  Eigen::VectorXd vals;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto hi_dofs = mesh.dofs(e);
    const auto lo_dofs = low.dofs(e);
    for (int a = 0; a < mesh.nodes_per_element(); ++a) {
      const Vec3 xi = mesh.reference().node(a);
      const double l = lp(mesh.to_physical(e, xi));
      low.reference().values(xi, vals);
      for (std::size_t b = 0; b < lo_dofs.size(); ++b) out(hi_dofs[a], lo_dofs[b]) = l * vals[b];
    }
  }
  return out;
}

/// Exact kernel of S for a stabilization variant on a planar interface.
inline Eigen::MatrixXd plane_kernel(const ActiveMesh& mesh, const LevelSet& ls, StabVariant v) {
  switch (v) {
    case StabVariant::none: return trace_kernel_basis(mesh, ls, 1);
    case StabVariant::full_gradient_surface: return trace_kernel_basis(mesh, ls, 2);
    default: return Eigen::MatrixXd(mesh.num_dofs(), 0);
  }
}

/// Dense spectral condition number of S on {u : c.u = 0} orthogonal to the
/// columns of `kernel`, which must satisfy S kernel = 0.
inline ConditionEstimate dense_condition(const CsrMatrix& s, const Eigen::VectorXd& c,
                                         const Eigen::MatrixXd& kernel = {}) {
  const Eigen::MatrixXd a = s.to_dense();
  const int n = static_cast<int>(a.rows());
  const double norm_inf = a.cwiseAbs().rowwise().sum().maxCoeff();
  Eigen::MatrixXd removed(n, 1 + kernel.cols());
  removed.col(0) = c;
  if (kernel.cols() > 0) {
    removed.rightCols(kernel.cols()) = kernel;
    const double residual = (a * kernel).cwiseAbs().maxCoeff();
    if (residual > 1e-8 * norm_inf * kernel.cwiseAbs().maxCoeff()) {
      throw SolverError("kernel basis is not annihilated by S (residual " + std::to_string(residual) + ")");
    }
  }
  const Eigen::MatrixXd q = detail::orthogonal_complement(removed);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.transpose() * a * q, Eigen::EigenvaluesOnly);
  ConditionEstimate est;
  est.lambda_min = eig.eigenvalues()[0];
  est.lambda_max = eig.eigenvalues()[eig.eigenvalues().size() - 1];
  est.kernel_dimension = n - 1 - static_cast<int>(q.cols());
  est.resolution = n * std::numeric_limits<double>::epsilon() * est.lambda_max;
  return est;
}

}  // namespace itfem
