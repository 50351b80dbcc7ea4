#pragma once

// Isoparametric mesh deformation Theta_h = P_h Psi_h.
//
// On each cut element T the local map Psi_h(x) = x + d_h(x) G_h(x) moves x
// along G_h = grad phi_h until the element polynomial of phi_h (evaluated as
// a global polynomial, also outside T) takes the value phi_hat_h(x). The
// element-wise maps are made continuous by averaging nodal values over the
// node patches.

#include "itfem/discrete_levelset.hpp"
#include "itfem/mesh.hpp"

#include <optional>
#include <sstream>

namespace itfem {

/// Element-local data for the d_h root search.
class SearchContext {
 public:
  SearchContext(const ActiveMesh& mesh, const DiscreteLevelSet& dls, int element, double delta_fraction = 0.5)
      : mesh_(&mesh), element_(element), coeffs_(dls.local(mesh, element)),
        lin_values_(mesh.vertex_values(element)), delta_(delta_fraction * mesh.h()) {
    const auto& v = lin_values_;
    const Vec3 grad_ref(v[1] - v[0], v[2] - v[0], v[3] - v[0]);
    lin_grad_ = mesh.jacobian_inv_t(element) * grad_ref;
  }

  int element() const { return element_; }
  double delta() const { return delta_; }
  const ActiveMesh& mesh() const { return *mesh_; }

  /// E_T phi_h at a physical point.
  double phi_h(const Vec3& x) const {
    mesh_->reference().values(mesh_->to_reference(element_, x), vals_);
    return vals_.dot(coeffs_);
  }

  /// (E_T phi_h, grad E_T phi_h) at a physical point.
  std::pair<double, Vec3> phi_h_grad(const Vec3& x) const {
    mesh_->reference().values_and_gradients(mesh_->to_reference(element_, x), vals_, grads_);
    const Vec3 g_ref = grads_.transpose() * coeffs_;
    return {vals_.dot(coeffs_), mesh_->jacobian_inv_t(element_) * g_ref};
  }

  /// phi_hat_h (affine on the element), from barycentric coordinates.
  double phi_lin(const Vec3& x) const {
    const Vec3 xi = mesh_->to_reference(element_, x);
    const auto& v = lin_values_;
    return (1.0 - xi[0] - xi[1] - xi[2]) * v[0] + xi[0] * v[1] + xi[1] * v[2] + xi[2] * v[3];
  }

  const Vec3& lin_gradient() const { return lin_grad_; }

  /// Search direction G_h(x) = grad phi_h(x).
  Vec3 direction(const Vec3& x) const { return phi_h_grad(x).second; }

  /// Residual g(d) = E_T phi_h(x + d G) - phi_hat_h(x).
  double residual(const Vec3& x, const Vec3& dir, double target, double d) const {
    return phi_h(x + d * dir) - target;
  }

 private:
  const ActiveMesh* mesh_;
  int element_;
  Eigen::VectorXd coeffs_;
  std::array<double, 4> lin_values_;
  Vec3 lin_grad_;
  double delta_;
  mutable Eigen::VectorXd vals_;
  mutable Eigen::Matrix<double, Eigen::Dynamic, 3> grads_;
};

namespace detail {

inline std::string element_label(const ActiveMesh& mesh, int e) {
  const auto& id = mesh.element(e);
  std::ostringstream os;
  os << "element " << e << " (cube " << id.i << "," << id.j << "," << id.k << " tet " << id.t << ")";
  return os.str();
}

inline double bisect(const SearchContext& ctx, const Vec3& x, const Vec3& dir, double target,
                     double lo, double glo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-16 * ctx.mesh().h(); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = ctx.residual(x, dir, target, mid);
    if (gm == 0.0) return mid;
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// d_h(x): root of E_T phi_h(x + d G_h(x)) = phi_hat_h(x) of smallest |d| in
/// [-delta, delta]. Safeguarded Newton from d = 0, falling back to bisection
/// on a bracket from 16 equispaced samples.
inline double solve_dh(const SearchContext& ctx, const Vec3& x) {
  const double target = ctx.phi_lin(x);
  const Vec3 dir = ctx.direction(x);
  const double delta = ctx.delta();
  const double tol = 1e-12 * std::max(1.0, std::abs(target));

  // d = 0 already meets the residual tolerance (always the case for k = 1 and
  // affine phi, up to roundoff).
  const double g0 = ctx.residual(x, dir, target, 0.0);
  if (std::abs(g0) <= tol) return 0.0;

  std::optional<double> newton;
  double d = 0.0;
  for (int it = 0; it < 50; ++it) {
    const auto [val, grad] = ctx.phi_h_grad(x + d * dir);
    const double g = val - target;
    if (g == 0.0) {
      newton = d;
      break;
    }
    const double dg = grad.dot(dir);
    if (dg == 0.0 || !std::isfinite(dg)) break;
    const double step = g / dg;
    d -= step;
    if (!(std::abs(d) <= delta)) break;
    if (std::abs(step) <= 1e-14 * ctx.mesh().h()) {
      if (std::abs(ctx.residual(x, dir, target, d)) <= tol) newton = d;
      break;
    }
  }
  if (newton) return *newton;

  // Bracketed fallback: pick the sign change closest to zero.
  constexpr int samples = 16;
  std::optional<std::pair<double, double>> best;
  double best_dist = std::numeric_limits<double>::infinity();
  double g_best_lo = 0.0;
  double prev_d = -delta;
  double prev_g = ctx.residual(x, dir, target, prev_d);
  for (int s = 1; s <= samples; ++s) {
    const double cur_d = -delta + 2.0 * delta * s / samples;
    const double cur_g = ctx.residual(x, dir, target, cur_d);
    if ((prev_g <= 0) != (cur_g <= 0) || prev_g == 0.0) {
      const double dist = (prev_d <= 0 && cur_d >= 0) ? 0.0 : std::min(std::abs(prev_d), std::abs(cur_d));
      if (dist < best_dist) {
        best_dist = dist;
        best = std::make_pair(prev_d, cur_d);
        g_best_lo = prev_g;
      }
    }
    prev_d = cur_d;
    prev_g = cur_g;
  }
  if (!best) {
    throw MappingError("mapping construction failed (mesh too coarse) in " +
                       detail::element_label(ctx.mesh(), ctx.element()));
  }
  if (g_best_lo == 0.0) return best->first;
  // A bracket straddling zero may hold roots on both sides; split it at 0.
  if (best->first < 0.0 && best->second > 0.0) {
    if ((g_best_lo < 0) != (g0 < 0)) {
      return detail::bisect(ctx, x, dir, target, best->first, g_best_lo, 0.0);
    }
    return detail::bisect(ctx, x, dir, target, 0.0, g0, best->second);
  }
  return detail::bisect(ctx, x, dir, target, best->first, g_best_lo, best->second);
}

/// Element-local map Psi_h(x) = x + d_h(x) G_h(x).
inline Vec3 psi_h(const SearchContext& ctx, const Vec3& x) {
  const double d = solve_dh(ctx, x);
  return x + d * ctx.direction(x);
}

/// Nodal averaging P_h: for every dof, the arithmetic mean of the element
/// values over its patch. `element_values[e][a]` is the value of element e at
/// its local node a.
inline std::vector<Vec3> project_average(const ActiveMesh& mesh,
                                         const std::vector<std::vector<Vec3>>& element_values) {
  std::vector<Vec3> sum(mesh.num_dofs(), Vec3::Zero());
  std::vector<int> count(mesh.num_dofs(), 0);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = mesh.dofs(e);
    for (std::size_t a = 0; a < dofs.size(); ++a) {
      sum[dofs[a]] += element_values[e][a];
      ++count[dofs[a]];
    }
  }
  for (int d = 0; d < mesh.num_dofs(); ++d) sum[d] /= count[d];
  return sum;
}

/// Largest jump of the element-local Psi_h across interior facets, sampled
/// on a barycentric lattice of the given order on each facet.
inline double psi_facet_jump(const ActiveMesh& mesh, const DiscreteLevelSet& dls, int samples = -1) {
  if (samples < 0) samples = mesh.degree() + 2;
  double worst = 0.0;
  for (const auto& f : interior_facets(mesh)) {
    const SearchContext ca(mesh, dls, f.element_a), cb(mesh, dls, f.element_b);
    for (int i = 0; i <= samples; ++i) {
      for (int j = 0; i + j <= samples; ++j) {
        const double s = double(i) / samples, t = double(j) / samples;
        const Vec3 x = (1.0 - s - t) * f.vertices[0] + s * f.vertices[1] + t * f.vertices[2];
        worst = std::max(worst, (psi_h(ca, x) - psi_h(cb, x)).norm());
      }
    }
  }
  return worst;
}

/// Theta_h - id stored as one displacement vector per global dof.
struct IsoMapping {
  int degree = 1;
  std::vector<Vec3> displacement;

  static IsoMapping identity(const ActiveMesh& mesh) {
    return {mesh.degree(), std::vector<Vec3>(mesh.num_dofs(), Vec3::Zero())};
  }

  double max_displacement() const {
    double m = 0.0;
    for (const auto& d : displacement) m = std::max(m, d.norm());
    return m;
  }
};

inline IsoMapping build_theta(const ActiveMesh& mesh, const DiscreteLevelSet& dls) {
  const auto& ref = mesh.reference();
  std::vector<std::vector<Vec3>> local(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    SearchContext ctx(mesh, dls, e);
    local[e].resize(ref.num_nodes());
    for (int a = 0; a < ref.num_nodes(); ++a) {
      const Vec3 x = mesh.to_physical(e, ref.node(a));
      local[e][a] = psi_h(ctx, x) - x;
    }
  }
  return {mesh.degree(), project_average(mesh, local)};
}

/// Theta_h and D Theta_h at a reference point of an element.
struct ThetaEval {
  Vec3 x;  // undeformed physical point
  Vec3 y;  // Theta_h(x)
  Mat3 jac;
};

/// Basis data of one element at one reference point, with gradients in
/// undeformed physical coordinates.
struct BasisEval {
  Eigen::VectorXd values;
  Eigen::Matrix<double, Eigen::Dynamic, 3> ref_grads;
  Eigen::Matrix<double, Eigen::Dynamic, 3> grads;

  void evaluate(const ActiveMesh& mesh, int e, const Vec3& xi) {
    mesh.reference().values_and_gradients(xi, values, ref_grads);
    grads.noalias() = ref_grads * mesh.jacobian_inv_t(e).transpose();
  }
};

inline ThetaEval eval_theta(const ActiveMesh& mesh, const IsoMapping& map, int e, const Vec3& xi,
                            const BasisEval& basis) {
  ThetaEval out;
  out.x = mesh.to_physical(e, xi);
  out.y = out.x;
  out.jac = Mat3::Identity();
  const auto dofs = mesh.dofs(e);
  for (std::size_t a = 0; a < dofs.size(); ++a) {
    const Vec3& disp = map.displacement[dofs[a]];
    out.y += basis.values[a] * disp;
    out.jac += disp * basis.grads.row(a);
  }
  const double det = out.jac.determinant();
  if (!(det > 0.0)) {
    throw MappingError("deformation not invertible (mesh too coarse) in " + detail::element_label(mesh, e));
  }
  return out;
}

inline ThetaEval eval_theta(const ActiveMesh& mesh, const IsoMapping& map, int e, const Vec3& xi) {
  BasisEval basis;
  basis.evaluate(mesh, e, xi);
  return eval_theta(mesh, map, e, xi, basis);
}

/// Unit normal of the element's piecewise linear level set.
inline Vec3 linear_normal(const ActiveMesh& mesh, int e) {
  const auto& v = mesh.vertex_values(e);
  const Vec3 grad = mesh.jacobian_inv_t(e) * Vec3(v[1] - v[0], v[2] - v[0], v[3] - v[0]);
  return grad.normalized();
}

/// n_h = D Theta^{-T} n_lin / |.|
inline Vec3 deformed_normal(const Mat3& jac, const Vec3& n_lin) {
  return jac.transpose().partialPivLu().solve(n_lin).normalized();
}

struct Normals {
  Vec3 n_lin;
  Vec3 n_h;
};

inline Normals normals(const ActiveMesh& mesh, const IsoMapping& map, int e, const Vec3& xi) {
  const Vec3 n_lin = linear_normal(mesh, e);
  const auto th = eval_theta(mesh, map, e, xi);
  return {n_lin, deformed_normal(th.jac, n_lin)};
}

}  // namespace itfem
