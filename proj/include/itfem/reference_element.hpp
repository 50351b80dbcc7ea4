#pragma once

#include "itfem/common.hpp"

#include <vector>

namespace itfem {

/// Lagrange P^k element on the reference tetrahedron with vertices
/// (0,0,0), (1,0,0), (0,1,0), (0,0,1). Nodes are the equispaced lattice
/// points alpha/k with |alpha| = k in barycentric coordinates
/// (lambda0 = 1 - xi1 - xi2 - xi3, lambda_m = xi_m).
class ReferenceElement {
 public:
  static constexpr int max_degree = 5;

  explicit ReferenceElement(int degree) : degree_(degree) {
    if (degree < 1 || degree > max_degree) {
      throw Error("fe_space", "polynomial degree must be in 1..5, got " + std::to_string(degree));
    }
    for (int a3 = 0; a3 <= degree; ++a3) {
      for (int a2 = 0; a2 + a3 <= degree; ++a2) {
        for (int a1 = 0; a1 + a2 + a3 <= degree; ++a1) {
          alphas_.push_back({degree - a1 - a2 - a3, a1, a2, a3});
        }
      }
    }
  }

  int degree() const { return degree_; }
  int num_nodes() const { return static_cast<int>(alphas_.size()); }

  /// Barycentric multi-index of node i.
  const std::array<int, 4>& alpha(int i) const { return alphas_[i]; }

  Vec3 node(int i) const {
    const auto& a = alphas_[i];
    return Vec3(a[1], a[2], a[3]) / degree_;
  }

  /// Index of the vertex node m (0..3).
  int vertex_node(int m) const {
    for (int i = 0; i < num_nodes(); ++i) {
      if (alphas_[i][m] == degree_) return i;
    }
    return -1;
  }

  /// Basis values at reference point xi. Points outside the reference tet are
  /// allowed: the polynomials are evaluated as global polynomials.
  void values(const Vec3& xi, Eigen::VectorXd& out) const {
    Table t = tabulate(xi);
    out.resize(num_nodes());
    for (int i = 0; i < num_nodes(); ++i) {
      const auto& a = alphas_[i];
      out[i] = t.val[0][a[0]] * t.val[1][a[1]] * t.val[2][a[2]] * t.val[3][a[3]];
    }
  }

  /// Basis values and gradients with respect to the reference coordinates
  /// (row i of grads is grad_xi of basis i).
  void values_and_gradients(const Vec3& xi, Eigen::VectorXd& vals,
                            Eigen::Matrix<double, Eigen::Dynamic, 3>& grads) const {
    Table t = tabulate(xi);
    const int n = num_nodes();
    vals.resize(n);
    grads.resize(n, 3);
    for (int i = 0; i < n; ++i) {
      const auto& a = alphas_[i];
      const double v0 = t.val[0][a[0]], v1 = t.val[1][a[1]];
      const double v2 = t.val[2][a[2]], v3 = t.val[3][a[3]];
      vals[i] = v0 * v1 * v2 * v3;
      const double d0 = t.der[0][a[0]] * v1 * v2 * v3;
      grads(i, 0) = v0 * t.der[1][a[1]] * v2 * v3 - d0;
      grads(i, 1) = v0 * v1 * t.der[2][a[2]] * v3 - d0;
      grads(i, 2) = v0 * v1 * v2 * t.der[3][a[3]] - d0;
    }
  }

 private:
  // 1D factors L_a(lambda) = prod_{q<a} (k lambda - q) / (q + 1) and their
  // derivatives, for each barycentric coordinate.
  struct Table {
    std::array<std::array<double, max_degree + 1>, 4> val;
    std::array<std::array<double, max_degree + 1>, 4> der;
  };

  Table tabulate(const Vec3& xi) const {
    const std::array<double, 4> lambda{1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]};
    Table t{};
    const double k = degree_;
    for (int m = 0; m < 4; ++m) {
      t.val[m][0] = 1.0;
      t.der[m][0] = 0.0;
      for (int a = 1; a <= degree_; ++a) {
        const double factor = (k * lambda[m] - (a - 1)) / a;
        t.der[m][a] = t.der[m][a - 1] * factor + t.val[m][a - 1] * k / a;
        t.val[m][a] = t.val[m][a - 1] * factor;
      }
    }
    return t;
  }

  int degree_;
  std::vector<std::array<int, 4>> alphas_;
};

}  // namespace itfem
