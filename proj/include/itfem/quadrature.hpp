#pragma once

// Positive-weight simplex rules of arbitrary exactness, built as conical
// (collapsed-coordinate) products of Gauss-Jacobi rules.

#include "itfem/common.hpp"

#include <map>
#include <mutex>
#include <vector>

namespace itfem {

struct QuadratureRule1D {
  std::vector<double> points;   // in [0, 1]
  std::vector<double> weights;  // for the weight (1 - x)^alpha on [0, 1]
};

struct TriangleRule {
  std::vector<Eigen::Vector2d> points;  // reference triangle (0,0),(1,0),(0,1)
  std::vector<double> weights;          // sum = 1/2
  int degree = 0;
};

struct TetRule {
  std::vector<Vec3> points;     // reference tetrahedron
  std::vector<double> weights;  // sum = 1/6
  int degree = 0;
};

inline constexpr int max_quadrature_degree = 16;

/// m-point Gauss-Jacobi rule on [0, 1] for the weight (1 - x)^alpha
/// (Golub-Welsch on the Jacobi recurrence with beta = 0).
inline QuadratureRule1D gauss_jacobi(int m, int alpha) {
  if (m < 1) throw QuadratureError("Gauss-Jacobi rule needs at least one point");
  const double a = alpha;
  const double b = 0.0;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
  for (int n = 0; n < m; ++n) {
    const double s = 2.0 * n + a + b;
    jac(n, n) = (n == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    if (n + 1 < m) {
      const double k = n + 1;
      const double t = 2.0 * k + a + b;
      const double num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
      const double den = t * t * (t + 1.0) * (t - 1.0);
      jac(n, n + 1) = jac(n + 1, n) = std::sqrt(num / den);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  // integral of (1 - t)^a over [-1, 1]
  const double mu0 = std::pow(2.0, a + 1.0) / (a + 1.0);
  QuadratureRule1D rule;
  for (int i = 0; i < m; ++i) {
    const double t = eig.eigenvalues()[i];
    const double v0 = eig.eigenvectors()(0, i);
    rule.points.push_back(0.5 * (1.0 + t));
    rule.weights.push_back(mu0 * v0 * v0 / std::pow(2.0, a + 1.0));
  }
  return rule;
}

inline void check_degree(int degree) {
  if (degree < 0 || degree > max_quadrature_degree) {
    throw QuadratureError("unsupported quadrature degree " + std::to_string(degree));
  }
}

inline TriangleRule make_triangle_rule(int degree) {
  check_degree(degree);
  const int m = degree / 2 + 1;
  const auto gu = gauss_jacobi(m, 1);
  const auto gv = gauss_jacobi(m, 0);
  TriangleRule rule;
  rule.degree = degree;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double u = gu.points[i];
      const double v = gv.points[j];
      rule.points.emplace_back(u, v * (1.0 - u));
      rule.weights.push_back(gu.weights[i] * gv.weights[j]);
    }
  }
  return rule;
}

inline TetRule make_tet_rule(int degree) {
  check_degree(degree);
  const int m = degree / 2 + 1;
  const auto gu = gauss_jacobi(m, 2);
  const auto gv = gauss_jacobi(m, 1);
  const auto gw = gauss_jacobi(m, 0);
  TetRule rule;
  rule.degree = degree;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int l = 0; l < m; ++l) {
        const double u = gu.points[i];
        const double v = gv.points[j];
        const double w = gw.points[l];
        rule.points.emplace_back(u, v * (1.0 - u), w * (1.0 - u) * (1.0 - v));
        rule.weights.push_back(gu.weights[i] * gv.weights[j] * gw.weights[l]);
      }
    }
  }
  return rule;
}

/// Cached rules; safe to call from several threads.
inline const TriangleRule& triangle_rule(int degree) {
  static std::mutex mutex;
  static std::map<int, TriangleRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, make_triangle_rule(degree)).first;
  return it->second;
}

inline const TetRule& tet_rule(int degree) {
  static std::mutex mutex;
  static std::map<int, TetRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, make_tet_rule(degree)).first;
  return it->second;
}

}  // namespace itfem
