#pragma once

// Cut polygons of the piecewise linear interface, surface quadrature on them
// and its lift to the deformed surface, and volume quadrature on deformed
// elements.

#include "itfem/iso_mapping.hpp"
#include "itfem/quadrature.hpp"

#include <optional>

namespace itfem {

/// T intersected with the zero level of an affine function: a triangle or a
/// planar quadrilateral, triangulated. Triangles are oriented so that their
/// normal points along grad phi_hat.
struct CutInterface {
  int num_points = 0;
  std::array<Vec3, 4> ref_points;  // reference coordinates
  std::array<Vec3, 4> points;      // physical coordinates
  std::vector<std::array<int, 3>> triangles;

  double area() const {
    double a = 0.0;
    for (const auto& t : triangles) {
      a += 0.5 * (points[t[1]] - points[t[0]]).cross(points[t[2]] - points[t[0]]).norm();
    }
    return a;
  }
};

inline std::optional<CutInterface> cut_element(const std::array<double, 4>& values,
                                               const std::array<Vec3, 4>& vertices) {
  if (!is_cut(values)) return std::nullopt;
  static const std::array<Vec3, 4> ref_vertices{Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};

  std::array<int, 4> neg{}, pos{};
  int nn = 0, np = 0;
  for (int m = 0; m < 4; ++m) {
    if (values[m] < 0) neg[nn++] = m;
    else pos[np++] = m;
  }
  CutInterface cut;
  auto add_edge_point = [&](int a, int b) {
    const double t = values[a] / (values[a] - values[b]);
    cut.ref_points[cut.num_points] = ref_vertices[a] + t * (ref_vertices[b] - ref_vertices[a]);
    cut.points[cut.num_points] = vertices[a] + t * (vertices[b] - vertices[a]);
    ++cut.num_points;
  };
  if (nn == 1 || np == 1) {
    const int lone = nn == 1 ? neg[0] : pos[0];
    for (int m = 0; m < 4; ++m)
      if (m != lone) add_edge_point(lone, m);
    cut.triangles.push_back({0, 1, 2});
  } else {
    const int a = neg[0], b = neg[1], c = pos[0], d = pos[1];
    // Cycle a-c, a-d, b-d, b-c around the quadrilateral.
    add_edge_point(a, c);
    add_edge_point(a, d);
    add_edge_point(b, d);
    add_edge_point(b, c);
    const double d02 = (cut.points[2] - cut.points[0]).squaredNorm();
    const double d13 = (cut.points[3] - cut.points[1]).squaredNorm();
    if (d02 <= d13) {
      cut.triangles.push_back({0, 1, 2});
      cut.triangles.push_back({0, 2, 3});
    } else {
      cut.triangles.push_back({0, 1, 3});
      cut.triangles.push_back({1, 2, 3});
    }
  }
  Mat3 edges;
  for (int m = 1; m < 4; ++m) edges.col(m - 1) = vertices[m] - vertices[0];
  const Vec3 grad = edges.transpose().partialPivLu().solve(
      Vec3(values[1] - values[0], values[2] - values[0], values[3] - values[0]));
  for (auto& t : cut.triangles) {
    const Vec3 nrm = (cut.points[t[1]] - cut.points[t[0]]).cross(cut.points[t[2]] - cut.points[t[0]]);
    if (nrm.dot(grad) < 0) std::swap(t[1], t[2]);
  }
  return cut;
}

/// Reference part of a cut rule: points in reference coordinates of the
/// element and weights measuring area on the flat cut.
struct CutRule {
  std::vector<Vec3> ref_points;
  std::vector<Vec3> points;
  std::vector<double> weights;

  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

inline CutRule surface_rule(const CutInterface& cut, int degree) {
  const auto& tri = triangle_rule(degree);
  CutRule rule;
  for (const auto& t : cut.triangles) {
    const Vec3& r0 = cut.ref_points[t[0]];
    const Vec3& p0 = cut.points[t[0]];
    const Vec3 re1 = cut.ref_points[t[1]] - r0, re2 = cut.ref_points[t[2]] - r0;
    const Vec3 pe1 = cut.points[t[1]] - p0, pe2 = cut.points[t[2]] - p0;
    const double area2 = pe1.cross(pe2).norm();
    for (std::size_t q = 0; q < tri.points.size(); ++q) {
      const double s = tri.points[q][0], u = tri.points[q][1];
      rule.ref_points.push_back(r0 + s * re1 + u * re2);
      rule.points.push_back(p0 + s * pe1 + u * pe2);
      rule.weights.push_back(tri.weights[q] * area2);
    }
  }
  return rule;
}

/// Quadrature point on a deformed element with everything assembly needs.
struct QuadPoint {
  Vec3 xi;        // reference coordinates
  Vec3 x;         // undeformed physical point
  Vec3 y;         // Theta_h(x)
  Mat3 jac;       // D Theta_h(x)
  Mat3 jac_inv_t; // D Theta_h(x)^{-T}
  Vec3 normal;    // n_h
  double weight;  // measure on the deformed geometry
  BasisEval basis;

  /// Gradient of u_h o Theta_h^{-1} at y for the local basis: row a is
  /// D Theta^{-T} grad(basis_a).
  Eigen::Matrix<double, Eigen::Dynamic, 3> physical_grads() const {
    return basis.grads * jac_inv_t.transpose();
  }
};

/// Lifts a cut rule to Gamma_h = Theta_h(Gamma_lin): points Theta_h(x),
/// weights scaled by J_Gamma = det(D Theta) |D Theta^{-T} n_lin|.
inline std::vector<QuadPoint> lift_rule(const ActiveMesh& mesh, const IsoMapping& map, int e,
                                        const CutRule& rule) {
  const Vec3 n_lin = linear_normal(mesh, e);
  std::vector<QuadPoint> out(rule.weights.size());
  for (std::size_t q = 0; q < rule.weights.size(); ++q) {
    QuadPoint& p = out[q];
    p.xi = rule.ref_points[q];
    p.basis.evaluate(mesh, e, p.xi);
    const auto th = eval_theta(mesh, map, e, p.xi, p.basis);
    p.x = th.x;
    p.y = th.y;
    p.jac = th.jac;
    p.jac_inv_t = th.jac.inverse().transpose();
    const Vec3 big_n = p.jac_inv_t * n_lin;
    const double len = big_n.norm();
    p.normal = big_n / len;
    p.weight = rule.weights[q] * th.jac.determinant() * len;
  }
  return out;
}

/// Surface quadrature on Gamma_h inside element e (empty if e is not cut).
inline std::vector<QuadPoint> surface_points(const ActiveMesh& mesh, const IsoMapping& map, int e,
                                             int degree) {
  const auto cut = cut_element(mesh.vertex_values(e), mesh.vertices(e));
  if (!cut) return {};
  return lift_rule(mesh, map, e, surface_rule(*cut, degree));
}

/// Tetrahedral rule on Theta_h(T): weights w |det A| det(D Theta).
inline std::vector<QuadPoint> volume_rule(const ActiveMesh& mesh, const IsoMapping& map, int e,
                                          int degree) {
  const auto& tet = tet_rule(degree);
  const Vec3 n_lin = linear_normal(mesh, e);
  const double det_affine = std::abs(mesh.jacobian(e).determinant());
  std::vector<QuadPoint> out(tet.weights.size());
  for (std::size_t q = 0; q < tet.weights.size(); ++q) {
    QuadPoint& p = out[q];
    p.xi = tet.points[q];
    p.basis.evaluate(mesh, e, p.xi);
    const auto th = eval_theta(mesh, map, e, p.xi, p.basis);
    p.x = th.x;
    p.y = th.y;
    p.jac = th.jac;
    p.jac_inv_t = th.jac.inverse().transpose();
    p.normal = (p.jac_inv_t * n_lin).normalized();
    p.weight = tet.weights[q] * det_affine * th.jac.determinant();
  }
  return out;
}

}  // namespace itfem
