#pragma once

// Analytic level-set surfaces and the benchmark data living on them.

#include "itfem/common.hpp"

#include <limits>
#include <numbers>

namespace itfem {

enum class SurfaceKind { torus, sphere, plane };

/// Analytic level set. All three kinds are exact signed distance functions
/// (away from the torus core circle / symmetry axis and the sphere centre),
/// so |phi| is the Euclidean distance to the zero level.
struct LevelSet {
  SurfaceKind kind = SurfaceKind::torus;
  double major_radius = 1.0;  // torus R
  double minor_radius = 0.6;  // torus r, sphere radius
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // plane
  double offset = 0.0;          // plane: normal . x = offset
  Box domain_box{};

  static LevelSet torus(double R = 1.0, double r = 0.6) {
    if (!(0.0 < r && r < R)) throw GeometryError("torus requires 0 < r < R");
    LevelSet ls;
    ls.kind = SurfaceKind::torus;
    ls.major_radius = R;
    ls.minor_radius = r;
    return ls;
  }

  static LevelSet sphere(double radius = 1.0, Vec3 center = Vec3::Zero()) {
    if (!(radius > 0.0)) throw GeometryError("sphere radius must be positive");
    LevelSet ls;
    ls.kind = SurfaceKind::sphere;
    ls.minor_radius = radius;
    ls.center = center;
    return ls;
  }

  static LevelSet plane(const Vec3& normal, double offset) {
    const double len = normal.norm();
    if (!(len > 0.0)) throw GeometryError("plane normal must be nonzero");
    LevelSet ls;
    ls.kind = SurfaceKind::plane;
    ls.normal = normal / len;
    ls.offset = offset / len;
    return ls;
  }

  /// Upper bound for |grad phi| on the domain box (all kinds are distances).
  double lipschitz() const { return 1.0; }

  /// Closed-form area of the zero level (plane: not closed, returns NaN).
  double area() const {
    switch (kind) {
      case SurfaceKind::torus:
        return 4.0 * std::numbers::pi * std::numbers::pi * major_radius * minor_radius;
      case SurfaceKind::sphere:
        return 4.0 * std::numbers::pi * minor_radius * minor_radius;
      case SurfaceKind::plane:
        break;
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

namespace detail {

// Offset from the torus core circle; throws on the symmetry axis and on the
// core circle itself, where the distance is not differentiable.
inline Vec3 torus_core_offset(const LevelSet& ls, const Vec3& x) {
  const double rho = std::hypot(x[0], x[1]);
  if (rho <= 1e-14 * ls.major_radius) {
    throw GeometryError("point on the torus symmetry axis");
  }
  const Vec3 core(ls.major_radius * x[0] / rho, ls.major_radius * x[1] / rho, 0.0);
  const Vec3 d = x - core;
  if (d.norm() <= 1e-14 * ls.major_radius) {
    throw GeometryError("point on the torus core circle");
  }
  return d;
}

}  // namespace detail

inline double eval_phi(const LevelSet& ls, const Vec3& x) {
  switch (ls.kind) {
    case SurfaceKind::torus: {
      const double rho = std::hypot(x[0], x[1]);
      return std::hypot(x[2], rho - ls.major_radius) - ls.minor_radius;
    }
    case SurfaceKind::sphere:
      return (x - ls.center).norm() - ls.minor_radius;
    case SurfaceKind::plane:
      return ls.normal.dot(x) - ls.offset;
  }
  return 0.0;
}

inline Vec3 grad_phi(const LevelSet& ls, const Vec3& x) {
  switch (ls.kind) {
    case SurfaceKind::torus: {
      const Vec3 d = detail::torus_core_offset(ls, x);
      return d / d.norm();
    }
    case SurfaceKind::sphere: {
      const Vec3 q = x - ls.center;
      const double len = q.norm();
      if (len == 0.0) throw GeometryError("gradient undefined at the sphere centre");
      return q / len;
    }
    case SurfaceKind::plane:
      return ls.normal;
  }
  return Vec3::Zero();
}

/// Closest point on the zero level: x = p(x) + phi(x) n(p(x)).
inline Vec3 closest_point(const LevelSet& ls, const Vec3& x) {
  switch (ls.kind) {
    case SurfaceKind::torus: {
      const Vec3 d = detail::torus_core_offset(ls, x);
      return x - d + ls.minor_radius * d / d.norm();
    }
    case SurfaceKind::sphere: {
      const Vec3 q = x - ls.center;
      const double len = q.norm();
      if (len == 0.0) throw GeometryError("closest point undefined at the sphere centre");
      return ls.center + ls.minor_radius * q / len;
    }
    case SurfaceKind::plane:
      return x - eval_phi(ls, x) * ls.normal;
  }
  return x;
}

/// Unit normal n = grad phi / |grad phi|.
inline Vec3 unit_normal(const LevelSet& ls, const Vec3& x) {
  return grad_phi(ls, x).normalized();
}

// ---------------------------------------------------------------------------

/// Toroidal angles (azimuth, poloidal) of a point. Both are constant along
/// the normal lines of the torus, which makes them the natural coordinates for
/// the constant-normal extension of surface data.
struct TorusAngles {
  double azimuth;   // atan2(y, x)
  double poloidal;  // atan2(z, rho - R)
};

inline TorusAngles torus_angles(const LevelSet& ls, const Vec3& x) {
  detail::torus_core_offset(ls, x);  // rejects the singular set
  const double rho = std::hypot(x[0], x[1]);
  return {std::atan2(x[1], x[0]), std::atan2(x[2], rho - ls.major_radius)};
}

enum class SolutionKind {
  standard,  // torus: sin(3a)cos(3p + a); sphere: x1 x2 x3; plane: zero
  zero,
};

/// Surface PDE data -Lap_G u = f together with the exact solution. All fields
/// are evaluated through the constant-normal extension, i.e. u(x) = u(p(x)).
struct BenchmarkProblem {
  LevelSet levelset;
  SolutionKind solution = SolutionKind::standard;

  bool is_zero() const {
    return solution == SolutionKind::zero || levelset.kind == SurfaceKind::plane;
  }
};

inline double exact_solution(const BenchmarkProblem& pb, const Vec3& x) {
  if (pb.is_zero()) return 0.0;
  const LevelSet& ls = pb.levelset;
  if (ls.kind == SurfaceKind::torus) {
    const auto [a, p] = torus_angles(ls, x);
    return std::sin(3.0 * a) * std::cos(3.0 * p + a);
  }
  const Vec3 q = closest_point(ls, x) - ls.center;
  return q[0] * q[1] * q[2];
}

/// Gradient of the constant-normal extension of u.
inline Vec3 exact_gradient(const BenchmarkProblem& pb, const Vec3& x) {
  if (pb.is_zero()) return Vec3::Zero();
  const LevelSet& ls = pb.levelset;
  if (ls.kind == SurfaceKind::torus) {
    const auto [a, p] = torus_angles(ls, x);
    const double rho = std::hypot(x[0], x[1]);
    const double s = rho - ls.major_radius;
    const double q2 = s * s + x[2] * x[2];
    const Vec3 grad_a(-x[1] / (rho * rho), x[0] / (rho * rho), 0.0);
    const Vec3 grad_s(x[0] / rho, x[1] / rho, 0.0);
    const Vec3 grad_p = (-x[2] * grad_s + s * Vec3::UnitZ()) / q2;
    const double du_da = 3.0 * std::cos(3.0 * a) * std::cos(3.0 * p + a) -
                         std::sin(3.0 * a) * std::sin(3.0 * p + a);
    const double du_dp = -3.0 * std::sin(3.0 * a) * std::sin(3.0 * p + a);
    return du_da * grad_a + du_dp * grad_p;
  }
  const Vec3 q = x - ls.center;
  const double len = q.norm();
  if (len == 0.0) throw GeometryError("extension undefined at the sphere centre");
  const double a3 = std::pow(ls.minor_radius, 3);
  const double prod = q[0] * q[1] * q[2];
  const Vec3 mixed(q[1] * q[2], q[0] * q[2], q[0] * q[1]);
  return a3 * (mixed / std::pow(len, 3) - 3.0 * prod * q / std::pow(len, 5));
}

/// f = -Lap_G u at p(x). For the torus this uses the metric Laplacian
/// u_aa / rt^2 + u_pp / r^2 - sin(p) u_p / (r rt), rt = R + r cos(p).
inline double rhs(const BenchmarkProblem& pb, const Vec3& x) {
  if (pb.is_zero()) return 0.0;
  const LevelSet& ls = pb.levelset;
  if (ls.kind == SurfaceKind::torus) {
    const auto [a, p] = torus_angles(ls, x);
    const double R = ls.major_radius;
    const double r = ls.minor_radius;
    const double rt = R + r * std::cos(p);
    const double s3a = std::sin(3.0 * a);
    const double c3a = std::cos(3.0 * a);
    const double arg = 3.0 * p + a;
    const double u_aa = -10.0 * s3a * std::cos(arg) - 6.0 * c3a * std::sin(arg);
    const double u_p = -3.0 * s3a * std::sin(arg);
    const double u_pp = -9.0 * s3a * std::cos(arg);
    const double lap = u_aa / (rt * rt) + u_pp / (r * r) - std::sin(p) * u_p / (r * rt);
    return -lap;
  }
  const double a = ls.minor_radius;
  return 12.0 / (a * a) * exact_solution(pb, x);
}

}  // namespace itfem
