#include "itfem/cut_geometry.hpp"

#include <gtest/gtest.h>

#include <map>
#include <numbers>
#include <random>

using namespace itfem;

namespace {

const std::array<Vec3, 4> unit_tet{Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};

// Area of {phi_hat = 0} in a tet: edge crossings ordered by angle around
// their centroid, then fanned.
double clipped_area(const std::array<double, 4>& v, const std::array<Vec3, 4>& x) {
  std::vector<Vec3> pts;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      if ((v[a] < 0) != (v[b] < 0)) pts.push_back(x[a] + v[a] / (v[a] - v[b]) * (x[b] - x[a]));
  if (pts.size() < 3) return 0.0;
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p / double(pts.size());
  const Vec3 n = (pts[1] - pts[0]).cross(pts[2] - pts[0]).normalized();
  const Vec3 e1 = (pts[0] - c).normalized(), e2 = n.cross(e1);
  std::sort(pts.begin(), pts.end(), [&](const Vec3& p, const Vec3& q) {
    return std::atan2((p - c).dot(e2), (p - c).dot(e1)) < std::atan2((q - c).dot(e2), (q - c).dot(e1));
  });
  double area = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) area += 0.5 * (pts[i] - c).cross(pts[(i + 1) % pts.size()] - c).norm();
  return area;
}

// Polynomials in three barycentric variables, for closed-form triangle
// moments: int_T l0^a l1^b l2^c = 2|T| a! b! c! / (a+b+c+2)!.
using BaryPoly = std::map<std::array<int, 3>, double>;

BaryPoly times_linear(const BaryPoly& p, const std::array<double, 3>& lin) {
  BaryPoly out;
  for (const auto& [e, c] : p)
    for (int i = 0; i < 3; ++i) {
      auto f = e;
      ++f[i];
      out[f] += c * lin[i];
    }
  return out;
}

double exact_triangle_monomial(const std::array<Vec3, 3>& tri, int a, int b, int c) {
  BaryPoly p{{{0, 0, 0}, 1.0}};
  const int exps[3] = {a, b, c};
  for (int d = 0; d < 3; ++d)
    for (int r = 0; r < exps[d]; ++r) p = times_linear(p, {tri[0][d], tri[1][d], tri[2][d]});
  const double area = 0.5 * (tri[1] - tri[0]).cross(tri[2] - tri[0]).norm();
  double sum = 0.0;
  for (const auto& [e, coef] : p) {
    sum += coef * 2.0 * area * std::tgamma(e[0] + 1.0) * std::tgamma(e[1] + 1.0) * std::tgamma(e[2] + 1.0) /
           std::tgamma(e[0] + e[1] + e[2] + 3.0);
  }
  return sum;
}

double monomial(const Vec3& x, int a, int b, int c) { return std::pow(x[0], a) * std::pow(x[1], b) * std::pow(x[2], c); }

double lifted_area(const LevelSet& ls, int n, int k) {
  const ActiveMesh mesh = build_active_mesh(ls, n, k);
  const IsoMapping map = build_theta(mesh, interpolate(ls, mesh));
  double area = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (const auto& p : surface_points(mesh, map, e, 2 * k)) area += p.weight;
  return area;
}

}  // namespace

TEST(CutElement, SingleNegativeVertex) {
  const auto cut = cut_element({-1, 1, 1, 1}, unit_tet);
  ASSERT_TRUE(cut);
  ASSERT_EQ(cut->num_points, 3);
  ASSERT_EQ(cut->triangles.size(), 1u);
  std::vector<Vec3> expect{Vec3(0.5, 0, 0), Vec3(0, 0.5, 0), Vec3(0, 0, 0.5)};
  for (const auto& e : expect) {
    bool found = false;
    for (int i = 0; i < 3; ++i) found |= (cut->points[i] - e).norm() < 1e-15;
    EXPECT_TRUE(found);
  }
}

TEST(CutElement, UniformSignIsNotCut) { EXPECT_FALSE(cut_element({1, 1, 1, 1}, unit_tet)); }

TEST(CutElement, QuadrilateralSplitsAlongOneDiagonal) {
  const auto cut = cut_element({-1, -1, 1, 1}, unit_tet);
  ASSERT_TRUE(cut);
  ASSERT_EQ(cut->num_points, 4);
  ASSERT_EQ(cut->triangles.size(), 2u);
  int shared = 0;
  for (int a : cut->triangles[0])
    for (int b : cut->triangles[1]) shared += a == b;
  EXPECT_EQ(shared, 2);
  EXPECT_NEAR(cut->area(), clipped_area({-1, -1, 1, 1}, unit_tet), 1e-14);
}

TEST(CutElement, MatchesClippingOracle) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> val(-1.0, 1.0), coord(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<double, 4> v;
    for (double& x : v) x = val(rng);
    std::array<Vec3, 4> x;
    for (auto& p : x) p = Vec3(coord(rng), coord(rng), coord(rng));
    if (std::abs((x[1] - x[0]).cross(x[2] - x[0]).dot(x[3] - x[0])) < 1e-3) continue;
    const auto cut = cut_element(v, x);
    ASSERT_EQ(bool(cut), is_cut(v));
    if (!cut) continue;
    ++checked;
    ASSERT_NEAR(cut->area(), clipped_area(v, x), 1e-10);
    // Vertices on the zero level, reference and physical points consistent.
    const Mat3 a = (Mat3() << x[1] - x[0], x[2] - x[0], x[3] - x[0]).finished();
    for (int i = 0; i < cut->num_points; ++i) {
      const Vec3& r = cut->ref_points[i];
      const double phi = v[0] * (1 - r.sum()) + v[1] * r[0] + v[2] * r[1] + v[3] * r[2];
      ASSERT_NEAR(phi, 0.0, 1e-13);
      ASSERT_NEAR((x[0] + a * r - cut->points[i]).norm(), 0.0, 1e-13);
    }
    // Orientation along grad phi_hat, positive areas.
    const Vec3 grad = a.transpose().inverse() * Vec3(v[1] - v[0], v[2] - v[0], v[3] - v[0]);
    for (const auto& t : cut->triangles) {
      const Vec3 n = (cut->points[t[1]] - cut->points[t[0]]).cross(cut->points[t[2]] - cut->points[t[0]]);
      ASSERT_GT(n.norm(), 0.0);
      ASSERT_GT(n.dot(grad), 0.0);
    }
  }
  EXPECT_GT(checked, 500);
}

TEST(SurfaceRule, WeightsSumToArea) {
  const auto cut = cut_element({-0.3, 0.7, -0.2, 0.4}, unit_tet);
  ASSERT_TRUE(cut);
  for (int degree = 0; degree <= 8; ++degree) EXPECT_NEAR(surface_rule(*cut, degree).total_weight(), cut->area(), 1e-12);
  EXPECT_THROW(surface_rule(*cut, 17), QuadratureError);
}

TEST(SurfaceRule, MonomialExactness) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int k = 1; k <= 5; ++k) {
    const int degree = 2 * k - 2;
    for (int trial = 0; trial < 10; ++trial) {
      std::array<double, 4> v;
      do {
        for (double& x : v) x = val(rng);
      } while (!is_cut(v));
      const auto cut = cut_element(v, unit_tet);
      const auto rule = surface_rule(*cut, degree);
      for (int a = 0; a <= degree; ++a)
        for (int b = 0; a + b <= degree; ++b)
          for (int c = 0; a + b + c <= degree; ++c) {
            double exact = 0.0;
            for (const auto& t : cut->triangles)
              exact += exact_triangle_monomial({cut->points[t[0]], cut->points[t[1]], cut->points[t[2]]}, a, b, c);
            double sum = 0.0;
            for (std::size_t q = 0; q < rule.weights.size(); ++q) sum += rule.weights[q] * monomial(rule.points[q], a, b, c);
            ASSERT_NEAR(sum, exact, 1e-12 * std::max(1e-3, std::abs(exact))) << k << ": " << a << b << c;
          }
    }
  }
}

TEST(SurfaceRule, PlaneCrossSectionOfBox) {
  const auto ls = LevelSet::plane(Vec3::UnitZ(), 0.5 - 1e-3);
  const ActiveMesh mesh = build_active_mesh(ls, 8, 2);
  const IsoMapping id = IsoMapping::identity(mesh);
  double total = 0.0, lifted = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto cut = cut_element(mesh.vertex_values(e), mesh.vertices(e));
    ASSERT_TRUE(cut);
    const auto rule = surface_rule(*cut, 2);
    total += rule.total_weight();
    const auto pts = lift_rule(mesh, id, e, rule);
    for (std::size_t q = 0; q < pts.size(); ++q) {
      ASSERT_NEAR(pts[q].weight, rule.weights[q], 1e-15);
      lifted += pts[q].weight;
    }
  }
  EXPECT_NEAR(total, 16.0, 1e-10);
  EXPECT_NEAR(lifted, 16.0, 1e-10);
}

TEST(LiftRule, TorusAreaConverges) {
  const auto ls = LevelSet::torus();
  const double exact = 4.0 * std::numbers::pi * std::numbers::pi * 0.6;
  EXPECT_NEAR(ls.area(), exact, 1e-12);
  const int k = 2;
  std::vector<double> err;
  for (int n : {16, 32, 64}) err.push_back(std::abs(lifted_area(ls, n, k) - exact));
  EXPECT_GE(std::log2(err[0] / err[1]), k + 0.7) << err[0] << ' ' << err[1];
  EXPECT_GE(std::log2(err[1] / err[2]), k + 0.7) << err[1] << ' ' << err[2];
}

TEST(LiftRule, SphereAreaConverges) {
  const auto ls = LevelSet::sphere(1.0, Vec3(0.013, -0.021, 0.007));
  const double exact = 4.0 * std::numbers::pi;
  const int k = 2;
  std::vector<double> err;
  for (int n : {8, 16, 32}) err.push_back(std::abs(lifted_area(ls, n, k) - exact));
  EXPECT_GE(std::log2(err[1] / err[2]), k + 0.7) << err[0] << ' ' << err[1] << ' ' << err[2];
}

TEST(VolumeRule, IdentityAndAffineMaps) {
  const ActiveMesh mesh = build_active_mesh(LevelSet::torus(), 8, 2);
  const IsoMapping id = IsoMapping::identity(mesh);
  IsoMapping twice = id;
  for (int d = 0; d < mesh.num_dofs(); ++d) twice.displacement[d] = mesh.dof_position(d);
  const double h = mesh.h();
  double total = 0.0, volumes = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    double w = 0.0, w2 = 0.0;
    for (const auto& p : volume_rule(mesh, id, e, 4)) w += p.weight;
    for (const auto& p : volume_rule(mesh, twice, e, 4)) w2 += p.weight;
    ASSERT_NEAR(w, h * h * h / 6.0, 1e-15);
    ASSERT_NEAR(w2, 8.0 * mesh.volume(e), 1e-14);
    total += w;
    volumes += mesh.volume(e);
  }
  EXPECT_NEAR(total, volumes, 1e-12);
}
