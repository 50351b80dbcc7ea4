#include "itfem/discrete_levelset.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace itfem;

namespace {

Vec3 random_point_in_tet(std::mt19937& rng) {
  std::exponential_distribution<double> ex(1.0);
  double l[4], s = 0.0;
  for (double& v : l) s += (v = ex(rng));
  return Vec3(l[1], l[2], l[3]) / s;
}

double monomial(const Vec3& x, int a, int b, int c) { return std::pow(x[0], a) * std::pow(x[1], b) * std::pow(x[2], c); }

// phi_h evaluated at physical x inside element e.
double eval_discrete(const ActiveMesh& mesh, const DiscreteLevelSet& dls, int e, const Vec3& x) {
  Eigen::VectorXd vals;
  mesh.reference().values(mesh.to_reference(e, x), vals);
  return vals.dot(dls.local(mesh, e));
}

double sampled_sup_error(const LevelSet& ls, int n, int k, int samples, unsigned seed) {
  const ActiveMesh mesh = build_active_mesh(ls, n, k);
  const DiscreteLevelSet dls = interpolate(ls, mesh);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> pick(0, mesh.num_elements() - 1);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const int e = pick(rng);
    const Vec3 x = mesh.to_physical(e, random_point_in_tet(rng));
    worst = std::max(worst, std::abs(eval_discrete(mesh, dls, e, x) - eval_phi(ls, x)));
  }
  return worst;
}

}  // namespace

TEST(ReferenceElement, RejectsUnsupportedDegree) {
  EXPECT_THROW(ReferenceElement(0), Error);
  EXPECT_THROW(ReferenceElement(6), Error);
}

TEST(ReferenceElement, NodeCounts) {
  for (int k = 1; k <= 5; ++k) EXPECT_EQ(ReferenceElement(k).num_nodes(), (k + 1) * (k + 2) * (k + 3) / 6);
}

TEST(ReferenceElement, LinearVertexValues) {
  const ReferenceElement ref(1);
  Eigen::VectorXd v;
  ref.values(Vec3::Zero(), v);
  EXPECT_NEAR((v - Eigen::Vector4d(1, 0, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(ReferenceElement, QuadraticEdgeMidpoint) {
  const ReferenceElement ref(2);
  Eigen::VectorXd v;
  ref.values(Vec3(0.5, 0, 0), v);
  int hits = 0;
  for (int i = 0; i < ref.num_nodes(); ++i) {
    if ((ref.node(i) - Vec3(0.5, 0, 0)).norm() < 1e-15) {
      EXPECT_NEAR(v[i], 1.0, 1e-14);
      ++hits;
    } else {
      EXPECT_NEAR(v[i], 0.0, 1e-14);
    }
  }
  EXPECT_EQ(hits, 1);
}

TEST(ReferenceElement, KroneckerProperty) {
  for (int k = 1; k <= 5; ++k) {
    const ReferenceElement ref(k);
    Eigen::VectorXd v;
    for (int j = 0; j < ref.num_nodes(); ++j) {
      ref.values(ref.node(j), v);
      for (int i = 0; i < ref.num_nodes(); ++i) ASSERT_NEAR(v[i], i == j ? 1.0 : 0.0, 1e-13) << k;
    }
  }
}

TEST(ReferenceElement, PartitionOfUnity) {
  std::mt19937 rng(1);
  for (int k = 1; k <= 5; ++k) {
    const ReferenceElement ref(k);
    Eigen::VectorXd v;
    Eigen::Matrix<double, Eigen::Dynamic, 3> g;
    for (int s = 0; s < 50; ++s) {
      const Vec3 xi = random_point_in_tet(rng);
      ref.values_and_gradients(xi, v, g);
      ASSERT_NEAR(v.sum(), 1.0, 1e-12);
      ASSERT_NEAR(g.colwise().sum().norm(), 0.0, 1e-11);
    }
  }
}

TEST(ReferenceElement, GradientsMatchFiniteDifferences) {
  std::mt19937 rng(2);
  const double step = 1e-6;
  for (int k = 1; k <= 5; ++k) {
    const ReferenceElement ref(k);
    Eigen::VectorXd v, vp, vm;
    Eigen::Matrix<double, Eigen::Dynamic, 3> g;
    const Vec3 xi = random_point_in_tet(rng);
    ref.values_and_gradients(xi, v, g);
    for (int d = 0; d < 3; ++d) {
      Vec3 e = Vec3::Zero();
      e[d] = step;
      ref.values(xi + e, vp);
      ref.values(xi - e, vm);
      const Eigen::VectorXd fd = (vp - vm) / (2 * step);
      ASSERT_LE((fd - g.col(d)).norm(), 1e-6 * std::max(1.0, g.col(d).norm())) << k;
    }
  }
}

TEST(ReferenceElement, ReproducesPolynomialsOnPhysicalTet) {
  // Interpolate every monomial of degree <= k at the nodes of a physical tet
  // and compare at random points.
  std::mt19937 rng(3);
  Mat3 a;
  a << 0.9, 0.2, -0.1, 0.1, 1.1, 0.3, -0.2, 0.1, 0.8;
  const Vec3 origin(0.3, -0.4, 0.2);
  for (int k = 1; k <= 5; ++k) {
    const ReferenceElement ref(k);
    Eigen::VectorXd v;
    for (int p = 0; p <= k; ++p)
      for (int q = 0; p + q <= k; ++q)
        for (int r = 0; p + q + r <= k; ++r) {
          Eigen::VectorXd coeff(ref.num_nodes());
          for (int i = 0; i < ref.num_nodes(); ++i) coeff[i] = monomial(origin + a * ref.node(i), p, q, r);
          for (int s = 0; s < 5; ++s) {
            const Vec3 xi = random_point_in_tet(rng);
            ref.values(xi, v);
            ASSERT_NEAR(v.dot(coeff), monomial(origin + a * xi, p, q, r), 1e-12);
          }
        }
  }
}

TEST(DiscreteLevelSet, PlaneIsReproduced) {
  const auto ls = LevelSet::plane(Vec3(0.3, -0.5, 0.8), 0.17);
  for (int k = 1; k <= 3; ++k) {
    const ActiveMesh mesh = build_active_mesh(ls, 8, k);
    const DiscreteLevelSet dls = interpolate(ls, mesh);
    for (int d = 0; d < mesh.num_dofs(); ++d) ASSERT_NEAR(dls.nodal[d], eval_phi(ls, mesh.dof_position(d)), 1e-14);
  }
}

TEST(DiscreteLevelSet, QuadraticIsReproducedForDegreeTwo) {
  auto phi = [](const Vec3& x) { return x.squaredNorm() - 1.1; };
  const MeshParams params{Box{}, 8};
  for (int k = 2; k <= 3; ++k) {
    const ActiveMesh mesh = enumerate_active(params, k, phi);
    const DiscreteLevelSet dls = interpolate(phi, mesh);
    std::mt19937 rng(4);
    for (int e = 0; e < mesh.num_elements(); e += 7) {
      const Vec3 x = mesh.to_physical(e, random_point_in_tet(rng));
      ASSERT_NEAR(eval_discrete(mesh, dls, e, x), phi(x), 1e-12);
    }
  }
}

TEST(DiscreteLevelSet, VertexValuesMatchLinearInterpolant) {
  const auto ls = LevelSet::torus();
  const ActiveMesh mesh = build_active_mesh(ls, 16, 3);
  const DiscreteLevelSet dls = interpolate(ls, mesh);
  const auto& ref = mesh.reference();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Eigen::VectorXd local = dls.local(mesh, e);
    for (int m = 0; m < 4; ++m) ASSERT_EQ(local[ref.vertex_node(m)], mesh.vertex_values(e)[m]);
  }
}

TEST(DiscreteLevelSet, TorusInterpolationOrder) {
  const auto ls = LevelSet::torus();
  const double e0 = sampled_sup_error(ls, 16, 2, 100000, 11);
  const double e1 = sampled_sup_error(ls, 32, 2, 100000, 12);
  EXPECT_GE(std::log2(e0 / e1), 2.7) << e0 << ' ' << e1;
}
