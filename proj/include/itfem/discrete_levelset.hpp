#pragma once

#include "itfem/levelset.hpp"
#include "itfem/mesh.hpp"

#include <functional>

namespace itfem {

/// phi_h = I^k phi on the active mesh (one coefficient per global dof) and
/// the piecewise linear phi_hat = I^1 phi_h, stored per element as the
/// vertex values held by the mesh.
struct DiscreteLevelSet {
  int degree = 1;
  Eigen::VectorXd nodal;

  /// phi_h|_T as a global polynomial: local coefficients of element e.
  Eigen::VectorXd local(const ActiveMesh& mesh, int e) const {
    const auto dofs = mesh.dofs(e);
    Eigen::VectorXd c(dofs.size());
    for (std::size_t a = 0; a < dofs.size(); ++a) c[a] = nodal[dofs[a]];
    return c;
  }
};

/// Builds the background mesh for `ls` and interpolates it.
inline ActiveMesh build_active_mesh(const LevelSet& ls, int n, int degree) {
  MeshParams params{ls.domain_box, n};
  return enumerate_active(params, degree, [&ls](const Vec3& x) { return eval_phi(ls, x); },
                          ls.lipschitz());
}

/// Nodal interpolation of a scalar function. Vertex nodes take the (zero
/// perturbed) vertex values used for the cut classification, so
/// phi_hat(x_i) = phi_h(x_i) holds exactly at all vertices.
inline DiscreteLevelSet interpolate(const std::function<double(const Vec3&)>& phi,
                                    const ActiveMesh& mesh) {
  DiscreteLevelSet dls;
  dls.degree = mesh.degree();
  dls.nodal.resize(mesh.num_dofs());
  for (int d = 0; d < mesh.num_dofs(); ++d) dls.nodal[d] = phi(mesh.dof_position(d));
  const auto& ref = mesh.reference();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = mesh.dofs(e);
    for (int m = 0; m < 4; ++m) dls.nodal[dofs[ref.vertex_node(m)]] = mesh.vertex_values(e)[m];
  }
  return dls;
}

inline DiscreteLevelSet interpolate(const LevelSet& ls, const ActiveMesh& mesh) {
  return interpolate([&ls](const Vec3& x) { return eval_phi(ls, x); }, mesh);
}

}  // namespace itfem
