#pragma once

// Implicit structured tetrahedral background mesh (Kuhn subdivision of a
// uniform cube grid) and the active submesh of elements cut by the
// piecewise-linear interface.

#include "itfem/common.hpp"
#include "itfem/reference_element.hpp"

#include <algorithm>
#include <compare>
#include <functional>
#include <limits>
#include <span>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace itfem {

struct MeshParams {
  Box box{};
  int n = 16;  // cells per axis

  double extent() const { return box.hi[0] - box.lo[0]; }
  double h() const { return extent() / n; }

  void validate() const {
    if (n < 2) throw MeshError("need at least 2 cells per axis");
    const Vec3 ext = box.hi - box.lo;
    if (!(ext.minCoeff() > 0.0) ||
        std::abs(ext[0] - ext[1]) > 1e-12 * ext[0] || std::abs(ext[0] - ext[2]) > 1e-12 * ext[0]) {
      throw MeshError("bounding box must be a nondegenerate cube");
    }
  }

  Vec3 vertex(int i, int j, int k) const {
    return box.lo + h() * Vec3(i, j, k);
  }
};

/// Cube (i,j,k) plus Kuhn sub-tetrahedron t in 0..5. Ordered lexicographically.
struct ElementId {
  int i = 0, j = 0, k = 0, t = 0;
  auto operator<=>(const ElementId&) const = default;
};

namespace kuhn {

inline constexpr std::array<std::array<int, 3>, 6> permutations{{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

/// Lattice offsets (0/1 per axis) of the four vertices of Kuhn tet t. All six
/// tets share the main diagonal from (0,0,0) to (1,1,1).
inline std::array<std::array<int, 3>, 4> vertex_offsets(int t) {
  std::array<std::array<int, 3>, 4> v{};
  const auto& p = permutations[t];
  for (int m = 1; m < 4; ++m) {
    v[m] = v[m - 1];
    v[m][p[m - 1]] = 1;
  }
  return v;
}

/// Affine map of the reference tet onto Kuhn tet t of a unit cube.
inline Mat3 unit_jacobian(int t) {
  const auto v = vertex_offsets(t);
  Mat3 a;
  for (int m = 1; m < 4; ++m) {
    for (int d = 0; d < 3; ++d) a(d, m - 1) = v[m][d] - v[0][d];
  }
  return a;
}

}  // namespace kuhn

/// Point of the refined lattice with spacing h/k (P^k nodal points).
struct LatticePoint {
  std::int64_t i = 0, j = 0, k = 0;
  auto operator<=>(const LatticePoint&) const = default;
};

struct Facet {
  int element_a = 0;  // lower active index
  int element_b = 0;
  int face_a = 0;     // local face of a (opposite vertex index)
  int face_b = 0;
  std::array<Vec3, 3> vertices;
  Vec3 normal;        // unit, pointing from a into b
};

/// Elements of the background mesh cut by the zero level of the piecewise
/// linear level set, with the P^k dof numbering restricted to them.
class ActiveMesh {
 public:
  ActiveMesh(MeshParams params, int degree) : params_(params), ref_(degree) {
    params_.validate();
    for (int t = 0; t < 6; ++t) {
      jac_[t] = params_.h() * kuhn::unit_jacobian(t);
      jac_inv_t_[t] = jac_[t].inverse().transpose();
    }
  }

  const MeshParams& params() const { return params_; }
  double h() const { return params_.h(); }
  int degree() const { return ref_.degree(); }
  const ReferenceElement& reference() const { return ref_; }

  int num_elements() const { return static_cast<int>(elements_.size()); }
  int num_dofs() const { return static_cast<int>(dof_keys_.size()); }
  int nodes_per_element() const { return ref_.num_nodes(); }

  const std::vector<ElementId>& elements() const { return elements_; }
  const ElementId& element(int e) const { return elements_[e]; }

  /// Values of the piecewise linear level set at the four element vertices.
  const std::array<double, 4>& vertex_values(int e) const { return vertex_values_[e]; }

  std::span<const int> dofs(int e) const {
    const int nloc = nodes_per_element();
    return {dofs_.data() + static_cast<std::size_t>(e) * nloc, static_cast<std::size_t>(nloc)};
  }

  Vec3 origin(int e) const {
    const auto& id = elements_[e];
    return params_.vertex(id.i, id.j, id.k);
  }
  /// Jacobian of the affine map reference tet -> element.
  const Mat3& jacobian(int e) const { return jac_[elements_[e].t]; }
  const Mat3& jacobian_inv_t(int e) const { return jac_inv_t_[elements_[e].t]; }
  double volume(int e) const { return std::abs(jacobian(e).determinant()) / 6.0; }

  Vec3 to_physical(int e, const Vec3& xi) const { return origin(e) + jacobian(e) * xi; }
  Vec3 to_reference(int e, const Vec3& x) const {
    return jacobian_inv_t(e).transpose() * (x - origin(e));
  }

  std::array<Vec3, 4> vertices(int e) const {
    const auto& id = elements_[e];
    const auto off = kuhn::vertex_offsets(id.t);
    std::array<Vec3, 4> v;
    for (int m = 0; m < 4; ++m) {
      v[m] = params_.vertex(id.i + off[m][0], id.j + off[m][1], id.k + off[m][2]);
    }
    return v;
  }

  /// Refined-lattice coordinates of local node `node` of element e.
  LatticePoint node_lattice_point(int e, int node) const {
    return lattice_point(elements_[e], node);
  }

  LatticePoint lattice_point(const ElementId& id, int node) const {
    const int k = degree();
    const auto off = kuhn::vertex_offsets(id.t);
    const auto& a = ref_.alpha(node);
    LatticePoint p{std::int64_t{id.i} * k, std::int64_t{id.j} * k, std::int64_t{id.k} * k};
    for (int m = 0; m < 4; ++m) {
      p.i += a[m] * off[m][0];
      p.j += a[m] * off[m][1];
      p.k += a[m] * off[m][2];
    }
    return p;
  }

  Vec3 lattice_position(const LatticePoint& p) const {
    return params_.box.lo + (h() / degree()) * Vec3(double(p.i), double(p.j), double(p.k));
  }

  /// Global dof of a refined lattice point, or -1 if it is not an active node.
  int find_dof(const LatticePoint& p) const {
    const auto key = lattice_key(p);
    const auto it = std::lower_bound(dof_keys_.begin(), dof_keys_.end(), key);
    if (it == dof_keys_.end() || *it != key) return -1;
    return static_cast<int>(it - dof_keys_.begin());
  }

  LatticePoint dof_lattice_point(int dof) const {
    const std::int64_t m = std::int64_t{params_.n} * degree() + 1;
    const std::int64_t key = dof_keys_[dof];
    return {key % m, (key / m) % m, key / (m * m)};
  }

  Vec3 dof_position(int dof) const { return lattice_position(dof_lattice_point(dof)); }

  /// Active elements whose nodal set contains the dof (the patch omega(x_i)).
  std::span<const int> patch(int dof) const {
    return {patch_elements_.data() + patch_ptr_[dof],
            static_cast<std::size_t>(patch_ptr_[dof + 1] - patch_ptr_[dof])};
  }

  // Construction helpers used by enumerate_active.
  void set_elements(std::vector<ElementId> elements, std::vector<std::array<double, 4>> values) {
    elements_ = std::move(elements);
    vertex_values_ = std::move(values);
    distribute_dofs();
  }

 private:
  std::int64_t lattice_key(const LatticePoint& p) const {
    const std::int64_t m = std::int64_t{params_.n} * degree() + 1;
    return p.i + m * (p.j + m * p.k);
  }

  void distribute_dofs() {
    const int nloc = nodes_per_element();
    std::vector<std::int64_t> keys(elements_.size() * nloc);
    for (int e = 0; e < num_elements(); ++e) {
      for (int a = 0; a < nloc; ++a) keys[std::size_t(e) * nloc + a] = lattice_key(lattice_point(elements_[e], a));
    }
    dof_keys_ = keys;
    std::sort(dof_keys_.begin(), dof_keys_.end());
    dof_keys_.erase(std::unique(dof_keys_.begin(), dof_keys_.end()), dof_keys_.end());
    dofs_.resize(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      dofs_[i] = static_cast<int>(std::lower_bound(dof_keys_.begin(), dof_keys_.end(), keys[i]) -
                                  dof_keys_.begin());
    }
    patch_ptr_.assign(dof_keys_.size() + 1, 0);
    for (int d : dofs_) ++patch_ptr_[d + 1];
    for (std::size_t i = 0; i < dof_keys_.size(); ++i) patch_ptr_[i + 1] += patch_ptr_[i];
    patch_elements_.resize(dofs_.size());
    std::vector<int> fill(patch_ptr_.begin(), patch_ptr_.end() - 1);
    for (int e = 0; e < num_elements(); ++e) {
      for (int a = 0; a < nloc; ++a) patch_elements_[fill[dofs_[std::size_t(e) * nloc + a]]++] = e;
    }
  }

  MeshParams params_;
  ReferenceElement ref_;
  std::array<Mat3, 6> jac_;
  std::array<Mat3, 6> jac_inv_t_;
  std::vector<ElementId> elements_;
  std::vector<std::array<double, 4>> vertex_values_;
  std::vector<int> dofs_;
  std::vector<std::int64_t> dof_keys_;
  std::vector<int> patch_ptr_;
  std::vector<int> patch_elements_;
};

/// Zero vertex values are moved to +1e-14 h so every vertex has a strict sign.
inline double perturb_zero(double value, double h) { return value == 0.0 ? 1e-14 * h : value; }

inline bool is_cut(const std::array<double, 4>& v) {
  const bool any_neg = v[0] < 0 || v[1] < 0 || v[2] < 0 || v[3] < 0;
  const bool any_pos = v[0] > 0 || v[1] > 0 || v[2] > 0 || v[3] > 0;
  return any_neg && any_pos;
}

/// Collects all tets whose (perturbed) vertex values have mixed signs.
/// `vertex_value(x)` gives the level set at a lattice vertex. If `lipschitz`
/// is finite, cubes whose centre value exceeds the Lipschitz bound over the
/// cube are skipped without evaluating their corners.
inline ActiveMesh enumerate_active(const MeshParams& params, int degree,
                                   const std::function<double(const Vec3&)>& vertex_value,
                                   double lipschitz = std::numeric_limits<double>::infinity()) {
  ActiveMesh mesh(params, degree);
  const int n = params.n;
  const double h = params.h();
  const double reach = lipschitz * 0.5 * std::sqrt(3.0) * h * (1.0 + 1e-12);
  std::vector<ElementId> active;
  std::vector<std::array<double, 4>> values;
  std::array<std::array<std::array<int, 3>, 4>, 6> offsets;
  for (int t = 0; t < 6; ++t) offsets[t] = kuhn::vertex_offsets(t);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (std::isfinite(reach)) {
          const Vec3 centre = params.vertex(i, j, k) + Vec3::Constant(0.5 * h);
          if (std::abs(vertex_value(centre)) > reach) continue;
        }
        double corner[2][2][2];
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
              const double v = vertex_value(params.vertex(i + a, j + b, k + c));
              if (!std::isfinite(v)) throw MeshError("non-finite level set value at a vertex");
              corner[a][b][c] = perturb_zero(v, h);
            }
        for (int t = 0; t < 6; ++t) {
          std::array<double, 4> v;
          for (int m = 0; m < 4; ++m) v[m] = corner[offsets[t][m][0]][offsets[t][m][1]][offsets[t][m][2]];
          if (is_cut(v)) {
            active.push_back({i, j, k, t});
            values.push_back(v);
          }
        }
      }
    }
  }
  if (active.empty()) throw MeshError("surface does not intersect mesh");
  mesh.set_elements(std::move(active), std::move(values));
  return mesh;
}

/// Active elements containing a refined-lattice node.
inline std::vector<int> node_patch(const ActiveMesh& mesh, const LatticePoint& node) {
  const int dof = mesh.find_dof(node);
  if (dof < 0) throw MeshError("node is not a nodal point of the active mesh");
  const auto p = mesh.patch(dof);
  return {p.begin(), p.end()};
}

/// Faces shared by two active elements, each listed once, sorted by
/// (element_a, element_b).
inline std::vector<Facet> interior_facets(const ActiveMesh& mesh) {
  struct Entry {
    int element;
    int face;
  };
  const int n1 = mesh.params().n + 1;
  auto vkey = [n1](const ElementId& id, const std::array<int, 3>& off) {
    return std::int64_t(id.i + off[0]) + std::int64_t(n1) * (std::int64_t(id.j + off[1]) + std::int64_t(n1) * (id.k + off[2]));
  };
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
      std::size_t h = std::hash<std::int64_t>{}(k[0]);
      h = h * 1000003u ^ std::hash<std::int64_t>{}(k[1]);
      h = h * 1000003u ^ std::hash<std::int64_t>{}(k[2]);
      return h;
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<Entry>, KeyHash> faces;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& id = mesh.element(e);
    const auto off = kuhn::vertex_offsets(id.t);
    for (int f = 0; f < 4; ++f) {
      std::array<std::int64_t, 3> key;
      int c = 0;
      for (int m = 0; m < 4; ++m)
        if (m != f) key[c++] = vkey(id, off[m]);
      std::sort(key.begin(), key.end());
      faces[key].push_back({e, f});
    }
  }
  std::vector<Facet> out;
  for (const auto& [key, list] : faces) {
    if (list.size() > 2) throw MeshError("non-conforming face shared by more than two elements");
    if (list.size() != 2) continue;
    Entry a = list[0], b = list[1];
    if (b.element < a.element) std::swap(a, b);
    Facet facet;
    facet.element_a = a.element;
    facet.element_b = b.element;
    facet.face_a = a.face;
    facet.face_b = b.face;
    const auto va = mesh.vertices(a.element);
    int c = 0;
    for (int m = 0; m < 4; ++m)
      if (m != a.face) facet.vertices[c++] = va[m];
    Vec3 nrm = (facet.vertices[1] - facet.vertices[0]).cross(facet.vertices[2] - facet.vertices[0]).normalized();
    // Orient away from the opposite vertex of element a.
    if (nrm.dot(va[a.face] - facet.vertices[0]) > 0) nrm = -nrm;
    facet.normal = nrm;
    out.push_back(facet);
  }
  std::sort(out.begin(), out.end(), [](const Facet& x, const Facet& y) {
    return std::tie(x.element_a, x.element_b) < std::tie(y.element_a, y.element_b);
  });
  return out;
}

}  // namespace itfem
