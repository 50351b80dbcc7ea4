#pragma once

// Legacy VTK text output of the deformed active mesh and the discrete
// surface, and Matrix Market export of assembled matrices.

#include "itfem/cut_geometry.hpp"
#include "itfem/sparse.hpp"

#include <fstream>
#include <iomanip>

namespace itfem {

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("output", "cannot open " + path);
  out << std::setprecision(12);
  return out;
}

}  // namespace detail

/// Tetrahedra of the active mesh with vertices moved by Theta_h. Cell data:
/// the element index.
inline void write_mesh_vtk(const std::string& path, const ActiveMesh& mesh, const IsoMapping& map) {
  auto out = detail::open_output(path);
  const int ne = mesh.num_elements();
  out << "# vtk DataFile Version 3.0\nactive mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << 4 * ne << " double\n";
  for (int e = 0; e < ne; ++e) {
    const auto dofs = mesh.dofs(e);
    const auto verts = mesh.vertices(e);
    for (int m = 0; m < 4; ++m) {
      const Vec3 y = verts[m] + map.displacement[dofs[mesh.reference().vertex_node(m)]];
      out << y[0] << ' ' << y[1] << ' ' << y[2] << '\n';
    }
  }
  out << "CELLS " << ne << ' ' << 5 * ne << '\n';
  for (int e = 0; e < ne; ++e) out << "4 " << 4 * e << ' ' << 4 * e + 1 << ' ' << 4 * e + 2 << ' ' << 4 * e + 3 << '\n';
  out << "CELL_TYPES " << ne << '\n';
  for (int e = 0; e < ne; ++e) out << "10\n";
  out << "CELL_DATA " << ne << "\nSCALARS element int 1\nLOOKUP_TABLE default\n";
  for (int e = 0; e < ne; ++e) out << e << '\n';
}

/// Triangles of Gamma_lin, with vertices lifted to Gamma_h when `lifted` is
/// set. Point data: u_h if `u` is non-empty.
inline void write_surface_vtk(const std::string& path, const ActiveMesh& mesh, const IsoMapping& map,
                              const Eigen::VectorXd& u = {}, bool lifted = true) {
  std::vector<Vec3> points;
  std::vector<double> values;
  std::vector<std::array<int, 3>> tris;
  Eigen::VectorXd ul(mesh.nodes_per_element());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto cut = cut_element(mesh.vertex_values(e), mesh.vertices(e));
    if (!cut) continue;
    const auto dofs = mesh.dofs(e);
    if (u.size() > 0)
      for (std::size_t a = 0; a < dofs.size(); ++a) ul[a] = u[dofs[a]];
    const int base = static_cast<int>(points.size());
    for (int p = 0; p < cut->num_points; ++p) {
      BasisEval basis;
      basis.evaluate(mesh, e, cut->ref_points[p]);
      const auto th = eval_theta(mesh, map, e, cut->ref_points[p], basis);
      points.push_back(lifted ? th.y : th.x);
      values.push_back(u.size() > 0 ? basis.values.dot(ul) : 0.0);
    }
    for (const auto& t : cut->triangles) tris.push_back({base + t[0], base + t[1], base + t[2]});
  }
  auto out = detail::open_output(path);
  out << "# vtk DataFile Version 3.0\ndiscrete surface\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << points.size() << " double\n";
  for (const auto& p : points) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  out << "POLYGONS " << tris.size() << ' ' << 4 * tris.size() << '\n';
  for (const auto& t : tris) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  if (u.size() > 0) {
    out << "POINT_DATA " << points.size() << "\nSCALARS u_h double 1\nLOOKUP_TABLE default\n";
    for (double v : values) out << v << '\n';
  }
}

/// Matrix Market coordinate format, general real, 1-based indices.
inline void write_matrix_market(const std::string& path, const CsrMatrix& m) {
  auto out = detail::open_output(path);
  out << std::setprecision(17);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.rows() << ' ' << m.nonzeros() << '\n';
  for (int r = 0; r < m.rows(); ++r)
    for (int p = m.row_ptr()[r]; p < m.row_ptr()[r + 1]; ++p)
      out << r + 1 << ' ' << m.cols()[p] + 1 << ' ' << m.values()[p] << '\n';
}

}  // namespace itfem
