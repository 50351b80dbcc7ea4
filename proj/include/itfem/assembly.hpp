#pragma once

// Stiffness form a_h, the stabilization variants s_h, the mean-value
// constraint vector and the compatible load vector.

#include "itfem/cut_geometry.hpp"
#include "itfem/levelset.hpp"
#include "itfem/sparse.hpp"

#include <string_view>

namespace itfem {

enum class StabVariant { none, ghost_penalty, full_gradient_surface, full_gradient_volume, normal_volume };

enum class RhoScaling {
  h_inv,       // rho = 1/h
  h_times_k4,  // rho = k^4 h
  custom,      // rho = prefactor * h^exponent
};

inline std::string_view to_string(StabVariant v) {
  switch (v) {
    case StabVariant::none: return "none";
    case StabVariant::ghost_penalty: return "ghost";
    case StabVariant::full_gradient_surface: return "fgs";
    case StabVariant::full_gradient_volume: return "fgv";
    case StabVariant::normal_volume: return "nv";
  }
  return "?";
}

struct StabConfig {
  StabVariant variant = StabVariant::normal_volume;
  RhoScaling scaling = RhoScaling::h_inv;
  double exponent = 0.0;
  double prefactor = 1.0;

  /// Customary weights: nv 1/h, fgv h, ghost 1 (fgs and none take no weight).
  static StabConfig defaults_for(StabVariant v) {
    StabConfig c;
    c.variant = v;
    switch (v) {
      case StabVariant::full_gradient_volume:
        c.scaling = RhoScaling::custom;
        c.exponent = 1.0;
        break;
      case StabVariant::ghost_penalty:
        c.scaling = RhoScaling::custom;
        c.exponent = 0.0;
        break;
      default:
        break;
    }
    return c;
  }

  double rho(double h, int k) const {
    switch (scaling) {
      case RhoScaling::h_inv: return 1.0 / h;
      case RhoScaling::h_times_k4: return double(k) * k * k * k * h;
      case RhoScaling::custom: return prefactor * std::pow(h, exponent);
    }
    return 0.0;
  }

  std::string rho_formula() const {
    switch (scaling) {
      case RhoScaling::h_inv: return "1/h";
      case RhoScaling::h_times_k4: return "k^4*h";
      case RhoScaling::custom: return std::to_string(prefactor) + "*h^" + std::to_string(exponent);
    }
    return "?";
  }

  void validate(int k) const {
    if (variant == StabVariant::ghost_penalty && k > 1) {
      throw AssemblyError("ghost penalty with k > 1 unsupported (no higher-order theory)");
    }
    if (variant == StabVariant::normal_volume && scaling == RhoScaling::custom &&
        (exponent < -1.0 || exponent > 1.0 || !(prefactor > 0.0))) {
      throw AssemblyError("normal derivative stabilization needs h <~ rho <~ 1/h");
    }
  }
};

struct AssemblyOptions {
  int surface_degree = -1;  // default 2k - 2
  int volume_degree = -1;   // default 2k

  int surface(int k) const { return surface_degree >= 0 ? surface_degree : 2 * k - 2; }
  int volume(int k) const { return volume_degree >= 0 ? volume_degree : 2 * k; }
};

namespace detail {

inline void scatter(std::vector<Triplet>& out, std::span<const int> dofs, const Eigen::MatrixXd& local) {
  for (std::size_t a = 0; a < dofs.size(); ++a)
    for (std::size_t b = 0; b < dofs.size(); ++b) out.push_back({dofs[a], dofs[b], local(a, b)});
}

}  // namespace detail

/// a_h(u, v) = sum_q w_q (P D Theta^{-T} grad u) . (P D Theta^{-T} grad v),
/// P = I - n_h n_h^T, over the lifted cut rules.
inline void assemble_a(const ActiveMesh& mesh, const IsoMapping& map, std::vector<Triplet>& out,
                       const AssemblyOptions& opt = {}) {
  const int nloc = mesh.nodes_per_element();
  Eigen::MatrixXd local(nloc, nloc);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto pts = surface_points(mesh, map, e, opt.surface(mesh.degree()));
    if (pts.empty()) continue;
    local.setZero();
    for (const auto& p : pts) {
      const Eigen::Matrix<double, Eigen::Dynamic, 3> g = p.physical_grads();
      const Mat3 proj = Mat3::Identity() - p.normal * p.normal.transpose();
      const Eigen::Matrix<double, Eigen::Dynamic, 3> tg = g * proj;
      local.noalias() += p.weight * tg * tg.transpose();
    }
    detail::scatter(out, mesh.dofs(e), local);
  }
}

inline void assemble_ghost_penalty(const ActiveMesh& mesh, const IsoMapping& map, double rho,
                                   std::vector<Triplet>& out) {
  const auto facets = interior_facets(mesh);
  const auto& tri = triangle_rule(std::max(0, 2 * mesh.degree() - 2));
  const int nloc = mesh.nodes_per_element();
  Eigen::VectorXd jump(2 * nloc);
  Eigen::MatrixXd local(2 * nloc, 2 * nloc);
  std::vector<int> dofs(2 * nloc);
  for (const auto& f : facets) {
    const Vec3 e1 = f.vertices[1] - f.vertices[0], e2 = f.vertices[2] - f.vertices[0];
    const double area2 = e1.cross(e2).norm();
    local.setZero();
    for (std::size_t q = 0; q < tri.weights.size(); ++q) {
      const Vec3 x = f.vertices[0] + tri.points[q][0] * e1 + tri.points[q][1] * e2;
      int offset = 0;
      for (int side = 0; side < 2; ++side) {
        const int e = side == 0 ? f.element_a : f.element_b;
        const Vec3 xi = mesh.to_reference(e, x);
        BasisEval basis;
        basis.evaluate(mesh, e, xi);
        const auto th = eval_theta(mesh, map, e, xi, basis);
        const Eigen::VectorXd dn = basis.grads * (th.jac.inverse().transpose() * Vec3(f.normal)).eval();
        jump.segment(offset, nloc) = (side == 0 ? 1.0 : -1.0) * dn;
        offset += nloc;
      }
      local.noalias() += rho * tri.weights[q] * area2 * jump * jump.transpose();
    }
    const auto da = mesh.dofs(f.element_a), db = mesh.dofs(f.element_b);
    std::copy(da.begin(), da.end(), dofs.begin());
    std::copy(db.begin(), db.end(), dofs.begin() + nloc);
    detail::scatter(out, dofs, local);
  }
}

/// Adds the chosen stabilization form scaled by its weight. Returns rho.
inline double assemble_s(const ActiveMesh& mesh, const IsoMapping& map, const StabConfig& cfg,
                         std::vector<Triplet>& out, const AssemblyOptions& opt = {}) {
  const int k = mesh.degree();
  cfg.validate(k);
  const int nloc = mesh.nodes_per_element();
  Eigen::MatrixXd local(nloc, nloc);
  switch (cfg.variant) {
    case StabVariant::none:
      return 0.0;
    case StabVariant::ghost_penalty: {
      const double rho = cfg.rho(mesh.h(), k);
      assemble_ghost_penalty(mesh, map, rho, out);
      return rho;
    }
    case StabVariant::full_gradient_surface: {
      for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto pts = surface_points(mesh, map, e, opt.surface(k));
        if (pts.empty()) continue;
        local.setZero();
        for (const auto& p : pts) {
          const Eigen::VectorXd dn = p.physical_grads() * p.normal;
          local.noalias() += p.weight * dn * dn.transpose();
        }
        detail::scatter(out, mesh.dofs(e), local);
      }
      return 1.0;
    }
    case StabVariant::full_gradient_volume:
    case StabVariant::normal_volume: {
      const double rho = cfg.rho(mesh.h(), k);
      const bool normal_only = cfg.variant == StabVariant::normal_volume;
      for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto pts = volume_rule(mesh, map, e, opt.volume(k));
        local.setZero();
        for (const auto& p : pts) {
          const Eigen::Matrix<double, Eigen::Dynamic, 3> g = p.physical_grads();
          if (normal_only) {
            const Eigen::VectorXd dn = g * p.normal;
            local.noalias() += rho * p.weight * dn * dn.transpose();
          } else {
            local.noalias() += rho * p.weight * g * g.transpose();
          }
        }
        detail::scatter(out, mesh.dofs(e), local);
      }
      return rho;
    }
  }
  return 0.0;
}

/// c_i = int_{Gamma_h} basis_i ds_h
inline Eigen::VectorXd assemble_constraint(const ActiveMesh& mesh, const IsoMapping& map,
                                           const AssemblyOptions& opt = {}) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(mesh.num_dofs());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = mesh.dofs(e);
    for (const auto& p : surface_points(mesh, map, e, opt.surface(mesh.degree()))) {
      for (std::size_t a = 0; a < dofs.size(); ++a) c[dofs[a]] += p.weight * p.basis.values[a];
    }
  }
  return c;
}

/// Load vector of the normal extension of f, before the mean correction.
inline Eigen::VectorXd assemble_raw_rhs(const ActiveMesh& mesh, const IsoMapping& map,
                                        const std::function<double(const Vec3&)>& f,
                                        const AssemblyOptions& opt = {}) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.num_dofs());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = mesh.dofs(e);
    for (const auto& p : surface_points(mesh, map, e, opt.surface(mesh.degree()))) {
      const double fy = f(p.y);
      for (std::size_t a = 0; a < dofs.size(); ++a) out[dofs[a]] += p.weight * fy * p.basis.values[a];
    }
  }
  return out;
}

/// f = f_raw - (<f_raw, e> / <c, e>) c, with e the all-ones vector.
inline Eigen::VectorXd correct_rhs(const Eigen::VectorXd& raw, const Eigen::VectorXd& c) {
  const double ce = c.sum();
  if (!(std::abs(ce) > 0.0)) throw AssemblyError("discrete surface has zero measure");
  return raw - (raw.sum() / ce) * c;
}

inline Eigen::VectorXd assemble_rhs(const ActiveMesh& mesh, const IsoMapping& map, const BenchmarkProblem& pb,
                                    const Eigen::VectorXd& c, const AssemblyOptions& opt = {}) {
  return correct_rhs(assemble_raw_rhs(mesh, map, [&pb](const Vec3& y) { return rhs(pb, y); }, opt), c);
}

struct AssembledSystem {
  CsrMatrix matrix;           // S = A_h
  Eigen::VectorXd constraint; // c
  Eigen::VectorXd load;       // corrected f
  Eigen::VectorXd ones;       // e
  double rho = 0.0;
};

inline AssembledSystem assemble_system(const ActiveMesh& mesh, const IsoMapping& map, const BenchmarkProblem& pb,
                                       const StabConfig& cfg, const AssemblyOptions& opt = {}) {
  AssembledSystem sys;
  std::vector<Triplet> triplets;
  assemble_a(mesh, map, triplets, opt);
  sys.rho = assemble_s(mesh, map, cfg, triplets, opt);
  sys.matrix = CsrMatrix::from_triplets(mesh.num_dofs(), std::move(triplets));
  sys.constraint = assemble_constraint(mesh, map, opt);
  sys.load = assemble_rhs(mesh, map, pb, sys.constraint, opt);
  sys.ones = Eigen::VectorXd::Ones(mesh.num_dofs());
  return sys;
}

}  // namespace itfem
