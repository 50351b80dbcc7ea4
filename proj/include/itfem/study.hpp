#pragma once

// Refinement studies on the benchmark surfaces and the interface-shift
// conditioning sweep, with CSV and Markdown rendering.

#include "itfem/error_metrics.hpp"

#include <cstdio>
#include <functional>
#include <ostream>
#include <regex>
#include <sstream>

namespace itfem {

enum class Benchmark { torus, sphere, plane };

inline std::string_view to_string(Benchmark b) {
  switch (b) {
    case Benchmark::torus: return "torus";
    case Benchmark::sphere: return "sphere";
    case Benchmark::plane: return "plane";
  }
  return "?";
}

inline Benchmark parse_benchmark(const std::string& s) {
  if (s == "torus") return Benchmark::torus;
  if (s == "sphere") return Benchmark::sphere;
  if (s == "plane") return Benchmark::plane;
  throw Error("config", "unknown benchmark '" + s + "'");
}

inline StabVariant parse_variant(const std::string& s) {
  for (StabVariant v : {StabVariant::none, StabVariant::ghost_penalty, StabVariant::full_gradient_surface,
                        StabVariant::full_gradient_volume, StabVariant::normal_volume}) {
    if (s == to_string(v)) return v;
  }
  throw Error("config", "unknown stabilization '" + s + "'");
}

/// Applies a weight spec to `cfg`: "hinv" (1/h), "hk4" (k^4 h) or
/// "custom:EXPR" with EXPR one of C, h, h^P, C*h, C*h^P.
inline void apply_rho(StabConfig& cfg, const std::string& spec) {
  if (spec == "hinv") {
    cfg.scaling = RhoScaling::h_inv;
    return;
  }
  if (spec == "hk4") {
    cfg.scaling = RhoScaling::h_times_k4;
    return;
  }
  static const std::string prefix = "custom:";
  if (spec.rfind(prefix, 0) != 0) throw Error("config", "unknown rho '" + spec + "'");
  std::string expr;
  for (char ch : spec.substr(prefix.size()))
    if (ch != ' ') expr += ch;
  static const std::regex pattern(R"(^(?:([0-9.]+(?:[eE][-+]?[0-9]+)?)(?:\*(?=h))?)?(h(?:\^\(?([-+]?[0-9.]+)\)?)?)?$)");
  std::smatch m;
  if (expr.empty() || !std::regex_match(expr, m, pattern) || (!m[1].matched && !m[2].matched)) {
    throw Error("config", "cannot parse rho expression '" + expr + "'");
  }
  cfg.scaling = RhoScaling::custom;
  cfg.prefactor = m[1].matched ? std::stod(m[1].str()) : 1.0;
  cfg.exponent = m[2].matched ? (m[3].matched ? std::stod(m[3].str()) : 1.0) : 0.0;
}

struct StudyConfig {
  Benchmark benchmark = Benchmark::torus;
  int k = 2;
  int levels = 3;
  int base_n = 16;
  StabConfig stabilization;
  double tol = 1e-9;
  int max_iterations = -1;  // -1: default cap
  std::string out;          // output path prefix; empty: no files
  bool export_vtk = false;
  bool export_matrix = false;
  bool conditioning = false;
  std::vector<double> shifts{0.5, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5};  // fractions of h
  std::vector<StabVariant> variants;  // conditioning sweep; empty: all admissible
  unsigned seed = 1;
  int dense_limit = 3000;

  void validate() const {
    auto fail = [](const std::string& what) { throw Error("config", what); };
    if (k < 1 || k > 5) fail("k must be in 1..5");
    if (levels < 1) fail("levels must be >= 1");
    if (base_n < 2) fail("base_n must be >= 2");
    if (!(tol > 0.0 && tol < 1.0)) fail("tol must be in (0, 1)");
    if (conditioning) {
      if (benchmark != Benchmark::plane) fail("conditioning sweep needs the plane benchmark");
      if (shifts.empty()) fail("empty shift list");
      for (double s : shifts)
        if (!(s > 0.0 && s < 1.0)) fail("shifts must lie in (0, 1)");
    }
    try {
      stabilization.validate(k);
    } catch (const Error& e) {
      fail(e.message());
    }
  }
};

/// Level sets and solutions of the benchmarks. The plane is tilted against
/// the grid and carries the zero solution.
inline BenchmarkProblem make_problem(Benchmark b) {
  switch (b) {
    case Benchmark::torus: return {LevelSet::torus(1.0, 0.6), SolutionKind::standard};
    case Benchmark::sphere: return {LevelSet::sphere(1.0), SolutionKind::standard};
    case Benchmark::plane: return {LevelSet::plane(Vec3(1.0, 2.0, 3.0), 0.1), SolutionKind::zero};
  }
  throw Error("config", "unknown benchmark");
}

/// The plane z = shift, parallel to a grid layer.
inline BenchmarkProblem shifted_plane(double shift) {
  return {LevelSet::plane(Vec3::UnitZ(), shift), SolutionKind::zero};
}

struct StudyRow {
  int level = 0;
  int n = 0;
  double h = 0.0;
  int dofs = 0;
  double rho = 0.0;
  double theta_displacement = 0.0;
  ErrorNorms errors;
  std::array<std::optional<double>, 4> eoc;  // dist, L2, H1_t, H1_n
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Everything built on one level, handed to an observer before it is freed.
struct LevelData {
  int level;
  const ActiveMesh& mesh;
  const IsoMapping& map;
  const AssembledSystem& system;
  const SolveReport& report;
};

using LevelObserver = std::function<void(const LevelData&)>;

inline void fill_eocs(std::vector<StudyRow>& rows) {
  std::array<std::vector<double>, 4> series;
  for (const auto& r : rows) {
    series[0].push_back(r.errors.e_dist);
    series[1].push_back(r.errors.e_l2);
    series[2].push_back(r.errors.e_h1_t);
    series[3].push_back(r.errors.e_h1_n);
  }
  for (int m = 0; m < 4; ++m) {
    const auto orders = eoc(series[m]);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].eoc[m] = orders[i];
  }
}

inline StudyRow run_level(const StudyConfig& cfg, const BenchmarkProblem& pb, int level,
                          const LevelObserver& observer = {}) {
  const int n = cfg.base_n << level;
  try {
    const ActiveMesh mesh = build_active_mesh(pb.levelset, n, cfg.k);
    const IsoMapping map = build_theta(mesh, interpolate(pb.levelset, mesh));
    const AssembledSystem sys = assemble_system(mesh, map, pb, cfg.stabilization);
    const SolveReport rep = solve_constrained(sys.matrix, sys.constraint, sys.load, cfg.tol, cfg.max_iterations);
    StudyRow row;
    row.level = level;
    row.n = n;
    row.h = mesh.h();
    row.dofs = mesh.num_dofs();
    row.rho = sys.rho;
    row.theta_displacement = map.max_displacement();
    row.errors = compute_errors(mesh, map, rep.u, pb);
    row.iterations = rep.iterations;
    row.relative_residual = rep.relative_residual;
    if (observer) observer({level, mesh, map, sys, rep});
    return row;
  } catch (const Error& e) {
    throw Error(e.stage(), "level " + std::to_string(level) + " (n=" + std::to_string(n) + "): " + e.message());
  }
}

inline std::vector<StudyRow> run_convergence(const StudyConfig& cfg, const LevelObserver& observer = {}) {
  cfg.validate();
  const BenchmarkProblem pb = make_problem(cfg.benchmark);
  std::vector<StudyRow> rows;
  for (int level = 0; level < cfg.levels; ++level) rows.push_back(run_level(cfg, pb, level, observer));
  fill_eocs(rows);
  return rows;
}

struct ConditioningRow {
  double shift = 0.0;  // fraction of h
  StabVariant variant = StabVariant::none;
  int n = 0;
  int dofs = 0;
  double rho = 0.0;
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double condition = 0.0;
  bool resolved = true;
  int kernel_dimension = 0;
  int iterations = -1;
  std::string status = "ok";
};

inline std::vector<StabVariant> conditioning_variants(const StudyConfig& cfg) {
  if (!cfg.variants.empty()) return cfg.variants;
  std::vector<StabVariant> out{StabVariant::none};
  if (cfg.k == 1) out.push_back(StabVariant::ghost_penalty);
  out.push_back(StabVariant::full_gradient_surface);
  out.push_back(StabVariant::full_gradient_volume);
  out.push_back(StabVariant::normal_volume);
  return out;
}

/// Condition numbers on the hyperplane c.u = 0 for the plane z = shift * h.
/// Dense eigenvalues (exact kernel removed) up to `dense_limit` unknowns,
/// iterative estimates beyond. N_its is measured on a consistent random load.
inline std::vector<ConditioningRow> run_conditioning(const StudyConfig& cfg) {
  cfg.validate();
  const int n = cfg.base_n;
  const double h = MeshParams{Box{}, n}.h();
  std::vector<ConditioningRow> rows;
  for (double shift : cfg.shifts) {
    const BenchmarkProblem pb = shifted_plane(shift * h);
    const ActiveMesh mesh = build_active_mesh(pb.levelset, n, cfg.k);
    const IsoMapping map = build_theta(mesh, interpolate(pb.levelset, mesh));
    for (StabVariant v : conditioning_variants(cfg)) {
      ConditioningRow row;
      row.shift = shift;
      row.variant = v;
      row.n = n;
      row.dofs = mesh.num_dofs();
      try {
        const StabConfig stab = v == cfg.stabilization.variant ? cfg.stabilization : StabConfig::defaults_for(v);
        const AssembledSystem sys = assemble_system(mesh, map, pb, stab);
        row.rho = sys.rho;
        const ConditionEstimate est = mesh.num_dofs() <= cfg.dense_limit
                                          ? dense_condition(sys.matrix, sys.constraint, plane_kernel(mesh, pb.levelset, v))
                                          : estimate_condition(sys.matrix, sys.constraint);
        row.lambda_max = est.lambda_max;
        row.lambda_min = est.lambda_min;
        row.condition = est.condition();
        row.resolved = est.resolved();
        row.kernel_dimension = est.kernel_dimension;

        std::mt19937 rng(cfg.seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Eigen::VectorXd x(mesh.num_dofs());
        for (int i = 0; i < x.size(); ++i) x[i] = dist(rng);
        const Eigen::VectorXd f = sys.matrix * x;
        row.iterations = solve_constrained(sys.matrix, sys.constraint, f, cfg.tol, cfg.max_iterations).iterations;
      } catch (const Error& e) {
        row.status = std::string(e.stage()) + ": " + e.message();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

// Rendering. Scientific notation with 6 significant digits, orders with one
// decimal.

inline std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

inline std::string format_eoc(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *v);
  return buf;
}

inline std::string stab_weight_label(const StabConfig& s) {
  if (s.variant == StabVariant::none || s.variant == StabVariant::full_gradient_surface) return "n/a";
  return s.rho_formula();
}

inline std::string describe(const StudyConfig& cfg) {
  std::ostringstream os;
  os << "benchmark=" << to_string(cfg.benchmark) << " k=" << cfg.k << " levels=" << cfg.levels
     << " base_n=" << cfg.base_n << " stab=" << to_string(cfg.stabilization.variant)
     << " rho=" << stab_weight_label(cfg.stabilization) << " tol=" << format_sci(cfg.tol);
  if (cfg.conditioning) {
    os << " shifts=";
    for (std::size_t i = 0; i < cfg.shifts.size(); ++i) os << (i ? ";" : "") << format_sci(cfg.shifts[i]);
    os << " seed=" << cfg.seed;
  }
  return os.str();
}

inline void write_csv(std::ostream& os, const StudyConfig& cfg, const std::vector<StudyRow>& rows) {
  os << "# " << describe(cfg) << '\n';
  for (const auto& r : rows) {
    os << "# level " << r.level << ": n=" << r.n << " h=" << format_sci(r.h) << " rho=" << format_sci(r.rho)
       << " theta_displacement=" << format_sci(r.theta_displacement) << '\n';
  }
  os << "level,n,h,N_dofs,e_dist,eoc_dist,e_L2,eoc_L2,e_H1_t,eoc_H1_t,e_H1_n,eoc_H1_n,N_its\n";
  for (const auto& r : rows) {
    os << r.level << ',' << r.n << ',' << format_sci(r.h) << ',' << r.dofs << ',' << format_sci(r.errors.e_dist)
       << ',' << format_eoc(r.eoc[0]) << ',' << format_sci(r.errors.e_l2) << ',' << format_eoc(r.eoc[1]) << ','
       << format_sci(r.errors.e_h1_t) << ',' << format_eoc(r.eoc[2]) << ',' << format_sci(r.errors.e_h1_n) << ','
       << format_eoc(r.eoc[3]) << ',' << r.iterations << '\n';
  }
}

inline void write_markdown(std::ostream& os, const StudyConfig& cfg, const std::vector<StudyRow>& rows) {
  os << "**" << describe(cfg) << "**\n\n";
  os << "| level | N_dofs | e_dist | (eoc) | e_L2 | (eoc) | e_H1^t | (eoc) | e_H1^n | (eoc) | N_its |\n";
  os << "|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  auto paren = [](const std::optional<double>& v) { return v ? "(" + format_eoc(v) + ")" : std::string(); };
  for (const auto& r : rows) {
    os << "| " << r.level << " | " << r.dofs << " | " << format_sci(r.errors.e_dist) << " | " << paren(r.eoc[0])
       << " | " << format_sci(r.errors.e_l2) << " | " << paren(r.eoc[1]) << " | " << format_sci(r.errors.e_h1_t)
       << " | " << paren(r.eoc[2]) << " | " << format_sci(r.errors.e_h1_n) << " | " << paren(r.eoc[3]) << " | "
       << r.iterations << " |\n";
  }
}

inline void write_conditioning_csv(std::ostream& os, const StudyConfig& cfg,
                                   const std::vector<ConditioningRow>& rows) {
  os << "# " << describe(cfg) << '\n';
  os << "shift,variant,n,N_dofs,rho,lambda_max,lambda_min,cond,resolved,kernel_dim,N_its,status\n";
  for (const auto& r : rows) {
    os << format_sci(r.shift) << ',' << to_string(r.variant) << ',' << r.n << ',' << r.dofs << ','
       << format_sci(r.rho) << ',' << format_sci(r.lambda_max) << ',' << format_sci(r.lambda_min) << ','
       << format_sci(r.condition) << ',' << (r.resolved ? 1 : 0) << ',' << r.kernel_dimension << ','
       << r.iterations << ',' << r.status << '\n';
  }
}

inline void write_conditioning_markdown(std::ostream& os, const StudyConfig& cfg,
                                        const std::vector<ConditioningRow>& rows) {
  os << "**" << describe(cfg) << "**\n\n";
  os << "| shift/h | variant | lambda_max | lambda_min | cond | N_its |\n";
  os << "|---:|:---|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    os << "| " << format_sci(r.shift) << " | " << to_string(r.variant) << " | " << format_sci(r.lambda_max) << " | "
       << format_sci(r.lambda_min) << " | " << (r.resolved ? "" : ">= ") << format_sci(r.condition) << " | "
       << (r.status == "ok" ? std::to_string(r.iterations) : r.status) << " |\n";
  }
}

}  // namespace itfem
