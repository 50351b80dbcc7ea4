// Command-line driver for convergence and conditioning studies.

#include "itfem/io.hpp"
#include "itfem/study.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <optional>

namespace {

using itfem::Error;
using itfem::StudyConfig;
using nlohmann::json;

StudyConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config", path + ": " + e.what());
  }
  if (!j.is_object()) throw Error("config", path + ": top level must be an object");

  StudyConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "benchmark") {
        cfg.benchmark = itfem::parse_benchmark(value.get<std::string>());
      } else if (key == "k") {
        cfg.k = value.get<int>();
      } else if (key == "levels") {
        cfg.levels = value.get<int>();
      } else if (key == "base_n") {
        cfg.base_n = value.get<int>();
      } else if (key == "stabilization") {
        const auto variant = itfem::parse_variant(value.at("variant").get<std::string>());
        cfg.stabilization = itfem::StabConfig::defaults_for(variant);
        if (value.contains("rho")) itfem::apply_rho(cfg.stabilization, value.at("rho").get<std::string>());
      } else if (key == "tol") {
        cfg.tol = value.get<double>();
      } else if (key == "max_iterations") {
        cfg.max_iterations = value.get<int>();
      } else if (key == "out") {
        cfg.out = value.get<std::string>();
      } else if (key == "export_vtk") {
        cfg.export_vtk = value.get<bool>();
      } else if (key == "export_matrix") {
        cfg.export_matrix = value.get<bool>();
      } else if (key == "conditioning") {
        cfg.conditioning = value.get<bool>();
      } else if (key == "shifts") {
        cfg.shifts = value.get<std::vector<double>>();
      } else if (key == "variants") {
        cfg.variants.clear();
        for (const auto& v : value) cfg.variants.push_back(itfem::parse_variant(v.get<std::string>()));
      } else if (key == "seed") {
        cfg.seed = value.get<unsigned>();
      } else if (key == "dense_limit") {
        cfg.dense_limit = value.get<int>();
      } else {
        throw Error("config", "unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error("config", path + ": " + e.what());
  }
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out || !(out << text)) throw Error("output", "cannot write " + path);
}

int run(const StudyConfig& cfg) {
  std::ostringstream csv, md;
  if (cfg.conditioning) {
    const auto rows = itfem::run_conditioning(cfg);
    itfem::write_conditioning_csv(csv, cfg, rows);
    itfem::write_conditioning_markdown(md, cfg, rows);
  } else {
    auto observer = [&cfg](const itfem::LevelData& d) {
      std::cerr << "level " << d.level << ": n=" << d.mesh.params().n << " dofs=" << d.mesh.num_dofs()
                << " its=" << d.report.iterations << '\n';
      if (cfg.out.empty()) return;
      const std::string stem = cfg.out + "_level" + std::to_string(d.level);
      if (cfg.export_vtk) {
        itfem::write_mesh_vtk(stem + "_mesh.vtk", d.mesh, d.map);
        itfem::write_surface_vtk(stem + "_gamma_lin.vtk", d.mesh, d.map, {}, false);
        itfem::write_surface_vtk(stem + "_gamma_h.vtk", d.mesh, d.map, d.report.u, true);
      }
      if (cfg.export_matrix) itfem::write_matrix_market(stem + "_S.mtx", d.system.matrix);
    };
    const auto rows = itfem::run_convergence(cfg, observer);
    itfem::write_csv(csv, cfg, rows);
    itfem::write_markdown(md, cfg, rows);
  }
  std::cout << md.str();
  if (!cfg.out.empty()) {
    write_file(cfg.out + ".csv", csv.str());
    write_file(cfg.out + ".md", md.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Isoparametric trace FEM for the Laplace-Beltrami equation: refinement and conditioning studies"};
  std::string config_path, benchmark, stab, rho, out, shifts_text;
  std::optional<int> k, levels, base_n;
  std::optional<double> tol;
  bool export_vtk = false, export_matrix = false, conditioning = false;

  app.add_option("--config", config_path, "JSON file mirroring the study configuration")->check(CLI::ExistingFile);
  app.add_option("--benchmark", benchmark, "torus | sphere | plane");
  app.add_option("--k", k, "polynomial degree (1..5)");
  app.add_option("--levels", levels, "number of refinement levels");
  app.add_option("--base-n", base_n, "cells per axis on level 0");
  app.add_option("--stab", stab, "none | ghost | fgs | fgv | nv");
  app.add_option("--rho", rho, "hinv | hk4 | custom:EXPR (e.g. custom:2*h^-1)");
  app.add_option("--tol", tol, "relative CG tolerance");
  app.add_option("--out", out, "output prefix for CSV, Markdown and exports");
  app.add_flag("--export-vtk", export_vtk, "write VTK files per level (needs --out)");
  app.add_flag("--export-matrix", export_matrix, "write S in Matrix Market format per level (needs --out)");
  app.add_flag("--conditioning", conditioning, "run the plane-shift conditioning sweep");
  app.add_option("--shifts", shifts_text, "comma separated shifts as fractions of h");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "itfem_study: error [config] " << e.what() << "\n";
    return 2;
  }

  try {
    StudyConfig cfg = config_path.empty() ? StudyConfig{} : load_config(config_path);
    if (!benchmark.empty()) cfg.benchmark = itfem::parse_benchmark(benchmark);
    if (k) cfg.k = *k;
    if (levels) cfg.levels = *levels;
    if (base_n) cfg.base_n = *base_n;
    if (!stab.empty()) cfg.stabilization = itfem::StabConfig::defaults_for(itfem::parse_variant(stab));
    if (!rho.empty()) itfem::apply_rho(cfg.stabilization, rho);
    if (tol) cfg.tol = *tol;
    if (!out.empty()) cfg.out = out;
    if (export_vtk) cfg.export_vtk = true;
    if (export_matrix) cfg.export_matrix = true;
    if (conditioning) cfg.conditioning = true;
    if (!shifts_text.empty()) {
      cfg.shifts.clear();
      std::stringstream ss(shifts_text);
      for (std::string item; std::getline(ss, item, ',');) {
        try {
          cfg.shifts.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw Error("config", "bad shift '" + item + "'");
        }
      }
    }
    if (cfg.conditioning && benchmark.empty()) cfg.benchmark = itfem::Benchmark::plane;
    if (cfg.conditioning && !base_n && config_path.empty()) cfg.base_n = 8;
    if ((cfg.export_vtk || cfg.export_matrix) && cfg.out.empty()) {
      throw Error("config", "exports need --out");
    }
    cfg.validate();
    return run(cfg);
  } catch (const Error& e) {
    std::cerr << "itfem_study: error [" << e.stage() << "] " << e.message() << '\n';
    return e.stage() == "config" ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "itfem_study: error [internal] " << e.what() << '\n';
    return 1;
  }
}
