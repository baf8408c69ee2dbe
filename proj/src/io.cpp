#include "anisopf/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace anisopf {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "write to '" + path + "' failed");
}

nlohmann::ordered_json report_json(const StepReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["outer_iterations"] = r.outer_iterations;
  j["pgs_sweeps"] = r.pgs_sweeps;
  j["active_plus"] = r.active_plus;
  j["active_minus"] = r.active_minus;
  j["last_change"] = r.last_change;
  j["residual"] = r.residual;
  j["omega"] = r.omega;
  j["wall_seconds"] = r.wall_seconds;
  j["converged"] = r.converged;
  return j;
}

int infer_dim(const std::string& preset) {
  return preset.rfind("cube3d", 0) == 0 || preset.rfind("hexprism3d", 0) == 0 ? 3 : 2;
}

}  // namespace

std::string vtk_string(const NodalField& phi, const NodalField& w) {
  if (!phi.mesh || phi.mesh != w.mesh) throw Error(ErrorKind::MeshMismatch, "fields must share one mesh");
  const auto& mesh = *phi.mesh;
  const int d = mesh.dim();
  std::string out;
  out.reserve(static_cast<std::size_t>(mesh.num_vertices()) * 120);
  out += "# vtk DataFile Version 3.0\nanisopf phase field\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(mesh.num_vertices()) + " double\n";
  for (const auto& x : mesh.vertices()) out += fmt(x[0]) + " " + fmt(x[1]) + " " + fmt(x[2]) + "\n";
  const auto ne = mesh.num_elements();
  out += "CELLS " + std::to_string(ne) + " " + std::to_string(static_cast<long long>(ne) * (d + 2)) + "\n";
  for (const auto& el : mesh.elements()) {
    out += std::to_string(d + 1);
    for (int i = 0; i <= d; ++i) out += " " + std::to_string(el.v[i]);
    out += "\n";
  }
  out += "CELL_TYPES " + std::to_string(ne) + "\n";
  const std::string type = d == 2 ? "5\n" : "10\n";
  for (Index e = 0; e < ne; ++e) out += type;
  out += "POINT_DATA " + std::to_string(mesh.num_vertices()) + "\n";
  for (const auto* f : {&phi, &w}) {
    out += std::string("SCALARS ") + (f == &phi ? "phi" : "w") + " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < f->values.size(); ++i) out += fmt(f->values(i)) + "\n";
  }
  return out;
}

void write_vtk(const NodalField& phi, const NodalField& w, const std::string& path) {
  write_text(path, vtk_string(phi, w));
}

void write_vtk(const SimulationState& state, const std::string& path) { write_vtk(state.phi, state.w, path); }

std::string energy_csv_header() {
  return "t,E_h,F_h,diffusive_dissipation,kinetic_dissipation,stab2_slack,stab3_slack\n";
}

std::string energy_csv_row(const EnergyRow& r) {
  return fmt(r.t) + "," + fmt(r.E_h) + "," + fmt(r.F_h) + "," + fmt(r.diffusive_dissipation) + "," +
         fmt(r.kinetic_dissipation) + "," + fmt(r.stab2_slack) + "," + fmt(r.stab3_slack) + "\n";
}

void write_energy_csv(const std::vector<EnergyRow>& ledger, const std::string& path) {
  std::string text = energy_csv_header();
  for (const auto& r : ledger) text += energy_csv_row(r);
  write_text(path, text);
}

void write_report_json(const RunConfig& cfg, const SimulationState& state, const std::string& path,
                       const std::string& error) {
  nlohmann::ordered_json j;
  j["config"] = serialize_config(cfg);
  j["steps"] = state.step;
  j["t"] = state.t;
  j["vertices"] = state.mesh ? state.mesh->num_vertices() : 0;
  j["elements"] = state.mesh ? state.mesh->num_elements() : 0;
  if (!state.ledger.empty()) {
    j["E_h"] = state.ledger.back().E_h;
    j["F_h"] = state.ledger.back().F_h;
    double worst2 = -std::numeric_limits<double>::infinity(), worst3 = worst2;
    for (std::size_t i = 1; i < state.ledger.size(); ++i) {
      worst2 = std::max(worst2, state.ledger[i].stab2_slack);
      worst3 = std::max(worst3, state.ledger[i].stab3_slack);
    }
    if (state.ledger.size() > 1) {
      j["max_stab2_slack"] = worst2;
      j["max_stab3_slack"] = worst3;
    }
  }
  auto& steps = j["solver"] = nlohmann::ordered_json::array();
  for (const auto& r : state.reports) steps.push_back(report_json(r));
  if (!error.empty()) j["error"] = error;
  write_text(path, j.dump(2) + "\n");
}

ThresholdResult check_threshold(const RunConfig& in) {
  RunConfig cfg = in;
  cfg.model.initial = "liquid";
  const Model model = cfg.build_model();
  const auto bl = boundary_layer_check(model.potential, model.shape, cfg.physics.eps, cfg.physics.alpha,
                                       cfg.physics.a, cfg.physics.u_D);
  ThresholdResult res;
  res.critical_uD = bl.critical_uD;
  RunOptions opts;
  opts.write_files = false;
  Vector phi0, w0;
  opts.on_step = [&](const SimulationState& s, const StabilityReport&) {
    if (phi0.size() == 0) {
      phi0 = Vector::Ones(s.phi.values.size());
      w0 = Vector::Constant(s.w.values.size(), cfg.physics.u_D);
    }
    res.drift = std::max({res.drift, (s.phi.values - phi0).cwiseAbs().maxCoeff(),
                          (s.w.values - w0).cwiseAbs().maxCoeff()});
    res.min_phi = std::min(res.min_phi, s.phi.values.minCoeff());
    res.steps = s.step;
  };
  run_simulation(cfg, opts);
  if (res.min_phi < 1.0 - 1e-3) res.verdict = "layer-forms";
  else if (res.drift <= 1e-7) res.verdict = "stable";
  else res.verdict = "inconclusive";
  return res;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Anisotropic phase field solidification solver"};
  app.require_subcommand(1);

  std::string config_path, out_dir, preset;
  int vtk_every = -1;
  std::int64_t samples = 100000;
  std::uint64_t seed = 1;
  int dim = 0;

  auto* simulate = app.add_subcommand("simulate", "Run a simulation from a config file");
  simulate->add_option("config", config_path, "configuration file")->required();
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--vtk-every", vtk_every, "write a VTK file every N steps")->check(CLI::NonNegativeNumber);

  auto* aniso = app.add_subcommand("check-anisotropy", "Sample the structural inequalities of a density");
  aniso->add_option("preset", preset, "anisotropy preset")->required();
  aniso->add_option("--samples", samples, "number of random samples")->check(CLI::PositiveNumber);
  aniso->add_option("--seed", seed, "random seed");
  aniso->add_option("--dim", dim, "dimension (default: from the preset)")->check(CLI::IsMember({2, 3}));

  auto* threshold = app.add_subcommand("check-threshold", "Boundary-layer experiment on a uniform solid");
  threshold->add_option("config", config_path, "configuration file")->required();

  auto* verify = app.add_subcommand("verify", "Run a simulation with fatal stability checks");
  verify->add_option("config", config_path, "configuration file")->required();
  verify->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*aniso) {
      const auto a = anisotropy_preset(preset, dim != 0 ? dim : infer_dim(preset));
      const auto rep = verify_anisotropy_inequalities(a, samples, seed);
      nlohmann::ordered_json j;
      j["preset"] = preset;
      j["samples"] = rep.samples;
      j["growth_violations"] = rep.growth_violations;
      j["convexity_violations"] = rep.convexity_violations;
      j["monotonicity_violations"] = rep.monotonicity_violations;
      j["b_monotonicity_violations"] = rep.b_monotonicity_violations;
      j["b_stability_violations"] = rep.b_stability_violations;
      j["worst_slack"] = rep.worst_slack;
      std::cout << j.dump() << "\n";
      return rep.total_violations() == 0 ? 0 : 1;
    }

    RunConfig cfg;
    try {
      cfg = load_config(config_path);
    } catch (const Error& e) {
      std::cerr << e.what() << "\n";
      return 2;
    }
    if (!out_dir.empty()) cfg.output.out_dir = out_dir;
    if (vtk_every >= 0) cfg.output.vtk_every = vtk_every;

    if (*threshold) {
      const auto res = check_threshold(cfg);
      nlohmann::ordered_json j;
      j["u_D"] = cfg.physics.u_D;
      j["critical_uD"] = res.critical_uD;
      j["steps"] = res.steps;
      j["drift"] = res.drift;
      j["min_phi"] = res.min_phi;
      j["verdict"] = res.verdict;
      std::cout << res.verdict << "\n" << j.dump() << "\n";
      return res.verdict == "inconclusive" ? 1 : 0;
    }

    RunOptions opts;
    opts.fatal_stability = static_cast<bool>(*verify);
    const auto state = run_simulation(cfg, opts);
    std::cout << "steps " << state.step << ", t = " << fmt(state.t) << ", F_h = " << fmt(state.ledger.back().F_h)
              << ", output in " << cfg.output_directory() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == ErrorKind::UnknownPreset ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}

}  // namespace anisopf
