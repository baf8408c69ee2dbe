#include "anisopf/timestepper.hpp"

#include "anisopf/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace anisopf {

namespace {

double norm(const Point& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

double seed_value(const Point& x, double R0, double eps) {
  const double r = norm(x) - R0;
  const double half = eps * std::numbers::pi / 2.0;
  if (r <= -half) return -1.0;
  if (r >= half) return 1.0;
  return std::sin(r / eps);
}

void impose_boundary_temperature(const SimplicialMesh& mesh, double u_D, Vector& w) {
  for (Index i = 0; i < mesh.num_vertices(); ++i) {
    if (mesh.is_dirichlet(i)) w(i) = u_D;
  }
}

Energies energy_on(const SimplicialMesh& mesh, const MeshGeometry& geom, const Vector& mass, const Vector& phi,
                   const Vector& w, const PhysicalParams& p, const Model& model) {
  double heat = 0.0, well = 0.0, latent = 0.0;
  for (Index i = 0; i < mesh.num_vertices(); ++i) {
    const double dw = w(i) - p.u_D;
    heat += mass(i) * dw * dw;
    well += mass(i) * model.potential.psi(phi(i));
    latent += mass(i) * shape_eval(model.shape, phi(i)).P;
  }
  double gradient = 0.0;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const double g = model.anisotropy.gamma(element_gradient(mesh, geom, e, phi));
    gradient += geom[static_cast<std::size_t>(e)].volume * g * g;
  }
  Energies out;
  out.E_h = 0.5 * p.theta * heat +
            (p.lambda * p.alpha / p.a) / model.potential.c_psi() * (0.5 * p.eps * gradient + well / p.eps);
  out.F_h = out.E_h - p.lambda * p.u_D * latent;
  return out;
}

StabilityReport stability_terms(const SimplicialMesh& mesh, const MeshGeometry& geom, const Vector& phi_old,
                                const Vector& w_old, const Vector& phi_new, const Vector& w_new,
                                const PhysicalParams& p, const Model& model, double tau) {
  const Vector mass = lumped_mass(mesh, geom);
  StabilityReport r;
  r.old_energy = energy_on(mesh, geom, mass, phi_old, w_old, p, model);
  r.new_energy = energy_on(mesh, geom, mass, phi_new, w_new, p, model);

  const bool obstacle = model.is_obstacle();
  for (Index i = 0; i < mesh.num_vertices(); ++i) {
    const double rho_hat = obstacle ? shape_hat(model.shape, phi_old(i), phi_new(i))
                                    : shape_cutoff(model.shape, phi_old(i), phi_new(i));
    r.latent_work += mass(i) * rho_hat * (phi_new(i) - phi_old(i));
  }
  r.latent_work *= p.u_D * p.lambda;

  const SparseMatrix diffusion = diffusion_stiffness(mesh, geom, phi_old, p.k_plus, p.k_minus, !obstacle);
  r.diffusive_dissipation = tau * w_new.dot(diffusion * w_new);

  const Vector mobility = lumped_mass_element_weighted(
      mesh, geom, mobility_weights(mesh, geom, model.anisotropy, model.mobility, phi_old));
  const Vector rate = (phi_new - phi_old) / tau;
  r.kinetic_dissipation =
      tau * (p.lambda * p.rho / p.a) * (p.eps / model.potential.c_psi()) * mobility.dot(rate.cwiseAbs2());

  const double dissipation = r.diffusive_dissipation + r.kinetic_dissipation;
  r.stab2_slack = r.new_energy.E_h - r.latent_work + dissipation - r.old_energy.E_h;
  r.stab3_slack = r.new_energy.F_h + dissipation - r.old_energy.F_h;
  r.stab2_holds = r.stab2_slack <= 1e-8 * (1.0 + std::abs(r.old_energy.E_h));
  r.stab3_holds = r.stab3_slack <= 1e-8 * (1.0 + std::abs(r.old_energy.F_h));

  const bool negative_split = model.shape.split == SplitSign::ForNegativeUD;
  r.stab3_applicable = p.u_D == 0.0 || (p.u_D < 0.0) == negative_split;
  if (!obstacle && r.stab3_applicable && p.u_D != 0.0) {
    const double bound = 2.0 / std::sqrt(3.0);
    r.stab3_applicable = negative_split
                             ? std::max(phi_old.maxCoeff(), phi_new.maxCoeff()) <= bound
                             : std::min(phi_old.minCoeff(), phi_new.minCoeff()) >= -bound;
  }
  return r;
}

EnergyRow ledger_row(double t, const StabilityReport& s) {
  return {t, s.new_energy.E_h, s.new_energy.F_h, s.diffusive_dissipation, s.kinetic_dissipation, s.stab2_slack,
          s.stab3_slack};
}

void check_fatal(const StabilityReport& s) {
  if (!s.stab2_holds) {
    throw Error(ErrorKind::StabilityViolation, "energy bound violated, slack " + std::to_string(s.stab2_slack));
  }
  if (s.stab3_applicable && !s.stab3_holds) {
    throw Error(ErrorKind::StabilityViolation, "free energy bound violated, slack " + std::to_string(s.stab3_slack));
  }
}

std::string vtk_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06d.vtk", step);
  return buf;
}

}  // namespace

NodalField initial_phase(const MeshPtr& mesh, double R0, double eps) {
  if (eps * std::numbers::pi / 2.0 >= R0) {
    throw Error(ErrorKind::InterfaceTooWide, "interface half width eps*pi/2 = " + std::to_string(eps * std::numbers::pi / 2.0) +
                                                 " does not fit into R0 = " + std::to_string(R0));
  }
  NodalField f{mesh, Vector(mesh->num_vertices())};
  for (Index i = 0; i < mesh->num_vertices(); ++i) f.values(i) = seed_value(mesh->vertex(i), R0, eps);
  return f;
}

NodalField initial_temperature(const MeshPtr& mesh, const PhysicalParams& p) {
  if (p.theta == 0.0) throw Error(ErrorKind::NotApplicable, "initial temperature is only used for theta > 0");
  NodalField f{mesh, Vector(mesh->num_vertices())};
  const double scale = p.u_D / (1.0 - std::exp(p.R0 - p.H));
  for (Index i = 0; i < mesh->num_vertices(); ++i) {
    const double z = norm(mesh->vertex(i));
    if (z <= p.R0) f.values(i) = 0.0;
    else if (z < p.H) f.values(i) = scale * (1.0 - std::exp(p.R0 - z));
    else f.values(i) = p.u_D;
  }
  impose_boundary_temperature(*mesh, p.u_D, f.values);
  return f;
}

Energies discrete_energy(const NodalField& phi, const NodalField& w, const PhysicalParams& params, const Model& model) {
  if (phi.mesh != w.mesh) throw Error(ErrorKind::MeshMismatch, "phase and temperature live on different meshes");
  const auto& mesh = *phi.mesh;
  if (phi.values.size() != mesh.num_vertices() || w.values.size() != mesh.num_vertices()) {
    throw Error(ErrorKind::MeshMismatch, "field size does not match the mesh");
  }
  const auto geom = compute_geometry(mesh);
  return energy_on(mesh, geom, lumped_mass(mesh, geom), phi.values, w.values, params, model);
}

StabilityReport verify_stability(const SimulationState& prev, const SimulationState& next,
                                 const PhysicalParams& params, const Model& model, double tau) {
  if (prev.mesh != next.mesh || prev.phi.mesh != next.phi.mesh || prev.w.mesh != next.w.mesh ||
      prev.phi.mesh != prev.mesh) {
    throw Error(ErrorKind::MeshChanged, "stability is checked between states on the same mesh");
  }
  const auto geom = compute_geometry(*prev.mesh);
  return stability_terms(*prev.mesh, geom, prev.phi.values, prev.w.values, next.phi.values, next.w.values, params,
                         model, tau);
}

int step_count(const PhysicalParams& p) {
  return static_cast<int>(std::floor(p.T_end / p.tau * (1.0 + 1e-12)));
}

SimulationState initial_state(const RunConfig& cfg, const Model& model) {
  const auto& p = cfg.physics;
  const bool seed = cfg.model.initial == "seed";
  if (seed && p.eps * std::numbers::pi / 2.0 >= p.R0) {
    throw Error(ErrorKind::InterfaceTooWide, "interface half width eps*pi/2 does not fit into R0");
  }
  SimulationState s;
  if (cfg.mesh.adaptive) {
    const std::function<double(const Point&)> fn = seed ? std::function<double(const Point&)>(
                                                              [&](const Point& x) { return seed_value(x, p.R0, p.eps); })
                                                        : [](const Point&) { return 1.0; };
    s.mesh = adapt_to_function(p.H, p.dim, p.bc, fn, cfg.mesh.N_f, cfg.mesh.N_c, {cfg.mesh.safety_layers});
  } else {
    s.mesh = std::make_shared<const SimplicialMesh>(build_uniform_mesh(p.H, cfg.mesh.N_f, p.dim, p.bc));
  }
  s.phi = seed ? initial_phase(s.mesh, p.R0, p.eps) : NodalField{s.mesh, Vector::Ones(s.mesh->num_vertices())};
  s.w = (p.theta > 0.0 && seed) ? initial_temperature(s.mesh, p)
                                : NodalField{s.mesh, Vector::Constant(s.mesh->num_vertices(), p.u_D)};
  const Energies e = discrete_energy(s.phi, s.w, p, model);
  s.ledger.push_back({0.0, e.E_h, e.F_h, 0.0, 0.0, 0.0, 0.0});
  return s;
}

StepReport advance(SimulationState& state, const RunConfig& cfg, const Model& model, StabilityReport* stability) {
  const auto& p = cfg.physics;
  const auto& mesh = *state.mesh;
  const auto geom = compute_geometry(mesh);
  const StepContext ctx{mesh, geom, p, model, state.phi.values, state.w.values, p.tau};
  StepResult res = model.is_obstacle() ? obstacle_step(ctx, cfg.solver) : newton_smooth_step(ctx, cfg.solver);
  impose_boundary_temperature(mesh, p.u_D, res.w);

  const StabilityReport s =
      stability_terms(mesh, geom, state.phi.values, state.w.values, res.phi, res.w, p, model, p.tau);
  state.phi.values = std::move(res.phi);
  state.w.values = std::move(res.w);
  state.t += p.tau;
  state.step += 1;
  state.ledger.push_back(ledger_row(state.t, s));
  state.reports.push_back(res.report);
  if (stability != nullptr) *stability = s;
  return res.report;
}

SimulationState run_simulation(const RunConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const Model model = cfg.build_model();
  const auto& p = cfg.physics;
  const int steps = options.max_steps >= 0 ? options.max_steps : step_count(p);
  const std::filesystem::path dir = cfg.output_directory();

  SimulationState state = initial_state(cfg, model);
  std::ofstream csv;
  if (options.write_files) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create output directory '" + dir.string() + "'");
    csv.open(dir / "energy.csv");
    if (!csv) throw Error(ErrorKind::IoError, "cannot write '" + (dir / "energy.csv").string() + "'");
    csv << energy_csv_header() << energy_csv_row(state.ledger.back()) << std::flush;
    if (cfg.output.vtk_every > 0) write_vtk(state, (dir / vtk_name(0)).string());
  }

  std::string failure;
  try {
    for (int n = 1; n <= steps; ++n) {
      try {
        if (cfg.mesh.adaptive && n > 1 && (n - 1) % cfg.mesh.remesh_every == 0) {
          auto [mesh, map] = adapt_to_interface(state.phi, cfg.mesh.N_f, cfg.mesh.N_c, {cfg.mesh.safety_layers});
          if (mesh != state.mesh) {
            state.mesh = mesh;
            state.phi = transfer_field(state.phi, map);
            state.w = transfer_field(state.w, map);
            if (model.is_obstacle()) state.phi.values = state.phi.values.cwiseMax(-1.0).cwiseMin(1.0);
            impose_boundary_temperature(*mesh, p.u_D, state.w.values);
          }
        }
        StabilityReport s;
        advance(state, cfg, model, &s);
        if (options.write_files) {
          csv << energy_csv_row(state.ledger.back()) << std::flush;
          if (cfg.output.vtk_every > 0 && n % cfg.output.vtk_every == 0) {
            write_vtk(state, (dir / vtk_name(n)).string());
          }
        }
        if (options.on_step) options.on_step(state, s);
        if (options.fatal_stability) check_fatal(s);
      } catch (const Error& e) {
        const std::string msg = e.what();
        const auto colon = msg.find(": ");
        throw Error(e.kind(), "step " + std::to_string(n) + ": " + (colon == std::string::npos ? msg : msg.substr(colon + 2)));
      }
    }
  } catch (const Error& e) {
    failure = e.what();
    if (options.write_files) write_report_json(cfg, state, (dir / "report.json").string(), failure);
    throw;
  }
  if (options.write_files) {
    if (cfg.output.vtk_every > 0 && steps % cfg.output.vtk_every != 0) write_vtk(state, (dir / vtk_name(steps)).string());
    write_report_json(cfg, state, (dir / "report.json").string(), failure);
  }
  return state;
}

}  // namespace anisopf
