#pragma once

#include "anisopf/assembly.hpp"
#include "anisopf/config.hpp"
#include "anisopf/vi_solver.hpp"

#include <functional>
#include <vector>

namespace anisopf {

/// One row of the energy ledger; slack = LHS - RHS of the stability bound.
struct EnergyRow {
  double t = 0.0;
  double E_h = 0.0;
  double F_h = 0.0;
  double diffusive_dissipation = 0.0;
  double kinetic_dissipation = 0.0;
  double stab2_slack = 0.0;
  double stab3_slack = 0.0;
};

struct SimulationState {
  double t = 0.0;
  int step = 0;
  MeshPtr mesh;
  NodalField phi;
  NodalField w;
  std::vector<EnergyRow> ledger;
  std::vector<StepReport> reports;
};

/// Circular seed: -1 inside, +1 outside, sine profile of width eps*pi
/// around |x| = R0. Throws InterfaceTooWide if eps*pi/2 >= R0.
NodalField initial_phase(const MeshPtr& mesh, double R0, double eps);

/// Exponential temperature profile from 0 on the seed to u_D at |z| = H.
/// Throws NotApplicable when theta = 0.
NodalField initial_temperature(const MeshPtr& mesh, const PhysicalParams& params);

struct Energies {
  double E_h = 0.0;
  double F_h = 0.0;
};

Energies discrete_energy(const NodalField& phi, const NodalField& w, const PhysicalParams& params, const Model& model);

struct StabilityReport {
  Energies old_energy;
  Energies new_energy;
  double latent_work = 0.0;  // u_D lambda (rho_hat, Phi_new - Phi_old)^h
  double diffusive_dissipation = 0.0;
  double kinetic_dissipation = 0.0;
  double stab2_slack = 0.0;
  double stab3_slack = 0.0;
  bool stab2_holds = true;
  bool stab3_holds = true;
  /// The split is admissible for the sign of u_D (and, for the quartic
  /// potential, the phase stays inside the required bound).
  bool stab3_applicable = true;
};

/// Both energy bounds for consecutive states on the same mesh; throws
/// MeshChanged otherwise.
StabilityReport verify_stability(const SimulationState& prev, const SimulationState& next,
                                 const PhysicalParams& params, const Model& model, double tau);

/// Number of uniform steps of size tau that fit into T_end.
int step_count(const PhysicalParams& params);

/// Mesh and initial fields for a configuration, with the t = 0 ledger row.
SimulationState initial_state(const RunConfig& cfg, const Model& model);

struct RunOptions {
  bool write_files = true;
  /// Violations of an applicable stability bound raise StabilityViolation.
  bool fatal_stability = false;
  /// Overrides the number of steps when non-negative.
  int max_steps = -1;
  std::function<void(const SimulationState&, const StabilityReport&)> on_step;
};

/// Time loop: optional re-meshing, one solve per step, stability check on
/// the pre-re-mesh states, ledger row, VTK output every vtk_every steps, and
/// energy.csv / report.json in the output directory. Errors are rethrown
/// with the step index after the partial outputs are flushed.
SimulationState run_simulation(const RunConfig& cfg, const RunOptions& options = {});

/// Advances `state` by one step on its current mesh.
StepReport advance(SimulationState& state, const RunConfig& cfg, const Model& model, StabilityReport* stability = nullptr);

}  // namespace anisopf
