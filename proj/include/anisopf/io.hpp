#pragma once

#include "anisopf/timestepper.hpp"

#include <string>
#include <vector>

namespace anisopf {

/// Legacy ASCII VTK unstructured grid with point scalars phi and w.
std::string vtk_string(const NodalField& phi, const NodalField& w);
void write_vtk(const NodalField& phi, const NodalField& w, const std::string& path);
void write_vtk(const SimulationState& state, const std::string& path);

std::string energy_csv_header();
std::string energy_csv_row(const EnergyRow& row);
void write_energy_csv(const std::vector<EnergyRow>& ledger, const std::string& path);

/// Configuration, per-step solver reports and final energies as JSON;
/// `error` is recorded when non-empty.
void write_report_json(const RunConfig& cfg, const SimulationState& state, const std::string& path,
                       const std::string& error = {});

/// Outcome of the boundary-layer experiment on a uniform solid.
struct ThresholdResult {
  double drift = 0.0;  // max over steps of the max-norm change from the initial fields
  double min_phi = 1.0;
  int steps = 0;
  double critical_uD = 0.0;
  std::string verdict;  // "stable", "layer-forms" or "inconclusive"
};

ThresholdResult check_threshold(const RunConfig& cfg);

/// Entry point of the command line tool. Exit codes: 0 success, 1 failure,
/// 2 usage error or unreadable input.
int cli_main(int argc, char** argv);

}  // namespace anisopf
