#pragma once

#include "anisopf/params.hpp"
#include "anisopf/vi_solver.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace anisopf {

struct ModelOptions {
  std::string anisotropy = "iso";
  std::string mobility = "gamma";
  double mu_bar = 0.0;  // 0 selects the default normalization
  std::string potential = "obstacle";
  std::string shape = "const";
  double cutoff_m = 2.0;
  std::string initial = "seed";  // "seed" or "liquid" (phi = 1)

  bool operator==(const ModelOptions&) const = default;
};

struct MeshOptions {
  int N_f = 128;  // uniform runs use N_f
  int N_c = 16;
  bool adaptive = false;
  int remesh_every = 1;
  int safety_layers = 1;

  bool operator==(const MeshOptions&) const = default;
};

struct OutputOptions {
  std::string out_dir;  // empty: $ANISO_PF_OUT, else "anisopf_out"
  int vtk_every = 0;    // 0 writes no VTK files
  std::uint64_t seed = 1;
  std::int64_t samples = 100000;

  bool operator==(const OutputOptions&) const = default;
};

/// Everything a run needs. Text form:
///
///   [physics]  theta lambda a alpha rho Kplus Kminus eps|eps_inv u_D H bc R0 T_end tau dim
///   [model]    anisotropy mobility mu_bar potential shape cutoff_m initial
///   [mesh]     N_f N_c adaptive remesh_every safety_layers
///   [solver]   method tol max_outer omega pgs_max_sweeps newton_tol newton_max_iter
///   [output]   out_dir vtk_every seed samples
///
/// one `key = value` per line, `#` starts a comment.
struct RunConfig {
  PhysicalParams physics;
  ModelOptions model;
  MeshOptions mesh;
  SolverConfig solver;
  OutputOptions output;

  /// Throws ValidationError naming the offending key.
  void validate() const;
  Model build_model() const;
  /// out_dir, or the environment default.
  std::string output_directory() const;

  bool operator==(const RunConfig&) const = default;
};

/// Parses and validates. ParseError carries the line number; unknown keys
/// and invalid values raise ValidationError.
RunConfig parse_config(std::string_view text);

/// Reads a file; IoError if it cannot be opened.
RunConfig load_config(const std::string& path);

/// Text that parses back to an equal RunConfig.
std::string serialize_config(const RunConfig& cfg);

}  // namespace anisopf
