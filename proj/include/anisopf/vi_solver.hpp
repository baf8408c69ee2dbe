#pragma once

#include "anisopf/assembly.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace anisopf {

enum class SolverMethod { ActiveSet, Lagged, Auto };

SolverMethod parse_solver_method(std::string_view name);
std::string_view to_string(SolverMethod m);

struct SolverConfig {
  SolverMethod method = SolverMethod::Auto;
  double tol = 1e-8;
  int max_outer = 200;
  double omega = 0.5;  // relaxation of the lagged iteration
  int pgs_max_sweeps = 500;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;

  void validate() const;
  bool operator==(const SolverConfig&) const = default;
};

struct StepReport {
  std::string method;
  int outer_iterations = 0;
  int pgs_sweeps = 0;
  int active_plus = 0;
  int active_minus = 0;
  double last_change = 0.0;
  double residual = 0.0;
  double omega = 1.0;
  double wall_seconds = 0.0;
  bool converged = false;
};

struct StepResult {
  Vector phi;
  Vector w;
  StepReport report;
};

enum class PgsStop {
  ActiveSets,  // two successive sweeps with the same active set (at least two sweeps)
  Converged,   // max-norm change of a sweep below tol
};

struct PgsResult {
  Vector x;
  int sweeps = 0;
};

/// Projected Gauss-Seidel for min 1/2 x^T C x - rhs^T x over [-1, 1]^n,
/// sweeping in ascending index order. C must be symmetric with positive
/// diagonal. Throws ZeroDiagonal, or NonConvergence after max_sweeps.
PgsResult pgs_vi_solve(const SparseMatrix& C, const Vector& rhs, const Vector& x0, int max_sweeps, double tol,
                       PgsStop stop = PgsStop::ActiveSets);

/// Optional starting point (U_0, W_0) of the outer iteration. Without it
/// U_0 is the previous phase and W_0 the previous temperature; without W_0
/// the first active set is read off U_0 directly.
struct InitialIterate {
  std::optional<Vector> u;
  std::optional<Vector> w;
};

/// Primal active-set (Uzawa) iteration for the obstacle scheme. When the
/// blocks do not depend on U, each block solve is a Newton step for the
/// temperature and is damped by a backtracking line search if needed.
StepResult active_set_step(const StepContext& ctx, const SolverConfig& cfg, const InitialIterate& init = {});

/// Lagged fixed point iteration with relaxation; retries with halved
/// relaxation up to four times.
StepResult lagged_step(const StepContext& ctx, const SolverConfig& cfg, const InitialIterate& init = {});

/// Dispatches on cfg.method; `Auto` uses the active-set method for r <= 3
/// (falling back to the lagged iteration if it fails) and lagged otherwise.
StepResult obstacle_step(const StepContext& ctx, const SolverConfig& cfg);

/// Damped Newton method for the smooth (quartic) scheme.
StepResult newton_smooth_step(const StepContext& ctx, const SolverConfig& cfg);

/// Residuals of the scaled step equations at (U, W).
struct ResidualAudit {
  double heat = 0.0;              // max-norm of the heat rows
  double vi_interior = 0.0;       // max-norm of the VI rows where |U| < 1
  double vi_wrong_sign = 0.0;     // largest residual of the wrong sign on active rows
};

ResidualAudit residual_audit(const StepContext& ctx, const Vector& U, const Vector& W);

/// |(rho(Phi_prev), Phi_new - Phi_prev)^h| for theta = 0 under pure Neumann
/// conditions; throws NotApplicable otherwise.
double conservation_audit(const StepContext& ctx, const Vector& phi_new);

}  // namespace anisopf
