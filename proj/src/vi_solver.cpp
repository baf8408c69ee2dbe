#include "anisopf/vi_solver.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace anisopf {

namespace {

using Triplet = Eigen::Triplet<double>;
using Clock = std::chrono::steady_clock;

// Values this close to an obstacle count as on it; otherwise round-off at
// exactly critical data leaves nodes at 1 - 1e-16 inactive.
constexpr double kActiveTol = 1e-10;

// +1 / -1 on the upper / lower obstacle, 0 otherwise
std::vector<signed char> active_set(const Vector& x) {
  std::vector<signed char> s(static_cast<std::size_t>(x.size()), 0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) >= 1.0 - kActiveTol) s[static_cast<std::size_t>(i)] = 1;
    else if (x(i) <= -1.0 + kActiveTol) s[static_cast<std::size_t>(i)] = -1;
  }
  return s;
}

// Equal sets, or differing only at nodes that sit on the obstacle up to tol
// both before and after the solve (round-off flicker at exactly critical data).
bool same_active_sets(const std::vector<signed char>& a, const std::vector<signed char>& b, const Vector& u_old,
                      const Vector& u_new, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    const auto j = static_cast<Eigen::Index>(i);
    const double side = a[i] != 0 ? a[i] : b[i];
    if (side * u_old(j) < 1.0 - tol || side * u_new(j) < 1.0 - tol) return false;
  }
  return true;
}

double max_change(const Vector& a, const Vector& b) {
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

Vector clamp_unit(Vector x) { return x.cwiseMax(-1.0).cwiseMin(1.0); }

void impose_dirichlet(const SystemMatrices& sys, double u_D, Vector& w) {
  for (std::size_t i = 0; i < sys.dirichlet.size(); ++i) {
    if (sys.dirichlet[i]) w(static_cast<Eigen::Index>(i)) = u_D;
  }
}

// Linear block system of one active-set iteration. The sparsity pattern does
// not depend on the active set, so the ordering is computed once.
class BlockSolver {
 public:
  explicit BlockSolver(const SystemMatrices& sys) : sys_(sys), n_(sys.M.size()) {}

  void solve(const std::vector<signed char>& active, Vector& U, Vector& W) {
    const Eigen::Index n = n_;
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(sys_.C.nonZeros() + sys_.A_spp.nonZeros() + 3 * n));
    Vector rhs(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool on = active[static_cast<std::size_t>(i)] != 0;
      // C is symmetric: column i holds row i
      for (SparseMatrix::InnerIterator it(sys_.C, i); it; ++it) {
        const double v = on ? (it.row() == i ? 1.0 : 0.0) : it.value();
        trip.emplace_back(i, it.row(), v);
      }
      trip.emplace_back(i, n + i, on ? 0.0 : -sys_.M_rho(i));
      trip.emplace_back(n + i, i, sys_.rho_row(i));
      rhs(i) = on ? static_cast<double>(active[static_cast<std::size_t>(i)]) : sys_.g(i);
      rhs(n + i) = sys_.f(i);
    }
    for (int k = 0; k < sys_.A_spp.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(sys_.A_spp, k); it; ++it) trip.emplace_back(n + it.row(), n + it.col(), it.value());
    }
    SparseMatrix K(2 * n, 2 * n);
    K.setFromTriplets(trip.begin(), trip.end());
    K.makeCompressed();
    if (!analyzed_) {
      lu_.analyzePattern(K);
      analyzed_ = true;
    }
    lu_.factorize(K);
    if (lu_.info() != Eigen::Success) {
      throw Error(ErrorKind::SingularSystem, "block system is singular: " + lu_.lastErrorMessage());
    }
    const Vector x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success || !x.allFinite()) {
      throw Error(ErrorKind::SingularSystem, "block system solve failed");
    }
    U = x.head(n);
    W = x.tail(n);
  }

 private:
  const SystemMatrices& sys_;
  Eigen::Index n_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
};

struct IterationOutcome {
  Vector U;
  Vector W;
  int iterations = 0;
  int sweeps = 0;
  double change = 0.0;
  std::vector<signed char> active;
};

// Exact phase solve for a fixed temperature and the convex function of the
// temperature whose gradient is the residual of the heat rows.
struct DualPoint {
  Vector W;
  Vector U;
  double merit = 0.0;
  Vector grad;
};

class DualMerit {
 public:
  DualMerit(const StepContext& ctx, const SystemMatrices& sys, const SolverConfig& cfg)
      : ctx_(ctx), sys_(sys), max_sweeps_(50 * cfg.pgs_max_sweeps), tol_(std::min(1e-3 * cfg.tol, 1e-13)) {}

  DualPoint eval(Vector W, const Vector& u_warm, int& sweeps) const {
    const auto& p = ctx_.params;
    DualPoint d;
    const Vector y = sys_.g + sys_.M_rho.cwiseProduct(W);
    auto pgs = pgs_vi_solve(sys_.C, y, u_warm, max_sweeps_, tol_, PgsStop::Converged);
    sweeps += pgs.sweeps;
    d.U = std::move(pgs.x);
    const Vector HW = (p.theta / p.lambda) * sys_.M.cwiseProduct(W) + (ctx_.tau / p.lambda) * (sys_.A_diff * W);
    d.grad = HW - sys_.f + sys_.M_rho.cwiseProduct(d.U);
    double linear = 0.0;
    for (Eigen::Index i = 0; i < W.size(); ++i) {
      if (sys_.dirichlet[static_cast<std::size_t>(i)]) {
        d.grad(i) = 0.0;
      } else {
        linear += sys_.f(i) * W(i);
      }
    }
    d.merit = 0.5 * W.dot(HW) - linear + y.dot(d.U) - 0.5 * d.U.dot(sys_.C * d.U);
    d.W = std::move(W);
    return d;
  }

 private:
  const StepContext& ctx_;
  const SystemMatrices& sys_;
  int max_sweeps_;
  double tol_;
};

// Active-set iteration for blocks that do not depend on U. The block solve is
// a Newton step for the temperature; a backtracking line search on the merit
// function keeps far-off starting temperatures from cycling.
IterationOutcome iterate_linear(const StepContext& ctx, SystemMatrices& sys, Vector U, Vector W, bool first_from_u,
                                const SolverConfig& cfg) {
  IterationOutcome out;
  BlockSolver block(sys);
  const DualMerit merit(ctx, sys, cfg);
  const double u_D = ctx.params.u_D;

  auto newton = [&](const std::vector<signed char>& active, Vector& Un, Vector& Wn) {
    block.solve(active, Un, Wn);
    for (Eigen::Index i = 0; i < Un.size(); ++i) {
      if (active[static_cast<std::size_t>(i)] != 0) Un(i) = active[static_cast<std::size_t>(i)];
    }
    impose_dirichlet(sys, u_D, Wn);
  };

  if (first_from_u) {
    Vector Un, Wn;
    newton(active_set(U), Un, Wn);
    U = clamp_unit(std::move(Un));
    W = std::move(Wn);
    out.iterations = 1;
  }
  DualPoint cur = merit.eval(std::move(W), U, out.sweeps);
  for (int k = out.iterations; k < cfg.max_outer; ++k) {
    const auto active = active_set(cur.U);
    Vector Un, Wn;
    newton(active, Un, Wn);
    const Vector dir = Wn - cur.W;
    const double change = std::max(max_change(Un, cur.U), max_change(Wn, cur.W));
    const double slope = cur.grad.dot(dir);
    const double scale = 1.0 + std::abs(cur.merit);

    double t = 1.0;
    DualPoint next = merit.eval(Wn, clamp_unit(Un), out.sweeps);
    while (next.merit > cur.merit + 1e-4 * t * std::min(slope, 0.0) + 1e-14 * scale && change > 100.0 * cfg.tol) {
      t *= 0.5;
      if (t < 1e-12) {
        throw Error(ErrorKind::NonConvergence, "active-set line search stalled");
      }
      next = merit.eval(cur.W + t * dir, clamp_unit(cur.U + t * (Un - cur.U)), out.sweeps);
    }
    out.iterations = k + 1;
    out.change = t * change;
    if (t == 1.0 && change < cfg.tol && same_active_sets(active, active_set(next.U), cur.U, next.U, cfg.tol)) {
      out.U = clamp_unit(std::move(Un));
      out.W = std::move(Wn);
      out.active = active_set(out.U);
      return out;
    }
    cur = std::move(next);
  }
  throw Error(ErrorKind::NonConvergence,
              "active-set iteration did not converge in " + std::to_string(cfg.max_outer) + " iterations");
}

// Active-set iteration on sys. When `reassemble` is set, the blocks that
// depend on U are rebuilt after every linear solve.
IterationOutcome iterate_active_set(const StepContext& ctx, SystemMatrices& sys, Vector U, Vector W,
                                    bool first_from_u, bool reassemble, const SolverConfig& cfg) {
  if (!reassemble) return iterate_linear(ctx, sys, std::move(U), std::move(W), first_from_u, cfg);
  IterationOutcome out;
  BlockSolver block(sys);
  std::vector<signed char> prev;
  std::vector<std::vector<signed char>> seen;
  double relax = 1.0;
  for (int k = 0; k < cfg.max_outer; ++k) {
    Vector half;
    if (k == 0 && first_from_u) {
      half = U;
    } else {
      const Vector rhs = sys.g + sys.M_rho.cwiseProduct(W);
      auto pgs = pgs_vi_solve(sys.C, rhs, U, cfg.pgs_max_sweeps, cfg.tol, PgsStop::ActiveSets);
      out.sweeps += pgs.sweeps;
      half = std::move(pgs.x);
    }
    const auto active = active_set(half);

    Vector Un, Wn;
    block.solve(active, Un, Wn);
    for (Eigen::Index i = 0; i < Un.size(); ++i) {
      if (active[static_cast<std::size_t>(i)] != 0) Un(i) = active[static_cast<std::size_t>(i)];
    }
    const bool stable = k > 0 && same_active_sets(active, prev, U, Un, cfg.tol);
    // an active set seen before, but not in the previous iteration, means the
    // iteration cycles; the update is then relaxed
    if (stable) {
      relax = 1.0;
    } else if (std::find(seen.begin(), seen.end(), active) != seen.end()) {
      relax = std::max(0.5 * relax, 1.0 / 1024.0);
    }
    seen.push_back(active);
    if (relax < 1.0) {
      Un = clamp_unit(U + relax * (Un - U));
      Wn = W + relax * (Wn - W);
    }
    impose_dirichlet(sys, ctx.params.u_D, Wn);
    const double change = std::max(max_change(Un, U), max_change(Wn, W));
    out.iterations = k + 1;
    out.change = change;
    U = std::move(Un);
    W = std::move(Wn);
    if (stable && change < cfg.tol) {
      out.U = clamp_unit(std::move(U));
      out.W = std::move(W);
      out.active = active_set(out.U);
      return out;
    }
    prev = active;
    if (reassemble) update_iterate(ctx, U, sys);
  }
  throw Error(ErrorKind::NonConvergence,
              "active-set iteration did not converge in " + std::to_string(cfg.max_outer) + " iterations");
}

void require_obstacle(const StepContext& ctx) {
  if (!ctx.model.is_obstacle()) {
    throw Error(ErrorKind::NotApplicable, "this solver handles the obstacle potential only");
  }
}

struct Start {
  Vector U;
  Vector W;
  bool have_w;
};

Start initial_iterate(const StepContext& ctx, const SystemMatrices& sys, const InitialIterate& init) {
  const auto n = ctx.mesh.num_vertices();
  Start s{clamp_unit(init.u ? *init.u : ctx.phi_prev), init.w ? *init.w : ctx.w_prev,
          init.w.has_value() || !init.u.has_value()};
  if (s.U.size() != n || s.W.size() != n) {
    throw Error(ErrorKind::InconsistentDimensions, "initial iterate does not match the mesh");
  }
  impose_dirichlet(sys, ctx.params.u_D, s.W);
  return s;
}

void fill_active_counts(const std::vector<signed char>& active, StepReport& rep) {
  rep.active_plus = static_cast<int>(std::count(active.begin(), active.end(), 1));
  rep.active_minus = static_cast<int>(std::count(active.begin(), active.end(), -1));
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

SolverMethod parse_solver_method(std::string_view name) {
  if (name == "active-set") return SolverMethod::ActiveSet;
  if (name == "lagged") return SolverMethod::Lagged;
  if (name == "auto") return SolverMethod::Auto;
  throw Error(ErrorKind::ValidationError, "unknown solver method '" + std::string(name) + "'");
}

std::string_view to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::ActiveSet: return "active-set";
    case SolverMethod::Lagged: return "lagged";
    case SolverMethod::Auto: return "auto";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  auto fail = [](const char* key, const char* why) {
    throw Error(ErrorKind::ValidationError, std::string(key) + ": " + why);
  };
  if (!(tol > 0.0)) fail("tol", "must be > 0");
  if (max_outer < 1) fail("max_outer", "must be >= 1");
  if (!(omega > 0.0 && omega <= 1.0)) fail("omega", "must lie in (0, 1]");
  if (pgs_max_sweeps < 1) fail("pgs_max_sweeps", "must be >= 1");
  if (!(newton_tol > 0.0)) fail("newton_tol", "must be > 0");
  if (newton_max_iter < 1) fail("newton_max_iter", "must be >= 1");
}

PgsResult pgs_vi_solve(const SparseMatrix& C, const Vector& rhs, const Vector& x0, int max_sweeps, double tol,
                       PgsStop stop) {
  const Eigen::Index n = C.rows();
  if (C.cols() != n || rhs.size() != n || x0.size() != n) {
    throw Error(ErrorKind::InconsistentDimensions, "PGS operands have inconsistent sizes");
  }
  Vector diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    diag(i) = C.coeff(i, i);
    if (!(diag(i) > 0.0)) throw Error(ErrorKind::ZeroDiagonal, "row " + std::to_string(i) + " has no positive diagonal");
  }
  PgsResult res{clamp_unit(x0), 0};
  auto prev = active_set(res.x);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = rhs(i);
      for (SparseMatrix::InnerIterator it(C, i); it; ++it) {
        if (it.row() != i) s -= it.value() * res.x(it.row());
      }
      const double xi = std::clamp(s / diag(i), -1.0, 1.0);
      change = std::max(change, std::abs(xi - res.x(i)));
      res.x(i) = xi;
    }
    res.sweeps = sweep;
    if (change < tol) return res;
    if (stop == PgsStop::ActiveSets) {
      auto cur = active_set(res.x);
      if (sweep >= 2 && cur == prev) return res;
      prev = std::move(cur);
    }
  }
  throw Error(ErrorKind::NonConvergence, "projected Gauss-Seidel exceeded " + std::to_string(max_sweeps) + " sweeps");
}

StepResult active_set_step(const StepContext& ctx, const SolverConfig& cfg, const InitialIterate& init) {
  require_obstacle(ctx);
  cfg.validate();
  const auto t0 = Clock::now();
  SystemMatrices sys = assemble_step_system(ctx, clamp_unit(init.u ? *init.u : ctx.phi_prev));
  const Start s = initial_iterate(ctx, sys, init);
  auto out = iterate_active_set(ctx, sys, s.U, s.W, !s.have_w, !ctx.model.is_linear(), cfg);

  StepResult r{std::move(out.U), std::move(out.W), {}};
  r.report.method = "active-set";
  r.report.outer_iterations = out.iterations;
  r.report.pgs_sweeps = out.sweeps;
  r.report.last_change = out.change;
  r.report.converged = true;
  fill_active_counts(out.active, r.report);
  r.report.wall_seconds = seconds_since(t0);
  return r;
}

StepResult lagged_step(const StepContext& ctx, const SolverConfig& cfg, const InitialIterate& init) {
  require_obstacle(ctx);
  cfg.validate();
  const auto t0 = Clock::now();
  SystemMatrices sys = assemble_step_system(ctx, clamp_unit(init.u ? *init.u : ctx.phi_prev));
  const Start s = initial_iterate(ctx, sys, init);

  StepResult r;
  r.report.method = "lagged";
  if (ctx.model.is_linear()) {
    // the subproblem is the full problem, so the relaxation has a fixed point after one solve
    auto out = iterate_active_set(ctx, sys, s.U, s.W, !s.have_w, false, cfg);
    r.phi = std::move(out.U);
    r.w = std::move(out.W);
    r.report.outer_iterations = 1;
    r.report.pgs_sweeps = out.sweeps;
    r.report.last_change = out.change;
    r.report.omega = cfg.omega;
    r.report.converged = true;
    fill_active_counts(out.active, r.report);
    r.report.wall_seconds = seconds_since(t0);
    return r;
  }

  double omega = cfg.omega;
  for (int attempt = 0; attempt <= 4; ++attempt, omega *= 0.5) {
    Vector U = s.U;
    Vector W = s.W;
    int sweeps = 0;
    bool ok = false;
    try {
      for (int k = 0; k < cfg.max_outer; ++k) {
        update_iterate(ctx, U, sys);
        auto half = iterate_active_set(ctx, sys, U, W, k == 0 && !s.have_w, false, cfg);
        sweeps += half.sweeps;
        Vector Un = (1.0 - omega) * U + omega * half.U;
        Vector Wn = (1.0 - omega) * W + omega * half.W;
        impose_dirichlet(sys, ctx.params.u_D, Wn);
        const double change = std::max(max_change(Un, U), max_change(Wn, W));
        U = clamp_unit(std::move(Un));
        W = std::move(Wn);
        r.report.outer_iterations = k + 1;
        r.report.last_change = change;
        if (change < cfg.tol) {
          ok = true;
          break;
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonConvergence) throw;
    }
    r.report.pgs_sweeps += sweeps;
    if (ok) {
      r.phi = std::move(U);
      r.w = std::move(W);
      r.report.omega = omega;
      r.report.converged = true;
      fill_active_counts(active_set(r.phi), r.report);
      r.report.wall_seconds = seconds_since(t0);
      return r;
    }
  }
  throw Error(ErrorKind::NonConvergence, "lagged iteration failed for every relaxation parameter tried");
}

StepResult obstacle_step(const StepContext& ctx, const SolverConfig& cfg) {
  switch (cfg.method) {
    case SolverMethod::ActiveSet: return active_set_step(ctx, cfg);
    case SolverMethod::Lagged: return lagged_step(ctx, cfg);
    case SolverMethod::Auto: break;
  }
  if (ctx.model.anisotropy.exponent() > 3.0) return lagged_step(ctx, cfg);
  try {
    return active_set_step(ctx, cfg);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonConvergence) throw;
  }
  auto r = lagged_step(ctx, cfg);
  r.report.method = "lagged (fallback)";
  return r;
}

namespace {

struct SmoothResidual {
  Vector r_phi;
  Vector r_w;
  double norm = 0.0;
};

SmoothResidual smooth_residual(const StepContext& ctx, const SystemMatrices& sys, const Vector& U, const Vector& W) {
  SmoothResidual r;
  const double cubic = 1.0 / (ctx.params.eps * sys.vi_scale);
  r.r_phi = sys.C * U + cubic * sys.M.cwiseProduct(U.cwiseProduct(U).cwiseProduct(U)) - sys.M_rho.cwiseProduct(W) - sys.g;
  r.r_w = sys.rho_row.cwiseProduct(U) + sys.A_spp * W - sys.f;
  r.norm = std::max(r.r_phi.cwiseAbs().maxCoeff(), r.r_w.cwiseAbs().maxCoeff());
  return r;
}

}  // namespace

StepResult newton_smooth_step(const StepContext& ctx, const SolverConfig& cfg) {
  if (ctx.model.potential.kind != PotentialKind::Quartic) {
    throw Error(ErrorKind::NotApplicable, "Newton's method is used for the quartic potential only");
  }
  cfg.validate();
  const auto t0 = Clock::now();
  const Eigen::Index n = ctx.mesh.num_vertices();
  Vector U = ctx.phi_prev;
  Vector W = ctx.w_prev;
  SystemMatrices sys = assemble_step_system(ctx, U);
  impose_dirichlet(sys, ctx.params.u_D, W);
  auto res = smooth_residual(ctx, sys, U, W);

  const double cubic = 1.0 / (ctx.params.eps * sys.vi_scale);
  const auto& shape = ctx.model.shape;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;

  StepResult r;
  r.report.method = "newton";
  int it = 0;
  for (; it < cfg.newton_max_iter && res.norm >= cfg.newton_tol; ++it) {
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(sys.C.nonZeros() + sys.A_spp.nonZeros() + 4 * n));
    for (int k = 0; k < sys.C.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it2(sys.C, k); it2; ++it2) trip.emplace_back(it2.row(), it2.col(), it2.value());
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double drho = sys.M(i) * shape_cutoff_derivative(shape, U(i));
      trip.emplace_back(i, i, 3.0 * cubic * sys.M(i) * U(i) * U(i) - drho * W(i));
      trip.emplace_back(i, n + i, -sys.M_rho(i));
      const double wphi = sys.dirichlet[static_cast<std::size_t>(i)] ? 0.0 : sys.rho_row(i) + drho * (U(i) - ctx.phi_prev(i));
      trip.emplace_back(n + i, i, wphi);
    }
    for (int k = 0; k < sys.A_spp.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it2(sys.A_spp, k); it2; ++it2) trip.emplace_back(n + it2.row(), n + it2.col(), it2.value());
    }
    SparseMatrix J(2 * n, 2 * n);
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "Newton Jacobian is singular");
    Vector rhs(2 * n);
    rhs << res.r_phi, res.r_w;
    const Vector dx = lu.solve(rhs);

    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      Vector Ut = U - t * dx.head(n);
      Vector Wt = W - t * dx.tail(n);
      update_iterate(ctx, Ut, sys);
      auto trial = smooth_residual(ctx, sys, Ut, Wt);
      if (std::isfinite(trial.norm) && trial.norm <= (1.0 - 1e-4 * t) * res.norm) {
        r.report.last_change = t * dx.cwiseAbs().maxCoeff();
        U = std::move(Ut);
        W = std::move(Wt);
        res = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw Error(ErrorKind::NewtonDivergence, "line search exhausted at residual " + std::to_string(res.norm));
    }
  }
  if (res.norm >= cfg.newton_tol) {
    throw Error(ErrorKind::NewtonDivergence, "no convergence after " + std::to_string(it) +
                                                 " Newton steps, residual " + std::to_string(res.norm));
  }
  impose_dirichlet(sys, ctx.params.u_D, W);
  r.phi = std::move(U);
  r.w = std::move(W);
  r.report.outer_iterations = it;
  r.report.residual = res.norm;
  r.report.converged = true;
  r.report.wall_seconds = seconds_since(t0);
  return r;
}

ResidualAudit residual_audit(const StepContext& ctx, const Vector& U, const Vector& W) {
  const SystemMatrices sys = assemble_step_system(ctx, U);
  ResidualAudit a;
  const Vector heat = sys.rho_row.cwiseProduct(U) + sys.A_spp * W - sys.f;
  a.heat = heat.cwiseAbs().maxCoeff();
  const Vector vi = sys.C * U - sys.M_rho.cwiseProduct(W) - sys.g;
  for (Eigen::Index i = 0; i < U.size(); ++i) {
    if (U(i) >= 1.0) a.vi_wrong_sign = std::max(a.vi_wrong_sign, vi(i));
    else if (U(i) <= -1.0) a.vi_wrong_sign = std::max(a.vi_wrong_sign, -vi(i));
    else a.vi_interior = std::max(a.vi_interior, std::abs(vi(i)));
  }
  return a;
}

double conservation_audit(const StepContext& ctx, const Vector& phi_new) {
  if (ctx.params.theta != 0.0 || ctx.params.bc != BoundaryCase::Neumann || !ctx.model.shape.explicit_only()) {
    throw Error(ErrorKind::NotApplicable, "conservation holds for theta = 0, pure Neumann and rho^+ = 0 only");
  }
  const Vector M = lumped_mass(ctx.mesh, ctx.geom);
  double s = 0.0;
  for (Eigen::Index i = 0; i < M.size(); ++i) {
    s += M(i) * shape_eval(ctx.model.shape, ctx.phi_prev(i)).rho * (phi_new(i) - ctx.phi_prev(i));
  }
  return std::abs(s);
}

}  // namespace anisopf
