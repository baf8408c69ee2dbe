#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include "anisopf/assembly.hpp"
#include "anisopf/vi_solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

using anisopf::Index;
using anisopf::Vector;
using DenseMatrix = Eigen::MatrixXd;

/// Owns everything a StepContext refers to.
struct Problem {
  anisopf::MeshPtr mesh;
  anisopf::MeshGeometry geom;
  anisopf::PhysicalParams params;
  anisopf::Model model;
  Vector phi_prev;
  Vector w_prev;

  anisopf::StepContext ctx() const { return {*mesh, geom, params, model, phi_prev, w_prev, params.tau}; }
};

inline anisopf::Model make_model(const std::string& aniso, int dim, anisopf::PotentialKind pot,
                                 anisopf::ShapeKind shape, double u_D, const std::string& mobility = "gamma") {
  auto a = anisopf::anisotropy_preset(aniso, dim);
  auto m = anisopf::mobility_preset(mobility, a);
  anisopf::ShapeSpec sh{shape, u_D > 0 ? anisopf::SplitSign::ForPositiveUD : anisopf::SplitSign::ForNegativeUD, 2.0};
  return anisopf::Model{std::move(a), std::move(m), anisopf::PotentialSpec{pot}, sh};
}

inline double seed_profile(const anisopf::Point& x, double R0, double eps) {
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) - R0;
  if (r <= -eps * std::numbers::pi / 2) return -1.0;
  if (r >= eps * std::numbers::pi / 2) return 1.0;
  return std::sin(r / eps);
}

inline Problem make_problem(const anisopf::PhysicalParams& params, anisopf::Model model, int N,
                            const std::function<double(const anisopf::Point&)>& phi0, double w0) {
  Problem p{std::make_shared<const anisopf::SimplicialMesh>(
                anisopf::build_uniform_mesh(params.H, N, params.dim, params.bc)),
            {}, params, std::move(model), {}, {}};
  p.geom = anisopf::compute_geometry(*p.mesh);
  p.phi_prev.resize(p.mesh->num_vertices());
  for (Index i = 0; i < p.mesh->num_vertices(); ++i) p.phi_prev(i) = phi0(p.mesh->vertex(i));
  p.w_prev = Vector::Constant(p.mesh->num_vertices(), w0);
  for (Index i = 0; i < p.mesh->num_vertices(); ++i) {
    if (p.mesh->is_dirichlet(i)) p.w_prev(i) = params.u_D;
  }
  return p;
}

/// Minimizer of 1/2 x^T Q x - q^T x over [-1, 1]^n for symmetric positive
/// definite Q: accelerated projected gradient (FISTA), then an exact solve on
/// the free set identified by the iterate, repeated until the KKT sign
/// conditions hold.
inline Vector box_qp(const DenseMatrix& Q, const Vector& q, int iterations = 200000) {
  const Eigen::Index n = q.size();
  const double L = Eigen::SelfAdjointEigenSolver<DenseMatrix>(Q).eigenvalues().maxCoeff();
  auto project = [](Vector v) { return Vector(v.cwiseMax(-1.0).cwiseMin(1.0)); };
  Vector x = Vector::Zero(n), y = x;
  double t = 1.0;
  for (int k = 0; k < iterations; ++k) {
    const Vector xn = project(y - (Q * y - q) / L);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    const double step = (xn - x).cwiseAbs().maxCoeff();
    x = xn;
    t = tn;
    if (step < 1e-15 && k > 100) break;
  }
  for (int pass = 0; pass < 50; ++pass) {
    std::vector<int> state(static_cast<std::size_t>(n), 0);
    const Vector grad = Q * x - q;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x(i) >= 1.0 - 1e-9 && grad(i) <= 0.0) state[static_cast<std::size_t>(i)] = 1;
      if (x(i) <= -1.0 + 1e-9 && grad(i) >= 0.0) state[static_cast<std::size_t>(i)] = -1;
    }
    std::vector<Eigen::Index> free;
    Vector fixed = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] == 0) free.push_back(i);
      else fixed(i) = state[static_cast<std::size_t>(i)];
    }
    const auto m = static_cast<Eigen::Index>(free.size());
    DenseMatrix Qff(m, m);
    Vector rhs(m);
    const Vector qfix = q - Q * fixed;
    for (Eigen::Index a = 0; a < m; ++a) {
      rhs(a) = qfix(free[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < m; ++b) Qff(a, b) = Q(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
    }
    Vector sol = fixed;
    if (m > 0) {
      const Vector xf = Qff.ldlt().solve(rhs);
      for (Eigen::Index a = 0; a < m; ++a) sol(free[static_cast<std::size_t>(a)]) = xf(a);
    }
    const bool feasible = sol.cwiseAbs().maxCoeff() <= 1.0 + 1e-12;
    if (feasible) return sol.cwiseMax(-1.0).cwiseMin(1.0);
    x = project(0.5 * (x + sol));
  }
  return x;
}

struct Solution {
  Vector U;
  Vector W;
};

/// Obstacle step with r = 1 and rho^+ = 0 by elimination of W: the
/// variational inequality reduces to a box QP for U on the reduced operator
/// C + R A^{-1} R, with R the rho-weighted mass on non-Dirichlet rows.
inline Solution reduced_qp_step(const Problem& p) {
  const auto ctx = p.ctx();
  const auto sys = anisopf::assemble_step_system(ctx, p.phi_prev);
  const DenseMatrix A = DenseMatrix(sys.A_spp);
  const DenseMatrix C = DenseMatrix(sys.C);
  const Eigen::PartialPivLU<DenseMatrix> lu(A);
  const DenseMatrix Ainv_R = lu.solve(DenseMatrix(sys.rho_row.asDiagonal()));
  const Vector Ainv_f = lu.solve(sys.f);
  DenseMatrix Q = C + sys.M_rho.asDiagonal() * Ainv_R;
  Q = 0.5 * (Q + Q.transpose()).eval();
  const Vector q = sys.g + sys.M_rho.cwiseProduct(Ainv_f);
  Solution s;
  s.U = box_qp(Q, q);
  s.W = Ainv_f - Ainv_R * s.U;
  return s;
}

/// Damped Picard iteration for the smooth scheme: the cubic term is
/// linearized as U_k^2 U and every iterate-dependent block is frozen at U_k.
inline Solution picard_smooth_step(const Problem& p, double damping = 0.5, int iterations = 20000,
                                   double tol = 1e-13) {
  const auto ctx = p.ctx();
  const Eigen::Index n = p.phi_prev.size();
  Vector U = p.phi_prev;
  Vector W = p.w_prev;
  for (int k = 0; k < iterations; ++k) {
    const auto sys = anisopf::assemble_step_system(ctx, U);
    const double cubic = 1.0 / (p.params.eps * sys.vi_scale);
    DenseMatrix K = DenseMatrix::Zero(2 * n, 2 * n);
    K.topLeftCorner(n, n) = DenseMatrix(sys.C);
    for (Eigen::Index i = 0; i < n; ++i) {
      K(i, i) += cubic * sys.M(i) * U(i) * U(i);
      K(i, n + i) = -sys.M_rho(i);
      K(n + i, i) = sys.rho_row(i);
    }
    K.bottomRightCorner(n, n) = DenseMatrix(sys.A_spp);
    Vector rhs(2 * n);
    rhs << sys.g, sys.f;
    const Vector x = K.partialPivLu().solve(rhs);
    const Vector Un = (1.0 - damping) * U + damping * x.head(n);
    const Vector Wn = (1.0 - damping) * W + damping * x.tail(n);
    const double change = std::max((Un - U).cwiseAbs().maxCoeff(), (Wn - W).cwiseAbs().maxCoeff());
    U = Un;
    W = Wn;
    if (change < tol) break;
  }
  return {U, W};
}

/// Minimal legacy VTK reader: POINTS and every SCALARS block of POINT_DATA.
struct VtkData {
  std::vector<double> points;
  std::vector<std::vector<Index>> cells;
  std::vector<int> cell_types;
  std::vector<std::pair<std::string, std::vector<double>>> scalars;
};

inline VtkData read_vtk(const std::string& path) {
  std::ifstream in(path);
  VtkData d;
  std::string tok;
  std::size_t npoints = 0;
  while (in >> tok) {
    if (tok == "POINTS") {
      std::string type;
      in >> npoints >> type;
      d.points.resize(3 * npoints);
      for (auto& v : d.points) in >> v;
    } else if (tok == "CELLS") {
      std::size_t n = 0, total = 0;
      in >> n >> total;
      for (std::size_t c = 0; c < n; ++c) {
        std::size_t k = 0;
        in >> k;
        std::vector<Index> ids(k);
        for (auto& id : ids) in >> id;
        d.cells.push_back(ids);
      }
    } else if (tok == "CELL_TYPES") {
      std::size_t n = 0;
      in >> n;
      d.cell_types.resize(n);
      for (auto& t : d.cell_types) in >> t;
    } else if (tok == "SCALARS") {
      std::string name, type, lookup, table;
      in >> name >> type;
      std::getline(in, tok);
      in >> lookup >> table;
      std::vector<double> vals(npoints);
      for (auto& v : vals) {
        std::string s;
        in >> s;
        v = std::stod(s);
      }
      d.scalars.emplace_back(name, vals);
    }
  }
  return d;
}

}  // namespace oracle
