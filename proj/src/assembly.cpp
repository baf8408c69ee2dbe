#include "anisopf/assembly.hpp"

#include <string>

namespace anisopf {

namespace {

using Triplet = Eigen::Triplet<double>;

void check_size(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw Error(ErrorKind::InconsistentDimensions,
                std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(n));
  }
}

template <class Coeff>
SparseMatrix assemble_stiffness(const SimplicialMesh& mesh, const MeshGeometry& geom, Coeff&& coeff_times) {
  const int d = mesh.dim();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_elements()) * (d + 1) * (d + 1));
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.element(e);
    const auto& g = geom[static_cast<std::size_t>(e)];
    for (int j = 0; j <= d; ++j) {
      const Vec kg = coeff_times(e, g.grads[static_cast<std::size_t>(j)]);
      for (int i = 0; i <= d; ++i) {
        trip.emplace_back(el.v[i], el.v[j], g.volume * kg.dot(g.grads[static_cast<std::size_t>(i)]));
      }
    }
  }
  SparseMatrix K(mesh.num_vertices(), mesh.num_vertices());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SparseMatrix with_identity_rows(const SparseMatrix& A, const std::vector<char>& rows) {
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(A.nonZeros()));
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      if (!rows[static_cast<std::size_t>(it.row())]) trip.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]) trip.emplace_back(static_cast<Index>(i), static_cast<Index>(i), 1.0);
  }
  SparseMatrix out(A.rows(), A.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Vector rho_weights(const StepContext& ctx, const Vector& phi_cur) {
  const auto& sh = ctx.model.shape;
  Vector w(phi_cur.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w(i) = ctx.model.is_obstacle() ? shape_hat(sh, ctx.phi_prev(i), phi_cur(i))
                                   : shape_cutoff(sh, ctx.phi_prev(i), phi_cur(i));
  }
  return w;
}

}  // namespace

MeshGeometry compute_geometry(const SimplicialMesh& mesh) {
  const int d = mesh.dim();
  MeshGeometry geom(static_cast<std::size_t>(mesh.num_elements()));
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.element(e);
    const auto& x0 = mesh.vertex(el.v[0]);
    Mat E(d, d);
    for (int j = 0; j < d; ++j) {
      const auto& xj = mesh.vertex(el.v[j + 1]);
      for (int k = 0; k < d; ++k) E(k, j) = xj[k] - x0[k];
    }
    const double det = E.determinant();
    if (det == 0.0) throw Error(ErrorKind::InconsistentDimensions, "degenerate element " + std::to_string(e));
    const Mat inv = E.inverse();
    auto& g = geom[static_cast<std::size_t>(e)];
    g.volume = std::abs(det) / (d == 2 ? 2.0 : 6.0);
    Vec sum = Vec::Zero(d);
    for (int j = 0; j < d; ++j) {
      g.grads[static_cast<std::size_t>(j) + 1] = inv.row(j).transpose();
      sum += inv.row(j).transpose();
    }
    g.grads[0] = -sum;
  }
  return geom;
}

Vec element_gradient(const SimplicialMesh& mesh, const MeshGeometry& geom, Index e, const Vector& values) {
  const auto& el = mesh.element(e);
  const auto& g = geom[static_cast<std::size_t>(e)];
  Vec out = Vec::Zero(mesh.dim());
  for (int i = 0; i <= mesh.dim(); ++i) out += values(el.v[i]) * g.grads[static_cast<std::size_t>(i)];
  return out;
}

Vector lumped_mass(const SimplicialMesh& mesh, const MeshGeometry& geom) {
  return lumped_mass_element_weighted(mesh, geom, Vector::Ones(mesh.num_elements()));
}

Vector lumped_mass_element_weighted(const SimplicialMesh& mesh, const MeshGeometry& geom,
                                    const Vector& element_weight) {
  check_size(element_weight, mesh.num_elements(), "element weight");
  const int d = mesh.dim();
  Vector m = Vector::Zero(mesh.num_vertices());
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const double share = geom[static_cast<std::size_t>(e)].volume / (d + 1) * element_weight(e);
    for (int i = 0; i <= d; ++i) m(mesh.element(e).v[i]) += share;
  }
  return m;
}

Vector lumped_mass_vertex_weighted(const SimplicialMesh& mesh, const MeshGeometry& geom,
                                   const Vector& vertex_weight) {
  check_size(vertex_weight, mesh.num_vertices(), "vertex weight");
  return lumped_mass(mesh, geom).cwiseProduct(vertex_weight);
}

SparseMatrix stiffness(const SimplicialMesh& mesh, const MeshGeometry& geom, const std::vector<Mat>& coeff) {
  if (coeff.size() != static_cast<std::size_t>(mesh.num_elements())) {
    throw Error(ErrorKind::InconsistentDimensions, "one coefficient per element required");
  }
  return assemble_stiffness(mesh, geom, [&](Index e, const Vec& g) -> Vec {
    return coeff[static_cast<std::size_t>(e)] * g;
  });
}

SparseMatrix stiffness(const SimplicialMesh& mesh, const MeshGeometry& geom, const Vector& coeff) {
  check_size(coeff, mesh.num_elements(), "element coefficient");
  return assemble_stiffness(mesh, geom, [&](Index e, const Vec& g) -> Vec { return coeff(e) * g; });
}

SparseMatrix anisotropic_stiffness(const SimplicialMesh& mesh, const MeshGeometry& geom,
                                   const AnisotropyDensity& a, const Vector& phi_prev, const Vector& phi_cur) {
  check_size(phi_prev, mesh.num_vertices(), "previous phase");
  check_size(phi_cur, mesh.num_vertices(), "current phase");
  if (a.dim() != mesh.dim()) throw Error(ErrorKind::InconsistentDimensions, "anisotropy and mesh dimension differ");
  std::vector<Mat> coeff;
  coeff.reserve(static_cast<std::size_t>(mesh.num_elements()));
  const Vector& cur = a.is_linear() ? phi_prev : phi_cur;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    coeff.push_back(a.b_r(element_gradient(mesh, geom, e, phi_prev), element_gradient(mesh, geom, e, cur)));
  }
  return stiffness(mesh, geom, coeff);
}

SparseMatrix diffusion_stiffness(const SimplicialMesh& mesh, const MeshGeometry& geom, const Vector& phi_prev,
                                 double k_plus, double k_minus, bool clipped) {
  check_size(phi_prev, mesh.num_vertices(), "previous phase");
  const int d = mesh.dim();
  Vector coeff(mesh.num_elements());
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    double s = 0.0;
    for (int i = 0; i <= d; ++i) s += diffusivity_b(phi_prev(mesh.element(e).v[i]), k_plus, k_minus, clipped);
    coeff(e) = s / (d + 1);
  }
  return stiffness(mesh, geom, coeff);
}

Vector mobility_weights(const SimplicialMesh& mesh, const MeshGeometry& geom, const AnisotropyDensity& a,
                        const MobilitySpec& m, const Vector& phi_prev) {
  Vector w(mesh.num_elements());
  for (Index e = 0; e < mesh.num_elements(); ++e) w(e) = mobility_mu(a, m, element_gradient(mesh, geom, e, phi_prev));
  return w;
}

SystemMatrices assemble_step_system(const StepContext& ctx, const Vector& phi_cur) {
  const auto& mesh = ctx.mesh;
  const auto& p = ctx.params;
  const auto& model = ctx.model;
  const Eigen::Index n = mesh.num_vertices();
  check_size(ctx.phi_prev, n, "previous phase");
  check_size(ctx.w_prev, n, "previous temperature");
  check_size(phi_cur, n, "phase iterate");
  if (ctx.geom.size() != static_cast<std::size_t>(mesh.num_elements())) {
    throw Error(ErrorKind::InconsistentDimensions, "geometry does not match the mesh");
  }
  if (!(ctx.tau > 0.0)) throw Error(ErrorKind::ValidationError, "time step must be positive");

  SystemMatrices sys;
  sys.M = lumped_mass(mesh, ctx.geom);
  sys.M_mu = lumped_mass_element_weighted(
      mesh, ctx.geom, mobility_weights(mesh, ctx.geom, model.anisotropy, model.mobility, ctx.phi_prev));
  sys.A_diff = diffusion_stiffness(mesh, ctx.geom, ctx.phi_prev, p.k_plus, p.k_minus, !model.is_obstacle());
  sys.vi_scale = model.potential.c_psi() * p.a / p.alpha;

  sys.dirichlet.assign(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) sys.dirichlet[static_cast<std::size_t>(i)] = mesh.is_dirichlet(i) ? 1 : 0;

  SparseMatrix heat = (p.theta / p.lambda) * SparseMatrix(sys.M.asDiagonal()) + (ctx.tau / p.lambda) * sys.A_diff;
  sys.A_spp = with_identity_rows(heat, sys.dirichlet);

  const double kinetic = p.eps * p.rho / (p.alpha * ctx.tau);
  sys.g_tilde = kinetic * sys.M_mu.cwiseProduct(ctx.phi_prev) + (1.0 / p.eps) * sys.M.cwiseProduct(ctx.phi_prev);
  sys.g = sys.g_tilde / sys.vi_scale;

  update_iterate(ctx, phi_cur, sys);
  return sys;
}

void update_iterate(const StepContext& ctx, const Vector& phi_cur, SystemMatrices& sys) {
  const auto& p = ctx.params;
  check_size(phi_cur, ctx.mesh.num_vertices(), "phase iterate");
  const double kinetic = p.eps * p.rho / (p.alpha * ctx.tau);

  sys.B_stiff = anisotropic_stiffness(ctx.mesh, ctx.geom, ctx.model.anisotropy, ctx.phi_prev, phi_cur);
  sys.C = (kinetic / sys.vi_scale) * SparseMatrix(sys.M_mu.asDiagonal()) + (p.eps / sys.vi_scale) * sys.B_stiff;

  sys.M_rho = sys.M.cwiseProduct(rho_weights(ctx, phi_cur));
  sys.f_tilde = p.lambda * sys.M_rho.cwiseProduct(ctx.phi_prev) + p.theta * sys.M.cwiseProduct(ctx.w_prev);
  sys.rho_row = sys.M_rho;
  sys.f = sys.f_tilde / p.lambda;
  for (std::size_t i = 0; i < sys.dirichlet.size(); ++i) {
    if (!sys.dirichlet[i]) continue;
    sys.rho_row(static_cast<Eigen::Index>(i)) = 0.0;
    sys.f(static_cast<Eigen::Index>(i)) = p.u_D;
  }
}

}  // namespace anisopf
