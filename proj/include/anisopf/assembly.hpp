#pragma once

#include "anisopf/mesh.hpp"
#include "anisopf/params.hpp"

#include <Eigen/Sparse>

#include <vector>

namespace anisopf {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Volume and gradients of the d+1 barycentric basis functions of one simplex.
struct ElementGeometry {
  double volume = 0.0;
  std::array<Vec, 4> grads;
};

using MeshGeometry = std::vector<ElementGeometry>;

MeshGeometry compute_geometry(const SimplicialMesh& mesh);

/// Exact gradient of the piecewise linear interpolant on element e.
Vec element_gradient(const SimplicialMesh& mesh, const MeshGeometry& geom, Index e, const Vector& values);

/// Diagonal of the lumped mass matrix, M_ii = sum_{e ni i} |e|/(d+1).
Vector lumped_mass(const SimplicialMesh& mesh, const MeshGeometry& geom);

/// Lumped mass with a piecewise constant weight (one value per element).
Vector lumped_mass_element_weighted(const SimplicialMesh& mesh, const MeshGeometry& geom,
                                    const Vector& element_weight);

/// Lumped mass with nodal weights, M_ii = w_i sum_{e ni i} |e|/(d+1).
Vector lumped_mass_vertex_weighted(const SimplicialMesh& mesh, const MeshGeometry& geom,
                                   const Vector& vertex_weight);

/// sum_e |e| (K_e grad chi_j) . grad chi_i with one d x d coefficient per element.
SparseMatrix stiffness(const SimplicialMesh& mesh, const MeshGeometry& geom, const std::vector<Mat>& coeff);

/// Same with a scalar coefficient per element.
SparseMatrix stiffness(const SimplicialMesh& mesh, const MeshGeometry& geom, const Vector& coeff);

/// Coefficient B_r(grad phi_prev, grad phi_cur) per element.
SparseMatrix anisotropic_stiffness(const SimplicialMesh& mesh, const MeshGeometry& geom,
                                   const AnisotropyDensity& a, const Vector& phi_prev, const Vector& phi_cur);

/// Stiffness weighted by the element mean of the nodal interpolant of b(phi_prev).
SparseMatrix diffusion_stiffness(const SimplicialMesh& mesh, const MeshGeometry& geom, const Vector& phi_prev,
                                 double k_plus, double k_minus, bool clipped);

/// Per-element mobility weights mu(grad phi_prev).
Vector mobility_weights(const SimplicialMesh& mesh, const MeshGeometry& geom, const AnisotropyDensity& a,
                        const MobilitySpec& m, const Vector& phi_prev);

/// Inputs shared by every assembly within one time step.
struct StepContext {
  const SimplicialMesh& mesh;
  const MeshGeometry& geom;
  const PhysicalParams& params;
  const Model& model;
  const Vector& phi_prev;
  const Vector& w_prev;
  double tau;
};

/// All blocks of the step system.
///
/// Unscaled form, rows for the heat equation and the variational inequality:
///   lambda M_rho U + (theta M + tau A) W = f_tilde
///   (V-U)^T [eps rho/(alpha tau) M_mu + eps B] U - c_Psi a/alpha (V-U)^T M_rho W >= (V-U)^T g_tilde
/// Saddle point form, obtained by dividing the rows by lambda and c_Psi a/alpha:
///   rho_row .* U + A_spp W = f,   (V-U)^T (C U - M_rho .* W) >= (V-U)^T g,
/// where Dirichlet rows of the first equation are replaced by W_i = u_D.
struct SystemMatrices {
  Vector M;
  Vector M_mu;
  Vector M_rho;
  SparseMatrix A_diff;
  SparseMatrix B_stiff;
  Vector f_tilde;
  Vector g_tilde;

  double vi_scale = 1.0;  // c_Psi a / alpha
  SparseMatrix C;
  SparseMatrix A_spp;
  Vector rho_row;
  Vector f;
  Vector g;
  std::vector<char> dirichlet;
};

/// Assembles every block at the phase iterate `phi_cur`.
SystemMatrices assemble_step_system(const StepContext& ctx, const Vector& phi_cur);

/// Rebuilds only the blocks that depend on the phase iterate (C, M_rho,
/// rho_row, f, f_tilde) in place.
void update_iterate(const StepContext& ctx, const Vector& phi_cur, SystemMatrices& sys);

}  // namespace anisopf
