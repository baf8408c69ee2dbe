#pragma once

#include "anisopf/anisotropy.hpp"
#include "anisopf/mesh.hpp"
#include "anisopf/potentials.hpp"

#include <numbers>

namespace anisopf {

/// Constant physical parameters of the model and the time discretization.
struct PhysicalParams {
  double theta = 0.0;  // heat capacity
  double lambda = 1.0;  // latent heat
  double a = 1.0;
  double alpha = 1.0;  // surface energy coefficient
  double rho = 0.0;  // kinetic coefficient
  double k_plus = 1.0;
  double k_minus = 1.0;
  double eps = 1.0 / (16.0 * std::numbers::pi);
  double u_D = 0.0;
  double H = 0.5;
  BoundaryCase bc = BoundaryCase::Dirichlet;
  double R0 = 0.1;
  double T_end = 1e-3;
  double tau = 1e-5;
  int dim = 2;

  /// Throws ValidationError naming the first offending parameter.
  void validate() const;
  bool operator==(const PhysicalParams&) const = default;
};

/// Constitutive choices: anisotropy, mobility, potential and shape function.
struct Model {
  AnisotropyDensity anisotropy;
  MobilitySpec mobility;
  PotentialSpec potential;
  ShapeSpec shape;

  bool is_obstacle() const noexcept { return potential.kind == PotentialKind::Obstacle; }
  /// The step problem does not depend on the new phase iterate.
  bool is_linear() const noexcept { return anisotropy.is_linear() && shape.explicit_only(); }
};

}  // namespace anisopf
