#pragma once

#include "anisopf/types.hpp"

#include <string_view>

namespace anisopf {

enum class PotentialKind { Obstacle, Quartic };

/// Double-well potential. The obstacle potential is +infinity outside
/// [-1, 1] and is only ever handled through the variational inequality.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::Obstacle;

  /// c_Psi = int_{-1}^{1} sqrt(2 Psi(s)) ds
  double c_psi() const;
  double psi(double s) const;
};

struct PhiSplit {
  double plus;   // derivative of the convex part, treated implicitly
  double minus;  // derivative of the concave part, treated explicitly
};

/// (s^3, -s) for the quartic potential. Throws NotApplicable for obstacle.
PhiSplit phi_split(const PotentialSpec& pot, double s);

enum class ShapeKind {
  Constant,      // rho = 1/2
  LinearMinus,   // rho = (1 - s)/2, rho(1) = 0
  LinearPlus,    // rho = (1 + s)/2, rho(-1) = 0
  QuarticShape,  // rho = 15/16 (s^2 - 1)^2
};

/// Which convex/concave splitting of rho is used; it has to match the sign
/// of the boundary temperature u_D for the energy bound to hold.
enum class SplitSign { ForNegativeUD, ForPositiveUD };

struct ShapeSpec {
  ShapeKind kind = ShapeKind::Constant;
  SplitSign split = SplitSign::ForNegativeUD;
  double cutoff_m = 2.0;

  /// rho^+ == 0, i.e. the coupling coefficient is fully explicit.
  bool explicit_only() const noexcept { return kind != ShapeKind::QuarticShape; }
};

struct ShapeValues {
  double rho;
  double rho_plus;
  double rho_minus;
  double P;  // int_{-1}^{s} rho
};

ShapeValues shape_eval(const ShapeSpec& sh, double s);

/// d/ds rho^+(s)
double shape_rho_plus_derivative(const ShapeSpec& sh, double s);

/// rho^-(s_old) + rho^+(s_new), uncut.
double shape_hat(const ShapeSpec& sh, double s_old, double s_new);

/// rho^-(s_old) + rho^+_m(s_new) with s_new clamped to [-m, m].
double shape_cutoff(const ShapeSpec& sh, double s_old, double s_new);

/// d/ds_new of shape_cutoff; zero where the cut-off is active.
double shape_cutoff_derivative(const ShapeSpec& sh, double s_new);

/// b(s) = (1+s)K+/2 + (1-s)K-/2; the clipped variant clamps s to [-1, 1].
double diffusivity_b(double s, double k_plus, double k_minus, bool clipped);

struct BoundaryLayerReport {
  bool stable_at_plus1;
  bool stable_at_minus1;
  double critical_uD;
};

/// Whether the pure phases Phi = +1 / Phi = -1 with W = u_D are steady
/// states of the discrete scheme, plus the critical (most negative) u_D for
/// which Phi = +1 stays stationary.
BoundaryLayerReport boundary_layer_check(const PotentialSpec& pot, const ShapeSpec& sh, double eps,
                                         double alpha, double a, double u_D);

PotentialSpec parse_potential(std::string_view name);

/// "const" | "linear" | "quartic-shape" (or "i" | "ii" | "iii"); "linear" resolves
/// by the sign of u_D.
/// The split direction is chosen from the sign of u_D as well.
ShapeSpec parse_shape(std::string_view name, double u_D, double cutoff_m = 2.0);

std::string_view to_string(PotentialKind kind);
std::string_view to_string(ShapeKind kind);

}  // namespace anisopf
