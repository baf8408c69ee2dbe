#include "anisopf/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace anisopf {

double PotentialSpec::c_psi() const {
  return kind == PotentialKind::Quartic ? 2.0 * std::numbers::sqrt2 / 3.0 : std::numbers::pi / 2.0;
}

double PotentialSpec::psi(double s) const {
  if (kind == PotentialKind::Quartic) {
    const double t = s * s - 1.0;
    return 0.25 * t * t;
  }
  if (std::abs(s) > 1.0) return std::numeric_limits<double>::infinity();
  return 0.5 * (1.0 - s * s);
}

PhiSplit phi_split(const PotentialSpec& pot, double s) {
  if (pot.kind != PotentialKind::Quartic) {
    throw Error(ErrorKind::NotApplicable, "the obstacle potential has no smooth derivative split");
  }
  return {s * s * s, -s};
}

namespace {

double rho_plus(const ShapeSpec& sh, double s) {
  if (sh.kind != ShapeKind::QuarticShape) return 0.0;
  return sh.split == SplitSign::ForNegativeUD ? 1.5 * s : -1.5 * s;
}

}  // namespace

ShapeValues shape_eval(const ShapeSpec& sh, double s) {
  double rho = 0.0;
  double P = 0.0;
  switch (sh.kind) {
    case ShapeKind::Constant:
      rho = 0.5;
      P = 0.5 * (s + 1.0);
      break;
    case ShapeKind::LinearMinus:
      rho = 0.5 * (1.0 - s);
      P = 0.5 * (s + 1.0) - 0.25 * (s * s - 1.0);
      break;
    case ShapeKind::LinearPlus:
      rho = 0.5 * (1.0 + s);
      P = 0.5 * (s + 1.0) + 0.25 * (s * s - 1.0);
      break;
    case ShapeKind::QuarticShape: {
      const double t = s * s - 1.0;
      rho = 15.0 / 16.0 * t * t;
      const double s3 = s * s * s;
      P = 15.0 / 16.0 * ((s3 * s * s + 1.0) / 5.0 - 2.0 * (s3 + 1.0) / 3.0 + (s + 1.0));
      break;
    }
  }
  const double plus = rho_plus(sh, s);
  return {rho, plus, rho - plus, P};
}

double shape_rho_plus_derivative(const ShapeSpec& sh, double /*s*/) {
  if (sh.kind != ShapeKind::QuarticShape) return 0.0;
  return sh.split == SplitSign::ForNegativeUD ? 1.5 : -1.5;
}

double shape_hat(const ShapeSpec& sh, double s_old, double s_new) {
  return shape_eval(sh, s_old).rho_minus + rho_plus(sh, s_new);
}

double shape_cutoff(const ShapeSpec& sh, double s_old, double s_new) {
  const double m = sh.cutoff_m;
  return shape_eval(sh, s_old).rho_minus + rho_plus(sh, std::clamp(s_new, -m, m));
}

double shape_cutoff_derivative(const ShapeSpec& sh, double s_new) {
  if (std::abs(s_new) > sh.cutoff_m) return 0.0;
  return shape_rho_plus_derivative(sh, s_new);
}

double diffusivity_b(double s, double k_plus, double k_minus, bool clipped) {
  if (clipped) s = std::clamp(s, -1.0, 1.0);
  return 0.5 * (1.0 + s) * k_plus + 0.5 * (1.0 - s) * k_minus;
}

BoundaryLayerReport boundary_layer_check(const PotentialSpec& pot, const ShapeSpec& sh, double eps,
                                         double alpha, double a, double u_D) {
  const double rho_p1 = shape_eval(sh, 1.0).rho;
  const double rho_m1 = shape_eval(sh, -1.0).rho;
  const double barrier = alpha / (a * pot.c_psi() * eps);
  BoundaryLayerReport out{};
  if (pot.kind == PotentialKind::Obstacle) {
    // relative round-off allowance: the threshold is attained with equality
    auto nonneg = [](double x, double scale) { return x >= -1e-12 * scale; };
    out.stable_at_plus1 = nonneg(barrier + u_D * rho_p1, barrier + std::abs(u_D * rho_p1));
    out.stable_at_minus1 = nonneg(barrier - u_D * rho_m1, barrier + std::abs(u_D * rho_m1));
  } else {
    out.stable_at_plus1 = u_D * rho_p1 == 0.0;
    out.stable_at_minus1 = u_D * rho_m1 == 0.0;
  }
  out.critical_uD = rho_p1 > 0.0 ? -barrier / rho_p1 : -std::numeric_limits<double>::infinity();
  return out;
}

PotentialSpec parse_potential(std::string_view name) {
  if (name == "obstacle") return {PotentialKind::Obstacle};
  if (name == "quartic") return {PotentialKind::Quartic};
  throw Error(ErrorKind::ValidationError, "unknown potential '" + std::string(name) + "'");
}

ShapeSpec parse_shape(std::string_view name, double u_D, double cutoff_m) {
  ShapeSpec sh;
  sh.split = u_D > 0.0 ? SplitSign::ForPositiveUD : SplitSign::ForNegativeUD;
  sh.cutoff_m = cutoff_m;
  if (name == "const" || name == "i") {
    sh.kind = ShapeKind::Constant;
  } else if (name == "linear" || name == "ii") {
    sh.kind = u_D > 0.0 ? ShapeKind::LinearPlus : ShapeKind::LinearMinus;
  } else if (name == "quartic-shape" || name == "iii") {
    sh.kind = ShapeKind::QuarticShape;
  } else {
    throw Error(ErrorKind::ValidationError, "unknown shape function '" + std::string(name) + "'");
  }
  return sh;
}

std::string_view to_string(PotentialKind kind) {
  return kind == PotentialKind::Obstacle ? "obstacle" : "quartic";
}

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Constant: return "const";
    case ShapeKind::LinearMinus: return "linear-minus";
    case ShapeKind::LinearPlus: return "linear-plus";
    case ShapeKind::QuarticShape: return "quartic-shape";
  }
  return "unknown";
}

}  // namespace anisopf
