#pragma once

#include "anisopf/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace anisopf {

/// Anisotropic surface energy density of the form
///   gamma(p) = ( sum_l (p . G_l p)^{r/2} )^{1/r}
/// with symmetric positive definite G_l and exponent r >= 1.
///
/// The object is immutable after construction; the constructor checks
/// symmetry and positive definiteness of every G_l.
class AnisotropyDensity {
 public:
  AnisotropyDensity(std::vector<Mat> matrices, double exponent);

  int dim() const noexcept { return dim_; }
  double exponent() const noexcept { return r_; }
  std::size_t count() const noexcept { return matrices_.size(); }
  const std::vector<Mat>& matrices() const noexcept { return matrices_; }

  /// gamma_l(p) = sqrt(p . G_l p)
  double component(std::size_t l, const Vec& p) const;

  /// gamma(p); zero iff p = 0.
  double gamma(const Vec& p) const;

  /// gamma'(p). Throws ZeroDirection for p = 0.
  Vec gamma_grad(const Vec& p) const;

  /// A(p) = gamma(p)^2 / 2
  double a_value(const Vec& p) const;

  /// A'(p) = gamma(p) gamma'(p), with A'(0) = 0.
  Vec a_prime(const Vec& p) const;

  /// Linearized anisotropic operator B_r(q, p). Symmetric positive definite
  /// for every q and p; B_r(p, p) p = A'(p) for p != 0. The ratios
  /// gamma_l(p)/gamma(p) are taken as 1 when p = 0.
  Mat b_r(const Vec& q, const Vec& p) const;

  /// True when the exponent is 1, i.e. B_r(q, p) does not depend on p.
  bool is_linear() const noexcept { return r_ == 1.0; }

 private:
  // weights [gamma_l(p)/gamma(p)]^{r-1}
  void ratio_weights(const Vec& p, std::span<double> out) const;

  std::vector<Mat> matrices_;
  double r_;
  int dim_;
};

enum class MobilityKind { SameAsGamma, Flat, Tall, Custom };

/// Kinetic mobility beta and the fallback value mu_bar used at p = 0.
struct MobilitySpec {
  MobilityKind kind = MobilityKind::SameAsGamma;
  int ell = 0;
  double mu_bar = 1.0;
  // Only used for MobilityKind::Custom.
  std::vector<Mat> custom_matrices;
  double custom_exponent = 1.0;

  double beta(const AnisotropyDensity& a, const Vec& p) const;
};

/// mu(p) = gamma(p)/beta(p) for p != 0 and mu_bar for p = 0.
double mobility_mu(const AnisotropyDensity& a, const MobilitySpec& m, const Vec& p);

/// Ratio gamma(e_1)/beta(e_1); lies inside the admissible interval for mu_bar.
double default_mu_bar(const AnisotropyDensity& a, const MobilitySpec& m);

/// gamma(p) = sum_j [delta^2 |p|^2 + p_j^2 (1 - delta^2)]^{1/2}, r = 1, L = d.
AnisotropyDensity make_regularized_l1(double delta, int dim);

/// G_l = R_l^T diag(1, delta^2, ..., delta^2) R_l for each rotation R_l.
AnisotropyDensity make_rotated_family(double delta, std::span<const Mat> rotations, double exponent);

/// Rotation by `angle` in the x1-x2 plane, embedded in dimension `dim`.
Mat plane_rotation(double angle, int dim);

/// Named presets: "iso", "ani1:<delta>", "hex2d:<delta>", "hex2d-rot:<delta>",
/// "cube3d:<delta>:<r>", "hexprism3d:<delta>"; a trailing ":rot" rotates the
/// family by pi/12 in the x1-x2 plane. `dim` fixes the dimension for the
/// dimension-generic presets and must agree with the fixed-dimension ones.
AnisotropyDensity anisotropy_preset(std::string_view name, int dim);

/// Mobility names: "gamma", "flat:<l>", "tall:<l>". mu_bar is set to
/// default_mu_bar unless `mu_bar_override` is positive.
MobilitySpec mobility_preset(std::string_view name, const AnisotropyDensity& a,
                             double mu_bar_override = 0.0);

struct InequalityReport {
  std::int64_t samples = 0;
  std::int64_t growth_violations = 0;        // gamma vs Hoelder bound
  std::int64_t convexity_violations = 0;     // gamma'(p).q <= gamma(q)
  std::int64_t monotonicity_violations = 0;  // A'(p).(p-q) >= gamma(p)(gamma(p)-gamma(q))
  std::int64_t b_monotonicity_violations = 0;
  std::int64_t b_stability_violations = 0;
  double worst_slack = 0.0;  // most negative scaled slack seen

  std::int64_t total_violations() const noexcept {
    return growth_violations + convexity_violations + monotonicity_violations +
           b_monotonicity_violations + b_stability_violations;
  }
};

/// Samples seeded random pairs (p, q) with components in [-10, 10], plus the
/// degenerate pairs p = 0, q = 0 and p = q, and counts violations of the
/// structural inequalities satisfied by every density of this class.
InequalityReport verify_anisotropy_inequalities(const AnisotropyDensity& a, std::int64_t samples,
                                                std::uint64_t seed);

}  // namespace anisopf
