#include "anisopf/anisotropy.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>

namespace anisopf {

namespace {

constexpr std::size_t kMaxComponents = 16;

bool is_zero(const Vec& p) { return p.squaredNorm() == 0.0; }

// (sum_l x_l^r)^{1/r}, scaled by the largest entry to keep x^r finite.
double power_mean_sum(std::span<const double> x, double r) {
  double m = 0.0;
  for (double v : x) m = std::max(m, v);
  if (m == 0.0) return 0.0;
  if (r == 1.0) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  double s = 0.0;
  for (double v : x) s += std::pow(v / m, r);
  return m * std::pow(s, 1.0 / r);
}

double parse_double(std::string_view token, std::string_view context) {
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorKind::UnknownPreset,
                "cannot parse number '" + std::string(token) + "' in '" + std::string(context) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Mat cyclic_permutation(int shift) {
  Mat R = Mat::Zero(3, 3);
  for (int i = 0; i < 3; ++i) R(i, (i + shift) % 3) = 1.0;
  return R;
}

}  // namespace

AnisotropyDensity::AnisotropyDensity(std::vector<Mat> matrices, double exponent)
    : matrices_(std::move(matrices)), r_(exponent), dim_(0) {
  if (matrices_.empty() || matrices_.size() > kMaxComponents) {
    throw Error(ErrorKind::InvalidAnisotropy, "need between 1 and 16 matrices");
  }
  if (!(r_ >= 1.0) || !std::isfinite(r_)) {
    throw Error(ErrorKind::InvalidAnisotropy, "exponent r must be >= 1");
  }
  dim_ = static_cast<int>(matrices_.front().rows());
  if (dim_ != 2 && dim_ != 3) throw Error(ErrorKind::InvalidAnisotropy, "dimension must be 2 or 3");
  for (const auto& G : matrices_) {
    if (G.rows() != dim_ || G.cols() != dim_) {
      throw Error(ErrorKind::InvalidAnisotropy, "matrix dimensions disagree");
    }
    const double scale = G.cwiseAbs().maxCoeff();
    if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw Error(ErrorKind::InvalidAnisotropy, "matrix is not symmetric");
    }
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::InvalidAnisotropy, "matrix is not positive definite");
    }
  }
}

double AnisotropyDensity::component(std::size_t l, const Vec& p) const {
  return std::sqrt(std::max(0.0, p.dot(matrices_[l] * p)));
}

double AnisotropyDensity::gamma(const Vec& p) const {
  std::array<double, kMaxComponents> g{};
  for (std::size_t l = 0; l < matrices_.size(); ++l) g[l] = component(l, p);
  return power_mean_sum(std::span<const double>(g.data(), matrices_.size()), r_);
}

void AnisotropyDensity::ratio_weights(const Vec& p, std::span<double> out) const {
  const std::size_t L = matrices_.size();
  if (r_ == 1.0 || is_zero(p)) {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(L), 1.0);
    return;
  }
  std::array<double, kMaxComponents> g{};
  for (std::size_t l = 0; l < L; ++l) g[l] = component(l, p);
  const double total = power_mean_sum(std::span<const double>(g.data(), L), r_);
  for (std::size_t l = 0; l < L; ++l) out[l] = std::pow(g[l] / total, r_ - 1.0);
}

Vec AnisotropyDensity::gamma_grad(const Vec& p) const {
  if (is_zero(p)) throw Error(ErrorKind::ZeroDirection, "gamma'(0) is undefined");
  std::array<double, kMaxComponents> w{};
  ratio_weights(p, w);
  Vec grad = Vec::Zero(dim_);
  for (std::size_t l = 0; l < matrices_.size(); ++l) {
    grad += (w[l] / component(l, p)) * (matrices_[l] * p);
  }
  return grad;
}

double AnisotropyDensity::a_value(const Vec& p) const {
  const double g = gamma(p);
  return 0.5 * g * g;
}

Vec AnisotropyDensity::a_prime(const Vec& p) const {
  if (is_zero(p)) return Vec::Zero(dim_);
  return gamma(p) * gamma_grad(p);
}

Mat AnisotropyDensity::b_r(const Vec& q, const Vec& p) const {
  const std::size_t L = matrices_.size();
  std::array<double, kMaxComponents> w{};
  ratio_weights(p, w);
  Mat B = Mat::Zero(dim_, dim_);
  if (is_zero(q)) {
    const double factor = std::pow(static_cast<double>(L), 1.0 / r_);
    for (std::size_t l = 0; l < L; ++l) B += (factor * w[l]) * matrices_[l];
    return B;
  }
  const double gq = gamma(q);
  for (std::size_t l = 0; l < L; ++l) B += (gq * w[l] / component(l, q)) * matrices_[l];
  return B;
}

double MobilitySpec::beta(const AnisotropyDensity& a, const Vec& p) const {
  const int d = static_cast<int>(p.size());
  const double small = std::pow(10.0, -2.0 * ell);
  switch (kind) {
    case MobilityKind::SameAsGamma:
      return a.gamma(p);
    case MobilityKind::Flat: {
      double s = 0.0;
      for (int i = 0; i + 1 < d; ++i) s += p[i] * p[i];
      return std::sqrt(s + small * p[d - 1] * p[d - 1]);
    }
    case MobilityKind::Tall: {
      double s = 0.0;
      for (int i = 0; i + 1 < d; ++i) s += p[i] * p[i];
      return std::sqrt(small * s + p[d - 1] * p[d - 1]);
    }
    case MobilityKind::Custom: {
      std::array<double, kMaxComponents> g{};
      const std::size_t L = std::min(custom_matrices.size(), kMaxComponents);
      for (std::size_t l = 0; l < L; ++l) g[l] = std::sqrt(std::max(0.0, p.dot(custom_matrices[l] * p)));
      return power_mean_sum(std::span<const double>(g.data(), L), custom_exponent);
    }
  }
  return a.gamma(p);
}

double mobility_mu(const AnisotropyDensity& a, const MobilitySpec& m, const Vec& p) {
  if (is_zero(p)) return m.mu_bar;
  if (m.kind == MobilityKind::SameAsGamma) return 1.0;
  return a.gamma(p) / m.beta(a, p);
}

double default_mu_bar(const AnisotropyDensity& a, const MobilitySpec& m) {
  Vec e1 = Vec::Zero(a.dim());
  e1[0] = 1.0;
  return mobility_mu(a, m, e1);
}

AnisotropyDensity make_regularized_l1(double delta, int dim) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorKind::InvalidDelta, "regularized l1 requires 0 < delta < 1");
  }
  if (dim != 2 && dim != 3) throw Error(ErrorKind::InvalidAnisotropy, "dimension must be 2 or 3");
  std::vector<Mat> G;
  for (int j = 0; j < dim; ++j) {
    Mat Gj = delta * delta * Mat::Identity(dim, dim);
    Gj(j, j) += 1.0 - delta * delta;
    G.push_back(Gj);
  }
  return AnisotropyDensity(std::move(G), 1.0);
}

AnisotropyDensity make_rotated_family(double delta, std::span<const Mat> rotations, double exponent) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidDelta, "rotated family requires delta > 0");
  if (rotations.empty()) throw Error(ErrorKind::InvalidAnisotropy, "need at least one rotation");
  const auto dim = rotations.front().rows();
  Mat D = delta * delta * Mat::Identity(dim, dim);
  D(0, 0) = 1.0;
  std::vector<Mat> G;
  for (const auto& R : rotations) {
    if (R.rows() != dim || R.cols() != dim) throw Error(ErrorKind::NotRotation, "dimension mismatch");
    const double orth = (R.transpose() * R - Mat::Identity(dim, dim)).cwiseAbs().maxCoeff();
    if (orth > 1e-12 || std::abs(R.determinant() - 1.0) > 1e-12) {
      throw Error(ErrorKind::NotRotation, "matrix is not a proper rotation");
    }
    Mat Gl = R.transpose() * D * R;
    Gl = 0.5 * (Gl + Gl.transpose()).eval();
    G.push_back(Gl);
  }
  return AnisotropyDensity(std::move(G), exponent);
}

Mat plane_rotation(double angle, int dim) {
  Mat R = Mat::Identity(dim, dim);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  R(0, 0) = c;
  R(0, 1) = -s;
  R(1, 0) = s;
  R(1, 1) = c;
  return R;
}

AnisotropyDensity anisotropy_preset(std::string_view name, int dim) {
  auto tokens = split(name, ':');
  bool rotate = false;
  if (tokens.size() > 1 && tokens.back() == "rot") {
    rotate = true;
    tokens.pop_back();
  }
  const std::string_view head = tokens.front();
  const auto nargs = tokens.size() - 1;
  auto require = [&](std::size_t n, int fixed_dim) {
    if (nargs != n) {
      throw Error(ErrorKind::UnknownPreset, "wrong number of parameters in '" + std::string(name) + "'");
    }
    if (fixed_dim != 0 && dim != fixed_dim) {
      throw Error(ErrorKind::UnknownPreset,
                  "preset '" + std::string(name) + "' requires dimension " + std::to_string(fixed_dim));
    }
  };
  if (dim != 2 && dim != 3) throw Error(ErrorKind::InvalidAnisotropy, "dimension must be 2 or 3");

  auto finish = [&](AnisotropyDensity a) {
    if (!rotate) return a;
    const Mat R = plane_rotation(std::numbers::pi / 12.0, dim);
    std::vector<Mat> G;
    for (const auto& Gl : a.matrices()) {
      Mat rotated = R * Gl * R.transpose();
      G.push_back(0.5 * (rotated + rotated.transpose()));
    }
    return AnisotropyDensity(std::move(G), a.exponent());
  };

  if (head == "iso") {
    require(0, 0);
    return finish(AnisotropyDensity({Mat::Identity(dim, dim)}, 1.0));
  }
  if (head == "ani1") {
    require(1, 0);
    return finish(make_regularized_l1(parse_double(tokens[1], name), dim));
  }
  if (head == "hex2d" || head == "hex2d-rot") {
    require(1, 2);
    if (head == "hex2d-rot") rotate = true;
    std::vector<Mat> rotations;
    for (int l = 0; l < 3; ++l) rotations.push_back(plane_rotation(-l * std::numbers::pi / 3.0, 2));
    return finish(make_rotated_family(parse_double(tokens[1], name), rotations, 1.0));
  }
  if (head == "cube3d") {
    require(2, 3);
    std::vector<Mat> rotations{cyclic_permutation(0), cyclic_permutation(1), cyclic_permutation(2)};
    return finish(make_rotated_family(parse_double(tokens[1], name), rotations, parse_double(tokens[2], name)));
  }
  if (head == "hexprism3d") {
    require(1, 3);
    std::vector<Mat> rotations;
    for (int l = 0; l < 3; ++l) rotations.push_back(plane_rotation(-l * std::numbers::pi / 3.0, 3));
    rotations.push_back(cyclic_permutation(2));
    return finish(make_rotated_family(parse_double(tokens[1], name), rotations, 1.0));
  }
  throw Error(ErrorKind::UnknownPreset, "unknown anisotropy preset '" + std::string(name) + "'");
}

MobilitySpec mobility_preset(std::string_view name, const AnisotropyDensity& a, double mu_bar_override) {
  MobilitySpec m;
  const auto tokens = split(name, ':');
  if (tokens.size() == 1 && tokens[0] == "gamma") {
    m.kind = MobilityKind::SameAsGamma;
  } else if (tokens.size() == 2 && (tokens[0] == "flat" || tokens[0] == "tall")) {
    m.kind = tokens[0] == "flat" ? MobilityKind::Flat : MobilityKind::Tall;
    const double ell = parse_double(tokens[1], name);
    if (ell < 0.0 || ell != std::floor(ell)) {
      throw Error(ErrorKind::UnknownPreset, "mobility level must be a nonnegative integer");
    }
    m.ell = static_cast<int>(ell);
  } else {
    throw Error(ErrorKind::UnknownPreset, "unknown mobility '" + std::string(name) + "'");
  }
  m.mu_bar = mu_bar_override > 0.0 ? mu_bar_override : default_mu_bar(a, m);
  return m;
}

InequalityReport verify_anisotropy_inequalities(const AnisotropyDensity& a, std::int64_t samples,
                                                std::uint64_t seed) {
  InequalityReport report;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-10.0, 10.0);
  const int d = a.dim();
  const double L = static_cast<double>(a.count());
  const double r = a.exponent();

  auto random_vec = [&] {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = uniform(rng);
    return v;
  };
  // lhs >= rhs up to the scaled slack
  auto check = [&](double lhs, double rhs, std::int64_t& counter) {
    const double slack = (lhs - rhs) / (1.0 + std::abs(lhs) + std::abs(rhs));
    report.worst_slack = std::min(report.worst_slack, slack);
    if (slack < -1e-9) ++counter;
  };

  for (std::int64_t s = 0; s < samples; ++s) {
    Vec p = random_vec();
    Vec q = random_vec();
    switch (s) {
      case 0: p.setZero(); break;
      case 1: q.setZero(); break;
      case 2: q = p; break;
      case 3: p.setZero(); q.setZero(); break;
      default: break;
    }
    ++report.samples;

    const double gp = a.gamma(p);
    const double gq = a.gamma(q);

    double sum_r1 = 0.0;
    for (std::size_t l = 0; l < a.count(); ++l) sum_r1 += std::pow(a.component(l, p), r + 1.0);
    const double bound = std::pow(L, 1.0 / (r * (r + 1.0))) * std::pow(sum_r1, 1.0 / (r + 1.0));
    check(bound, gp, report.growth_violations);

    if (p.squaredNorm() > 0.0) {
      check(gq, a.gamma_grad(p).dot(q), report.convexity_violations);
    }
    check(a.a_prime(p).dot(p - q), gp * (gp - gq), report.monotonicity_violations);

    const Vec bp = a.b_r(q, p) * p;
    check(bp.dot(p - q), gp * (gp - gq), report.b_monotonicity_violations);
    check(bp.dot(p - q), 0.5 * gp * gp - 0.5 * gq * gq, report.b_stability_violations);
  }
  return report;
}

}  // namespace anisopf
