#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"

#include <Eigen/Dense>

#include <random>

using namespace anisopf;
using oracle::DenseMatrix;

namespace {

SimplicialMesh reference_triangle() {
  return SimplicialMesh(2, 1.0, BoundaryCase::Neumann, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {Element{{0, 1, 2, -1}, 2, 0}});
}

Vector random_vector(Eigen::Index n, unsigned seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

double max_abs(const DenseMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("reference triangle mass and stiffness") {
  const auto mesh = reference_triangle();
  const auto geom = compute_geometry(mesh);
  CHECK(geom[0].volume == doctest::Approx(0.5));
  const Vector m = lumped_mass(mesh, geom);
  for (int i = 0; i < 3; ++i) CHECK(m(i) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

  const DenseMatrix K = DenseMatrix(stiffness(mesh, geom, Vector::Ones(1)));
  DenseMatrix expected(3, 3);
  expected << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  CHECK(max_abs(K - expected) < 1e-15);
}

TEST_CASE("reference tetrahedron volume and mass") {
  const SimplicialMesh mesh(3, 1.0, BoundaryCase::Neumann, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
                            {Element{{0, 1, 2, 3}, 3, 0}});
  const auto geom = compute_geometry(mesh);
  CHECK(geom[0].volume == doctest::Approx(1.0 / 6.0));
  const Vector m = lumped_mass(mesh, geom);
  for (int i = 0; i < 4; ++i) CHECK(m(i) == doctest::Approx(1.0 / 24.0));
}

TEST_CASE("element gradients reproduce linear functions") {
  for (int dim : {2, 3}) {
    const auto mesh = build_uniform_mesh(1.0, 4, dim, BoundaryCase::Dirichlet);
    const auto geom = compute_geometry(mesh);
    Vector f(mesh.num_vertices());
    for (Index i = 0; i < mesh.num_vertices(); ++i) {
      const auto& x = mesh.vertex(i);
      f(i) = 2.0 * x[0] - 3.0 * x[1] + (dim == 3 ? 0.5 * x[2] : 0.0);
    }
    for (Index e = 0; e < mesh.num_elements(); ++e) {
      const Vec g = element_gradient(mesh, geom, e, f);
      CHECK(g(0) == doctest::Approx(2.0));
      CHECK(g(1) == doctest::Approx(-3.0));
      if (dim == 3) CHECK(g(2) == doctest::Approx(0.5));
    }
  }
}

TEST_CASE("lumped mass sums to the domain volume") {
  for (int dim : {2, 3}) {
    const auto mesh = build_uniform_mesh(0.5, 4, dim, BoundaryCase::Neumann);
    const auto geom = compute_geometry(mesh);
    CHECK(lumped_mass(mesh, geom).sum() == doctest::Approx(std::pow(1.0, dim)));
    CHECK(lumped_mass(mesh, geom).minCoeff() > 0.0);
  }
}

TEST_CASE("weighted lumped masses") {
  const auto mesh = build_uniform_mesh(1.0, 4, 2, BoundaryCase::Neumann);
  const auto geom = compute_geometry(mesh);
  const Vector m = lumped_mass(mesh, geom);
  CHECK((lumped_mass_element_weighted(mesh, geom, Vector::Ones(mesh.num_elements())) - m).norm() == 0.0);
  CHECK((lumped_mass_element_weighted(mesh, geom, Vector::Constant(mesh.num_elements(), 3.0)) - 3.0 * m)
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  const Vector w = random_vector(mesh.num_vertices(), 4);
  CHECK((lumped_mass_vertex_weighted(mesh, geom, w) - m.cwiseProduct(w)).norm() == 0.0);
  CHECK_THROWS_AS(lumped_mass_element_weighted(mesh, geom, Vector::Ones(3)), Error);
}

TEST_CASE("stiffness kernel, symmetry and linearity") {
  for (int dim : {2, 3}) {
    const auto mesh = build_uniform_mesh(1.0, 4, dim, BoundaryCase::Neumann);
    const auto geom = compute_geometry(mesh);
    const Vector c1 = random_vector(mesh.num_elements(), 1, 0.5, 2.0);
    const Vector c2 = random_vector(mesh.num_elements(), 2, 0.5, 2.0);
    const DenseMatrix K1 = DenseMatrix(stiffness(mesh, geom, c1));
    const DenseMatrix K2 = DenseMatrix(stiffness(mesh, geom, c2));
    const DenseMatrix K12 = DenseMatrix(stiffness(mesh, geom, Vector(2.0 * c1 + 3.0 * c2)));
    CHECK((K1 * Vector::Ones(mesh.num_vertices())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(max_abs(K1 - K1.transpose()) < 1e-13);
    CHECK(max_abs(K12 - (2.0 * K1 + 3.0 * K2)) < 1e-12);
    const Vector eig = Eigen::SelfAdjointEigenSolver<DenseMatrix>(K1).eigenvalues();
    CHECK(eig.minCoeff() > -1e-12);
  }
}

TEST_CASE("anisotropic stiffness") {
  const auto mesh = build_uniform_mesh(1.0, 8, 2, BoundaryCase::Dirichlet);
  const auto geom = compute_geometry(mesh);
  const Vector phi_prev = random_vector(mesh.num_vertices(), 11);
  const Vector phi_cur = random_vector(mesh.num_vertices(), 12);

  SUBCASE("isotropic density gives the plain Laplacian") {
    const auto iso = anisotropy_preset("iso", 2);
    const DenseMatrix B = DenseMatrix(anisotropic_stiffness(mesh, geom, iso, phi_prev, phi_cur));
    const DenseMatrix K = DenseMatrix(stiffness(mesh, geom, Vector::Ones(mesh.num_elements())));
    CHECK(max_abs(B - K) < 1e-12);
  }
  SUBCASE("r = 1 does not depend on the current iterate") {
    const auto a = anisotropy_preset("hex2d:0.1", 2);
    const DenseMatrix B1 = DenseMatrix(anisotropic_stiffness(mesh, geom, a, phi_prev, phi_cur));
    const DenseMatrix B2 = DenseMatrix(anisotropic_stiffness(mesh, geom, a, phi_prev, phi_prev));
    CHECK(max_abs(B1 - B2) == 0.0);
  }
  SUBCASE("symmetric positive semidefinite for r > 1") {
    Mat g1 = Mat::Zero(2, 2), g2 = Mat::Zero(2, 2);
    g1.diagonal() << 1.0, 0.01;
    g2.diagonal() << 0.01, 1.0;
    const AnisotropyDensity a({g1, g2}, 3.0);
    const DenseMatrix B = DenseMatrix(anisotropic_stiffness(mesh, geom, a, phi_prev, phi_cur));
    CHECK(max_abs(B - B.transpose()) < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<DenseMatrix>(B).eigenvalues().minCoeff() > -1e-10);
    CHECK((B * Vector::Ones(mesh.num_vertices())).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("consistency: B(phi, phi) phi equals the discrete A' form") {
    const auto a = anisotropy_preset("ani1:0.3", 2);
    const Vector Bphi = anisotropic_stiffness(mesh, geom, a, phi_prev, phi_prev) * phi_prev;
    Vector expected = Vector::Zero(mesh.num_vertices());
    for (Index e = 0; e < mesh.num_elements(); ++e) {
      const Vec ap = a.a_prime(element_gradient(mesh, geom, e, phi_prev));
      const auto& g = geom[static_cast<std::size_t>(e)];
      for (int i = 0; i < 3; ++i) expected(mesh.element(e).v[i]) += g.volume * ap.dot(g.grads[static_cast<std::size_t>(i)]);
    }
    CHECK((Bphi - expected).cwiseAbs().maxCoeff() < 1e-11);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(anisotropic_stiffness(mesh, geom, anisotropy_preset("iso", 3), phi_prev, phi_cur), Error);
    CHECK_THROWS_AS(anisotropic_stiffness(mesh, geom, anisotropy_preset("iso", 2), Vector::Zero(3), phi_cur), Error);
  }
}

TEST_CASE("diffusion stiffness") {
  const auto mesh = build_uniform_mesh(1.0, 4, 2, BoundaryCase::Dirichlet);
  const auto geom = compute_geometry(mesh);
  const Vector phi = random_vector(mesh.num_vertices(), 21);
  const DenseMatrix K = DenseMatrix(stiffness(mesh, geom, Vector::Ones(mesh.num_elements())));
  CHECK(max_abs(DenseMatrix(diffusion_stiffness(mesh, geom, phi, 1.0, 1.0, true)) - K) < 1e-14);
  CHECK(max_abs(DenseMatrix(diffusion_stiffness(mesh, geom, Vector::Ones(mesh.num_vertices()), 2.0, 1.0, true)) -
                2.0 * K) < 1e-13);
  CHECK(max_abs(DenseMatrix(diffusion_stiffness(mesh, geom, -Vector::Ones(mesh.num_vertices()), 2.0, 1.0, true)) -
                K) < 1e-13);
}

namespace {

oracle::Problem small_problem(double theta, double rho, BoundaryCase bc, PotentialKind pot, ShapeKind shape) {
  PhysicalParams p;
  p.theta = theta;
  p.rho = rho;
  p.u_D = -0.5;
  p.bc = bc;
  p.tau = 1e-3;
  p.eps = 1.0 / (4.0 * std::numbers::pi);
  return oracle::make_problem(p, oracle::make_model("ani1:0.3", 2, pot, shape, p.u_D), 8,
                              [&](const Point& x) { return oracle::seed_profile(x, 0.25, p.eps); }, 0.0);
}

}  // namespace

TEST_CASE("step system blocks") {
  SUBCASE("Dirichlet rows are identity rows with boundary data") {
    const auto pr = small_problem(1.0, 0.01, BoundaryCase::Dirichlet, PotentialKind::Obstacle, ShapeKind::Constant);
    const auto sys = assemble_step_system(pr.ctx(), pr.phi_prev);
    const DenseMatrix A = DenseMatrix(sys.A_spp);
    for (Index i = 0; i < pr.mesh->num_vertices(); ++i) {
      if (!pr.mesh->is_dirichlet(i)) continue;
      CHECK(A.row(i).cwiseAbs().sum() == 1.0);
      CHECK(A(i, i) == 1.0);
      CHECK(sys.rho_row(i) == 0.0);
      CHECK(sys.f(i) == pr.params.u_D);
    }
  }
  SUBCASE("C is symmetric positive definite for rho > 0") {
    const auto pr = small_problem(0.0, 0.01, BoundaryCase::Neumann, PotentialKind::Obstacle, ShapeKind::Constant);
    const auto sys = assemble_step_system(pr.ctx(), pr.phi_prev);
    const DenseMatrix C = DenseMatrix(sys.C);
    CHECK(max_abs(C - C.transpose()) < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<DenseMatrix>(C).eigenvalues().minCoeff() > 0.0);
  }
  SUBCASE("rho = 0 drops the mobility term") {
    const auto pr = small_problem(0.0, 0.0, BoundaryCase::Neumann, PotentialKind::Obstacle, ShapeKind::Constant);
    const auto sys = assemble_step_system(pr.ctx(), pr.phi_prev);
    CHECK(max_abs(DenseMatrix(sys.C) - DenseMatrix((pr.params.eps / sys.vi_scale) * sys.B_stiff)) < 1e-14);
  }
  SUBCASE("constant shape gives half the lumped mass") {
    const auto pr = small_problem(0.0, 0.01, BoundaryCase::Neumann, PotentialKind::Obstacle, ShapeKind::Constant);
    const auto sys = assemble_step_system(pr.ctx(), pr.phi_prev);
    CHECK((sys.M_rho - 0.5 * sys.M).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("scaling of the saddle point rows") {
    const auto pr = small_problem(1.0, 0.01, BoundaryCase::Neumann, PotentialKind::Quartic, ShapeKind::QuarticShape);
    const auto sys = assemble_step_system(pr.ctx(), pr.phi_prev);
    CHECK(sys.vi_scale == doctest::Approx(std::pow(2.0, 1.5) / 3.0));
    CHECK((sys.g * sys.vi_scale - sys.g_tilde).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((sys.f * pr.params.lambda - sys.f_tilde).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("update_iterate matches a fresh assembly") {
    const auto pr = small_problem(1.0, 0.01, BoundaryCase::Dirichlet, PotentialKind::Quartic, ShapeKind::QuarticShape);
    const Vector cur = pr.phi_prev + 0.1 * random_vector(pr.mesh->num_vertices(), 5);
    auto sys = assemble_step_system(pr.ctx(), pr.phi_prev);
    update_iterate(pr.ctx(), cur, sys);
    const auto fresh = assemble_step_system(pr.ctx(), cur);
    CHECK(max_abs(DenseMatrix(sys.C) - DenseMatrix(fresh.C)) == 0.0);
    CHECK((sys.M_rho - fresh.M_rho).norm() == 0.0);
    CHECK((sys.f - fresh.f).norm() == 0.0);
  }
  SUBCASE("size mismatch") {
    const auto pr = small_problem(1.0, 0.01, BoundaryCase::Dirichlet, PotentialKind::Obstacle, ShapeKind::Constant);
    CHECK_THROWS_AS(assemble_step_system(pr.ctx(), Vector::Zero(4)), Error);
  }
}
