#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "anisopf/mesh.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace anisopf;

namespace {

MeshPtr share(SimplicialMesh m) { return std::make_shared<const SimplicialMesh>(std::move(m)); }

NodalField sample(const MeshPtr& mesh, const std::function<double(const Point&)>& f) {
  NodalField out{mesh, Vector(mesh->num_vertices())};
  for (Index i = 0; i < mesh->num_vertices(); ++i) out.values(i) = f(mesh->vertex(i));
  return out;
}

double circle_phase(const Point& x, double R0, double eps) {
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) - R0;
  if (r <= -eps * std::numbers::pi / 2) return -1.0;
  if (r >= eps * std::numbers::pi / 2) return 1.0;
  return std::sin(r / eps);
}

}  // namespace

TEST_CASE("uniform mesh counts") {
  const auto m = build_uniform_mesh(0.5, 2, 2, BoundaryCase::Dirichlet);
  CHECK(m.num_vertices() == 9);
  CHECK(m.num_elements() == 8);
  CHECK(m.total_volume() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(is_conforming(m));

  const auto big = build_uniform_mesh(8.0, 128, 2, BoundaryCase::Neumann);
  CHECK(big.vertex(1)[0] - big.vertex(0)[0] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(big.num_vertices() == 129 * 129);

  const auto cube = build_uniform_mesh(0.75, 2, 3, BoundaryCase::Mixed);
  CHECK(cube.num_elements() == 48);
  CHECK(cube.num_vertices() == 27);
  CHECK(cube.total_volume() == doctest::Approx(1.5 * 1.5 * 1.5).epsilon(1e-14));
  CHECK(is_conforming(cube));
  for (Index e = 0; e < cube.num_elements(); ++e) {
    CHECK(cube.volume(e) == doctest::Approx(1.5 * 1.5 * 1.5 / 48).epsilon(1e-13));
  }
}

TEST_CASE("uniform mesh errors") {
  for (int N : {0, 1, 3, -2}) {
    try {
      build_uniform_mesh(1.0, N, 2, BoundaryCase::Dirichlet);
      FAIL("expected InvalidN");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidN);
    }
  }
  CHECK_THROWS_AS(build_uniform_mesh(1.0, 4, 4, BoundaryCase::Dirichlet), Error);
  CHECK_THROWS_AS(parse_boundary_case("robin"), Error);
  CHECK(parse_boundary_case("mixed") == BoundaryCase::Mixed);
}

TEST_CASE("boundary tags follow the boundary case") {
  for (int d : {2, 3}) {
    const int N = 4;
    const double H = 2.0;
    for (auto bc : {BoundaryCase::Dirichlet, BoundaryCase::Neumann, BoundaryCase::Mixed}) {
      const auto m = build_uniform_mesh(H, N, d, bc);
      Index boundary = 0;
      for (Index i = 0; i < m.num_vertices(); ++i) {
        const auto& x = m.vertex(i);
        bool on = false;
        for (int k = 0; k < d; ++k) on = on || std::abs(std::abs(x[k]) - H) < 1e-12;
        boundary += on ? 1 : 0;
        if (!on) {
          CHECK(m.tag(i) == NodeTag::Interior);
          continue;
        }
        const bool top = std::abs(x[d - 1] - H) < 1e-12;
        switch (bc) {
          case BoundaryCase::Dirichlet: CHECK(m.tag(i) == NodeTag::Dirichlet); break;
          case BoundaryCase::Neumann: CHECK(m.tag(i) == NodeTag::Neumann); break;
          case BoundaryCase::Mixed:
            CHECK(m.tag(i) == (top ? NodeTag::Dirichlet : NodeTag::Neumann));
            break;
        }
      }
      const Index total = static_cast<Index>(std::pow(N + 1, d));
      CHECK(boundary == total - static_cast<Index>(std::pow(N - 1, d)));
    }
  }
}

TEST_CASE("adaptation: trivial cases") {
  const auto fine = share(build_uniform_mesh(0.5, 32, 2, BoundaryCase::Dirichlet));
  const auto one = sample(fine, [](const Point&) { return 1.0; });
  auto [m1, map1] = adapt_to_interface(one, 32, 8);
  const auto coarse = build_uniform_mesh(0.5, 8, 2, BoundaryCase::Dirichlet);
  CHECK(m1->num_elements() == coarse.num_elements());
  CHECK(m1->num_vertices() == coarse.num_vertices());
  for (Index i = 0; i < coarse.num_vertices(); ++i) CHECK(m1->vertex(i) == coarse.vertex(i));

  const auto half = sample(fine, [](const Point&) { return 0.5; });
  auto [m2, map2] = adapt_to_interface(half, 32, 8);
  const double bound = std::sqrt(2.0) * 1.0 / 32 * (1 + 1e-12);
  for (Index e = 0; e < m2->num_elements(); ++e) CHECK(m2->diameter(e) <= bound);
  CHECK(m2->num_elements() == 2 * 32 * 32);
  CHECK(is_conforming(*m2));
  CHECK(m2->total_volume() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("adaptation: circular interface in 2d") {
  const double eps = 1.0 / (8 * std::numbers::pi);
  const double R0 = 0.2;
  auto phase = [&](const Point& x) { return circle_phase(x, R0, eps); };
  const auto start = share(build_uniform_mesh(0.5, 64, 2, BoundaryCase::Dirichlet));
  const auto phi = sample(start, phase);
  auto [mesh, map] = adapt_to_interface(phi, 64, 16);
  CHECK(is_conforming(*mesh));
  CHECK(std::abs(mesh->total_volume() - 1.0) <= 1e-12);
  CHECK(mesh->num_elements() > 2 * 16 * 16);
  CHECK(mesh->num_elements() < 2 * 64 * 64);
  CHECK(mesh->num_dirichlet() == 4 * 16);

  // every element meeting the discrete interface carries the fine size
  const auto moved = transfer_field(phi, map);
  const double bound = std::sqrt(2.0) / 64 * (1 + 1e-9);
  for (Index e = 0; e < mesh->num_elements(); ++e) {
    const auto& el = mesh->element(e);
    bool interface = false;
    for (int i = 0; i < 3; ++i) interface = interface || std::abs(moved.values(el.v[i])) < 1 - 1e-7;
    if (interface) CHECK(mesh->diameter(e) <= bound);
  }

  // analytic driver gives a conforming mesh of similar size
  const auto direct = adapt_to_function(0.5, 2, BoundaryCase::Dirichlet, phase, 64, 16);
  CHECK(is_conforming(*direct));
  CHECK(std::abs(direct->total_volume() - 1.0) <= 1e-12);
  CHECK(direct->num_elements() > 2 * 16 * 16);
  CHECK(direct->num_elements() < 2 * 64 * 64);
}

TEST_CASE("adaptation: spherical interface in 3d") {
  const double eps = 1.0 / (2 * std::numbers::pi);
  auto phase = [&](const Point& x) { return circle_phase(x, 0.5, eps); };
  const auto mesh = adapt_to_function(1.0, 3, BoundaryCase::Neumann, phase, 8, 2);
  CHECK(is_conforming(*mesh));
  CHECK(std::abs(mesh->total_volume() - 8.0) <= 8e-12);
  CHECK(mesh->num_elements() > 48);
  CHECK(mesh->num_elements() <= 6 * 8 * 8 * 8);
  const double bound = std::sqrt(3.0) * 2.0 / 8 * (1 + 1e-9);
  for (Index e = 0; e < mesh->num_elements(); ++e) {
    const auto& el = mesh->element(e);
    bool interface = false;
    for (int i = 0; i < 4; ++i) interface = interface || std::abs(phase(mesh->vertex(el.v[i]))) < 1 - 1e-7;
    if (interface) CHECK(mesh->diameter(e) <= bound);
  }
}

TEST_CASE("adaptation errors") {
  const auto m = share(build_uniform_mesh(0.5, 8, 2, BoundaryCase::Dirichlet));
  const auto f = sample(m, [](const Point&) { return 0.0; });
  CHECK_THROWS_AS(adapt_to_interface(f, 8, 16), Error);
  CHECK_THROWS_AS(adapt_to_interface(f, 24, 8), Error);
  NodalField broken{m, Vector::Zero(3)};
  try {
    adapt_to_interface(broken, 16, 8);
    FAIL("expected MeshMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MeshMismatch);
  }
}

TEST_CASE("transfer") {
  const auto src = share(build_uniform_mesh(0.5, 16, 2, BoundaryCase::Mixed));
  auto phase = [](const Point& x) { return circle_phase(x, 0.2, 0.05); };
  const auto phi = sample(src, phase);
  auto [mesh, map] = adapt_to_interface(phi, 64, 8);

  const auto constant = transfer_field(sample(src, [](const Point&) { return 0.3; }), map);
  for (Index i = 0; i < mesh->num_vertices(); ++i) CHECK(constant.values(i) == doctest::Approx(0.3).epsilon(1e-15));

  auto linear = [](const Point& x) { return 0.7 * x[0] - 1.3 * x[1] + 0.25; };
  const auto moved = transfer_field(sample(src, linear), map);
  CHECK(moved.mesh == mesh);
  for (Index i = 0; i < mesh->num_vertices(); ++i) CHECK(std::abs(moved.values(i) - linear(mesh->vertex(i))) <= 1e-13);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  NodalField noise{src, Vector(src->num_vertices())};
  for (Index i = 0; i < src->num_vertices(); ++i) noise.values(i) = u(rng);
  const auto noisy = transfer_field(noise, map);
  CHECK(noisy.values.maxCoeff() <= 1.0);
  CHECK(noisy.values.minCoeff() >= -1.0);

  const auto other = share(build_uniform_mesh(0.5, 16, 2, BoundaryCase::Mixed));
  try {
    transfer_field(sample(other, linear), map);
    FAIL("expected MeshMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MeshMismatch);
  }
}

TEST_CASE("linear interpolation in 3d is exact") {
  const auto src = share(build_uniform_mesh(1.0, 4, 3, BoundaryCase::Dirichlet));
  auto linear = [](const Point& x) { return 0.5 * x[0] - 2.0 * x[1] + 0.125 * x[2] - 1.0; };
  const auto field = sample(src, linear);
  auto [mesh, map] = adapt_to_interface(sample(src, [](const Point& x) { return circle_phase(x, 0.4, 0.1); }), 16, 4);
  const auto moved = transfer_field(field, map);
  for (Index i = 0; i < mesh->num_vertices(); ++i) CHECK(std::abs(moved.values(i) - linear(mesh->vertex(i))) <= 1e-13);
  CHECK(is_conforming(*mesh));
}

TEST_CASE("point locator") {
  const auto m = build_uniform_mesh(1.0, 6, 2, BoundaryCase::Dirichlet);
  const PointLocator loc(m);
  for (const Point& x : {Point{0.1, 0.2, 0}, Point{-1, -1, 0}, Point{1, 1, 0}, Point{1.0, -0.3, 0}}) {
    const auto l = loc.locate(x);
    double s = 0.0;
    Point back{0, 0, 0};
    for (int i = 0; i < 3; ++i) {
      CHECK(l.bary[i] >= 0.0);
      s += l.bary[i];
      for (int k = 0; k < 2; ++k) back[k] += l.bary[i] * m.vertex(m.element(l.element).v[i])[k];
    }
    CHECK(s == doctest::Approx(1.0));
    CHECK(back[0] == doctest::Approx(x[0]));
    CHECK(back[1] == doctest::Approx(x[1]));
  }
}

TEST_CASE("conformity audit detects hanging nodes") {
  // two triangles where one side is split on only one of them
  std::vector<Point> v{{-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}, {0, 0, 0}};
  std::vector<Element> bad{{{0, 1, 2, -1}, 2, 0}, {{0, 4, 3, -1}, 2, 0}, {{4, 2, 3, -1}, 2, 0}};
  CHECK_FALSE(is_conforming(SimplicialMesh(2, 1.0, BoundaryCase::Dirichlet, v, bad)));
  std::vector<Element> good{{{0, 1, 4, -1}, 2, 0}, {{1, 2, 4, -1}, 2, 0}, {{0, 4, 3, -1}, 2, 0}, {{4, 2, 3, -1}, 2, 0}};
  CHECK(is_conforming(SimplicialMesh(2, 1.0, BoundaryCase::Dirichlet, v, good)));
}
