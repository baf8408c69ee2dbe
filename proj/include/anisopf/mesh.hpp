#pragma once

#include "anisopf/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

namespace anisopf {

using Point = std::array<double, 3>;  // unused trailing coordinate is 0 in 2d

enum class BoundaryCase { Dirichlet, Neumann, Mixed };
enum class NodeTag : std::uint8_t { Interior, Dirichlet, Neumann };

BoundaryCase parse_boundary_case(std::string_view name);
std::string_view to_string(BoundaryCase bc);

/// A simplex with vertex order and bisection tag in 1..d. The refinement
/// edge is (v[0], v[tag]).
struct Element {
  std::array<Index, 4> v{};
  std::uint8_t tag = 0;
  std::uint8_t generation = 0;
};

/// Conforming triangulation of the box (-H, H)^d.
class SimplicialMesh {
 public:
  SimplicialMesh(int dim, double H, BoundaryCase bc, std::vector<Point> vertices,
                 std::vector<Element> elements);

  int dim() const noexcept { return dim_; }
  double half_width() const noexcept { return H_; }
  BoundaryCase boundary_case() const noexcept { return bc_; }

  Index num_vertices() const noexcept { return static_cast<Index>(vertices_.size()); }
  Index num_elements() const noexcept { return static_cast<Index>(elements_.size()); }
  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<Element>& elements() const noexcept { return elements_; }
  const Point& vertex(Index i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const Element& element(Index e) const { return elements_[static_cast<std::size_t>(e)]; }

  NodeTag tag(Index i) const { return tags_[static_cast<std::size_t>(i)]; }
  bool is_dirichlet(Index i) const { return tag(i) == NodeTag::Dirichlet; }
  Index num_dirichlet() const noexcept;

  double volume(Index e) const;
  double diameter(Index e) const;
  double total_volume() const;

 private:
  int dim_;
  double H_;
  BoundaryCase bc_;
  std::vector<Point> vertices_;
  std::vector<Element> elements_;
  std::vector<NodeTag> tags_;
};

using MeshPtr = std::shared_ptr<const SimplicialMesh>;

/// Nodal values of a continuous piecewise linear function on `mesh`.
struct NodalField {
  MeshPtr mesh;
  Vector values;
};

/// Uniform grid of (2H/N)-cubes, each split into d! Kuhn simplices.
SimplicialMesh build_uniform_mesh(double H, int N, int dim, BoundaryCase bc);

/// Face-matching audit: every interior face is shared by exactly two
/// simplices and every unmatched face lies on the boundary of the box.
bool is_conforming(const SimplicialMesh& mesh);

/// Interpolation weights of each target vertex in a source simplex.
struct TransferMap {
  MeshPtr source;
  MeshPtr target;
  std::vector<std::array<Index, 4>> nodes;
  std::vector<std::array<double, 4>> weights;
};

/// Locates points in a fixed mesh with a uniform bucket grid.
class PointLocator {
 public:
  explicit PointLocator(const SimplicialMesh& mesh);

  struct Location {
    Index element;
    std::array<double, 4> bary;
  };

  /// Containing (or nearest, for points on the boundary up to round-off)
  /// element with barycentric coordinates clamped to be a convex combination.
  Location locate(const Point& x) const;

  double interpolate(const Vector& values, const Point& x) const;

 private:
  std::array<double, 4> barycentric(Index e, const Point& x) const;
  std::size_t cell_of(const Point& x) const;

  const SimplicialMesh& mesh_;
  int cells_per_dim_;
  std::vector<std::vector<Index>> buckets_;
};

struct AdaptOptions {
  int safety_layers = 1;
  double threshold = 1.0 - 1e-7;
};

/// Two-level interface adaptation: starting from the uniform N_c mesh,
/// bisect every simplex on which |phi| < threshold somewhere (plus safety
/// layers of neighbours) until its diameter is at most sqrt(d) 2H/N_f.
/// Returns the new mesh and the map transferring fields from phi's mesh.
std::pair<MeshPtr, TransferMap> adapt_to_interface(const NodalField& phi, int N_f, int N_c,
                                                   const AdaptOptions& options = {});

/// Same strategy driven by an analytic field (used for initial data).
MeshPtr adapt_to_function(double H, int dim, BoundaryCase bc,
                          const std::function<double(const Point&)>& phi, int N_f, int N_c,
                          const AdaptOptions& options = {});

/// Piecewise linear interpolation of `field` onto the target mesh of `map`.
NodalField transfer_field(const NodalField& field, const TransferMap& map);

}  // namespace anisopf
