#include "anisopf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>

namespace anisopf {

namespace {

constexpr double kBoundaryTol = 1e-12;

bool on_face(double x, double H) { return std::abs(std::abs(x) - H) <= kBoundaryTol * H; }

double distance(const Point& a, const Point& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Point midpoint_of(const Point& a, const Point& b) {
  return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
}

std::uint64_t edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

void check_dim(int dim) {
  if (dim != 2 && dim != 3) {
    throw Error(ErrorKind::InconsistentDimensions, "dimension must be 2 or 3, got " + std::to_string(dim));
  }
}

int level_count(int N_f, int N_c) {
  if (N_c < 2 || N_f < N_c || N_f % N_c != 0) {
    throw Error(ErrorKind::InvalidN, "need N_f >= N_c >= 2 with N_f a multiple of N_c");
  }
  int ratio = N_f / N_c;
  int levels = 0;
  while (ratio > 1) {
    if (ratio % 2 != 0) throw Error(ErrorKind::InvalidN, "N_f / N_c must be a power of two");
    ratio /= 2;
    ++levels;
  }
  return levels;
}

// Mutable triangulation used while bisecting.
class Refiner {
 public:
  Refiner(int dim, std::vector<Point> vertices, std::vector<Element> elements)
      : dim_(dim), vertices_(std::move(vertices)), elements_(std::move(elements)) {}

  std::vector<Point>& vertices() { return vertices_; }
  std::vector<Element>& elements() { return elements_; }

  double diameter(const Element& e) const {
    double h = 0.0;
    for (int i = 0; i <= dim_; ++i) {
      for (int j = i + 1; j <= dim_; ++j) h = std::max(h, distance(vertex(e.v[i]), vertex(e.v[j])));
    }
    return h;
  }

  // Bisect every marked element, then close the mesh by bisecting every
  // element that still owns an already split edge.
  void refine(std::vector<char> marked) {
    const int max_passes = 64 * dim_;
    for (int pass = 0; pass < max_passes; ++pass) {
      bool any = false;
      std::vector<Element> next;
      next.reserve(elements_.size() + 2 * static_cast<std::size_t>(std::count(marked.begin(), marked.end(), 1)));
      for (std::size_t e = 0; e < elements_.size(); ++e) {
        if (marked[e]) {
          bisect(elements_[e], next);
          any = true;
        } else {
          next.push_back(elements_[e]);
        }
      }
      if (!any) return;
      elements_ = std::move(next);
      marked.assign(elements_.size(), 0);
      for (std::size_t e = 0; e < elements_.size(); ++e) marked[e] = has_split_edge(elements_[e]) ? 1 : 0;
    }
    throw Error(ErrorKind::RefinementDepthExceeded, "conforming closure did not terminate");
  }

 private:
  const Point& vertex(Index i) const { return vertices_[static_cast<std::size_t>(i)]; }

  Index midpoint(Index a, Index b) {
    const auto key = edge_key(a, b);
    auto it = midpoints_.find(key);
    if (it != midpoints_.end()) return it->second;
    const auto id = static_cast<Index>(vertices_.size());
    vertices_.push_back(midpoint_of(vertex(a), vertex(b)));
    midpoints_.emplace(key, id);
    return id;
  }

  bool has_split_edge(const Element& e) const {
    for (int i = 0; i <= dim_; ++i) {
      for (int j = i + 1; j <= dim_; ++j) {
        if (midpoints_.count(edge_key(e.v[i], e.v[j])) != 0) return true;
      }
    }
    return false;
  }

  void bisect(const Element& e, std::vector<Element>& out) {
    const int k = e.tag;
    const Index z = midpoint(e.v[0], e.v[k]);
    Element first = e;
    Element second = e;
    first.v[k] = z;
    for (int i = 0; i < k; ++i) second.v[i] = e.v[i + 1];
    second.v[k] = z;
    const auto tag = static_cast<std::uint8_t>(k > 1 ? k - 1 : dim_);
    first.tag = second.tag = tag;
    first.generation = second.generation = static_cast<std::uint8_t>(e.generation + 1);
    out.push_back(first);
    out.push_back(second);
  }

  int dim_;
  std::vector<Point> vertices_;
  std::vector<Element> elements_;
  std::unordered_map<std::uint64_t, Index> midpoints_;
};

// Shared driver of the two adapt entry points. `value` is evaluated at
// every new vertex exactly once and at element centroids.
MeshPtr adapt_impl(double H, int dim, BoundaryCase bc, int N_f, int N_c,
                   const std::function<double(const Point&)>& value, const AdaptOptions& options) {
  const int levels = level_count(N_f, N_c);
  const SimplicialMesh coarse = build_uniform_mesh(H, N_c, dim, bc);
  Refiner ref(dim, coarse.vertices(), coarse.elements());
  if (levels == 0) return std::make_shared<const SimplicialMesh>(coarse);

  const double target = std::sqrt(static_cast<double>(dim)) * 2.0 * H / N_f * (1.0 + 1e-9);
  const int cap = 2 * levels * dim;
  std::vector<double> vals;

  for (int level = 0;; ++level) {
    auto& verts = ref.vertices();
    auto& elems = ref.elements();
    while (vals.size() < verts.size()) vals.push_back(value(verts[vals.size()]));

    std::vector<char> interface(elems.size(), 0);
    for (std::size_t e = 0; e < elems.size(); ++e) {
      const auto& el = elems[e];
      Point c{0.0, 0.0, 0.0};
      bool hit = false;
      for (int i = 0; i <= dim; ++i) {
        const auto vi = static_cast<std::size_t>(el.v[i]);
        if (std::abs(vals[vi]) < options.threshold) hit = true;
        for (int k = 0; k < 3; ++k) c[k] += verts[vi][k] / (dim + 1);
      }
      if (!hit) hit = std::abs(value(c)) < options.threshold;
      interface[e] = hit ? 1 : 0;
    }

    std::vector<char> near(verts.size(), 0);
    for (std::size_t e = 0; e < elems.size(); ++e) {
      if (!interface[e]) continue;
      for (int i = 0; i <= dim; ++i) near[static_cast<std::size_t>(elems[e].v[i])] = 1;
    }
    for (int layer = 1; layer < options.safety_layers; ++layer) {
      std::vector<char> grown = near;
      for (const auto& el : elems) {
        bool touch = false;
        for (int i = 0; i <= dim; ++i) touch = touch || near[static_cast<std::size_t>(el.v[i])];
        if (!touch) continue;
        for (int i = 0; i <= dim; ++i) grown[static_cast<std::size_t>(el.v[i])] = 1;
      }
      near = std::move(grown);
    }

    std::vector<char> marked(elems.size(), 0);
    bool any = false;
    for (std::size_t e = 0; e < elems.size(); ++e) {
      bool flagged = interface[e] != 0;
      if (options.safety_layers > 0) {
        for (int i = 0; i <= dim; ++i) flagged = flagged || near[static_cast<std::size_t>(elems[e].v[i])];
      }
      if (flagged && ref.diameter(elems[e]) > target) {
        marked[e] = 1;
        any = true;
      }
    }
    if (!any) break;
    if (level >= cap) {
      throw Error(ErrorKind::RefinementDepthExceeded,
                  "interface still unresolved after " + std::to_string(cap) + " bisection levels");
    }
    ref.refine(std::move(marked));
  }
  return std::make_shared<const SimplicialMesh>(dim, H, bc, std::move(ref.vertices()),
                                                std::move(ref.elements()));
}

}  // namespace

BoundaryCase parse_boundary_case(std::string_view name) {
  if (name == "dirichlet") return BoundaryCase::Dirichlet;
  if (name == "neumann") return BoundaryCase::Neumann;
  if (name == "mixed") return BoundaryCase::Mixed;
  throw Error(ErrorKind::ValidationError, "unknown boundary case '" + std::string(name) + "'");
}

std::string_view to_string(BoundaryCase bc) {
  switch (bc) {
    case BoundaryCase::Dirichlet: return "dirichlet";
    case BoundaryCase::Neumann: return "neumann";
    case BoundaryCase::Mixed: return "mixed";
  }
  return "unknown";
}

SimplicialMesh::SimplicialMesh(int dim, double H, BoundaryCase bc, std::vector<Point> vertices,
                               std::vector<Element> elements)
    : dim_(dim), H_(H), bc_(bc), vertices_(std::move(vertices)), elements_(std::move(elements)) {
  check_dim(dim);
  const auto nv = static_cast<Index>(vertices_.size());
  for (const auto& el : elements_) {
    for (int i = 0; i <= dim_; ++i) {
      if (el.v[i] < 0 || el.v[i] >= nv) {
        throw Error(ErrorKind::InconsistentDimensions, "element refers to a missing vertex");
      }
    }
  }
  tags_.resize(vertices_.size(), NodeTag::Interior);
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const auto& x = vertices_[i];
    bool boundary = false;
    for (int k = 0; k < dim_; ++k) boundary = boundary || on_face(x[k], H_);
    if (!boundary) continue;
    switch (bc_) {
      case BoundaryCase::Dirichlet: tags_[i] = NodeTag::Dirichlet; break;
      case BoundaryCase::Neumann: tags_[i] = NodeTag::Neumann; break;
      case BoundaryCase::Mixed:
        tags_[i] = std::abs(x[dim_ - 1] - H_) <= kBoundaryTol * H_ ? NodeTag::Dirichlet : NodeTag::Neumann;
        break;
    }
  }
}

Index SimplicialMesh::num_dirichlet() const noexcept {
  return static_cast<Index>(std::count(tags_.begin(), tags_.end(), NodeTag::Dirichlet));
}

double SimplicialMesh::volume(Index e) const {
  const auto& el = element(e);
  const auto& x0 = vertex(el.v[0]);
  Mat E(dim_, dim_);
  for (int j = 0; j < dim_; ++j) {
    const auto& xj = vertex(el.v[j + 1]);
    for (int k = 0; k < dim_; ++k) E(k, j) = xj[k] - x0[k];
  }
  return std::abs(E.determinant()) / (dim_ == 2 ? 2.0 : 6.0);
}

double SimplicialMesh::diameter(Index e) const {
  const auto& el = element(e);
  double h = 0.0;
  for (int i = 0; i <= dim_; ++i) {
    for (int j = i + 1; j <= dim_; ++j) h = std::max(h, distance(vertex(el.v[i]), vertex(el.v[j])));
  }
  return h;
}

double SimplicialMesh::total_volume() const {
  double s = 0.0;
  for (Index e = 0; e < num_elements(); ++e) s += volume(e);
  return s;
}

SimplicialMesh build_uniform_mesh(double H, int N, int dim, BoundaryCase bc) {
  check_dim(dim);
  if (N < 2 || N % 2 != 0) throw Error(ErrorKind::InvalidN, "N must be even and >= 2, got " + std::to_string(N));
  if (!(H > 0.0)) throw Error(ErrorKind::ValidationError, "H must be positive");

  const int n1 = N + 1;
  auto coord = [&](int i) { return -H + 2.0 * H * i / N; };
  auto id = [&](int i, int j, int k) { return static_cast<Index>(i + n1 * (j + n1 * k)); };

  std::vector<Point> vertices;
  std::vector<Element> elements;
  if (dim == 2) {
    vertices.reserve(static_cast<std::size_t>(n1) * n1);
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n1; ++i) vertices.push_back({coord(i), coord(j), 0.0});
    }
    elements.reserve(2 * static_cast<std::size_t>(N) * N);
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        elements.push_back({{id(i, j, 0), id(i + 1, j, 0), id(i + 1, j + 1, 0), -1}, 2, 0});
        elements.push_back({{id(i, j, 0), id(i, j + 1, 0), id(i + 1, j + 1, 0), -1}, 2, 0});
      }
    }
  } else {
    vertices.reserve(static_cast<std::size_t>(n1) * n1 * n1);
    for (int k = 0; k < n1; ++k) {
      for (int j = 0; j < n1; ++j) {
        for (int i = 0; i < n1; ++i) vertices.push_back({coord(i), coord(j), coord(k)});
      }
    }
    static constexpr std::array<std::array<int, 3>, 6> perms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    elements.reserve(6 * static_cast<std::size_t>(N) * N * N);
    for (int k = 0; k < N; ++k) {
      for (int j = 0; j < N; ++j) {
        for (int i = 0; i < N; ++i) {
          for (const auto& p : perms) {
            std::array<int, 3> c{i, j, k};
            Element el;
            el.v[0] = id(c[0], c[1], c[2]);
            for (int s = 0; s < 3; ++s) {
              ++c[static_cast<std::size_t>(p[static_cast<std::size_t>(s)])];
              el.v[static_cast<std::size_t>(s) + 1] = id(c[0], c[1], c[2]);
            }
            el.tag = 3;
            elements.push_back(el);
          }
        }
      }
    }
  }
  return SimplicialMesh(dim, H, bc, std::move(vertices), std::move(elements));
}

bool is_conforming(const SimplicialMesh& mesh) {
  const int d = mesh.dim();
  std::map<std::array<Index, 3>, int> faces;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    if (!(mesh.volume(e) > 0.0)) return false;
    const auto& el = mesh.element(e);
    for (int skip = 0; skip <= d; ++skip) {
      std::array<Index, 3> f{-1, -1, -1};
      int n = 0;
      for (int i = 0; i <= d; ++i) {
        if (i != skip) f[static_cast<std::size_t>(n++)] = el.v[i];
      }
      std::sort(f.begin(), f.begin() + d);
      ++faces[f];
    }
  }
  const double H = mesh.half_width();
  for (const auto& [f, count] : faces) {
    if (count == 2) continue;
    if (count != 1) return false;
    bool boundary = false;
    for (int k = 0; k < d && !boundary; ++k) {
      const double x0 = mesh.vertex(f[0])[k];
      if (!on_face(x0, H)) continue;
      bool all = true;
      for (int i = 1; i < d; ++i) all = all && std::abs(mesh.vertex(f[i])[k] - x0) <= kBoundaryTol * H;
      boundary = all;
    }
    if (!boundary) return false;
  }
  return true;
}

PointLocator::PointLocator(const SimplicialMesh& mesh) : mesh_(mesh) {
  const int d = mesh.dim();
  const double ne = std::max<double>(1.0, mesh.num_elements());
  cells_per_dim_ = std::clamp(static_cast<int>(std::lround(std::pow(ne, 1.0 / d) / 2.0)), 1, 256);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(cells_per_dim_);
  buckets_.resize(total);

  const double H = mesh.half_width();
  const double cell = 2.0 * H / cells_per_dim_;
  const double pad = 1e-10 * H;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.element(e);
    std::array<int, 3> lo{0, 0, 0};
    std::array<int, 3> hi{0, 0, 0};
    for (int k = 0; k < d; ++k) {
      double mn = std::numeric_limits<double>::infinity();
      double mx = -mn;
      for (int i = 0; i <= d; ++i) {
        mn = std::min(mn, mesh.vertex(el.v[i])[k]);
        mx = std::max(mx, mesh.vertex(el.v[i])[k]);
      }
      lo[k] = std::clamp(static_cast<int>(std::floor((mn - pad + H) / cell)), 0, cells_per_dim_ - 1);
      hi[k] = std::clamp(static_cast<int>(std::floor((mx + pad + H) / cell)), 0, cells_per_dim_ - 1);
    }
    for (int k2 = lo[2]; k2 <= (d == 3 ? hi[2] : 0); ++k2) {
      for (int k1 = lo[1]; k1 <= hi[1]; ++k1) {
        for (int k0 = lo[0]; k0 <= hi[0]; ++k0) {
          const auto c = static_cast<std::size_t>(k0 + cells_per_dim_ * (k1 + cells_per_dim_ * k2));
          buckets_[c].push_back(e);
        }
      }
    }
  }
}

std::size_t PointLocator::cell_of(const Point& x) const {
  const double H = mesh_.half_width();
  const double cell = 2.0 * H / cells_per_dim_;
  std::size_t c = 0;
  std::size_t stride = 1;
  for (int k = 0; k < mesh_.dim(); ++k) {
    const int i = std::clamp(static_cast<int>(std::floor((x[k] + H) / cell)), 0, cells_per_dim_ - 1);
    c += stride * static_cast<std::size_t>(i);
    stride *= static_cast<std::size_t>(cells_per_dim_);
  }
  return c;
}

std::array<double, 4> PointLocator::barycentric(Index e, const Point& x) const {
  const int d = mesh_.dim();
  const auto& el = mesh_.element(e);
  const auto& x0 = mesh_.vertex(el.v[0]);
  Mat E(d, d);
  Vec rhs(d);
  for (int j = 0; j < d; ++j) {
    const auto& xj = mesh_.vertex(el.v[j + 1]);
    for (int k = 0; k < d; ++k) E(k, j) = xj[k] - x0[k];
  }
  for (int k = 0; k < d; ++k) rhs(k) = x[k] - x0[k];
  const Vec lam = E.partialPivLu().solve(rhs);
  std::array<double, 4> b{0.0, 0.0, 0.0, 0.0};
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    b[static_cast<std::size_t>(j) + 1] = lam(j);
    s += lam(j);
  }
  b[0] = 1.0 - s;
  return b;
}

PointLocator::Location PointLocator::locate(const Point& x) const {
  const int d = mesh_.dim();
  Location best{-1, {}};
  double best_min = -std::numeric_limits<double>::infinity();
  auto consider = [&](Index e) {
    const auto b = barycentric(e, x);
    double mn = b[0];
    for (int i = 1; i <= d; ++i) mn = std::min(mn, b[static_cast<std::size_t>(i)]);
    if (mn > best_min) {
      best_min = mn;
      best = {e, b};
    }
  };
  for (Index e : buckets_[cell_of(x)]) {
    consider(e);
    if (best_min >= 0.0) break;
  }
  if (best_min < -1e-10) {
    for (Index e = 0; e < mesh_.num_elements(); ++e) consider(e);
  }
  double s = 0.0;
  for (int i = 0; i <= d; ++i) {
    auto& w = best.bary[static_cast<std::size_t>(i)];
    w = std::max(w, 0.0);
    s += w;
  }
  for (int i = 0; i <= d; ++i) best.bary[static_cast<std::size_t>(i)] /= s;
  return best;
}

double PointLocator::interpolate(const Vector& values, const Point& x) const {
  const auto loc = locate(x);
  const auto& el = mesh_.element(loc.element);
  double v = 0.0;
  for (int i = 0; i <= mesh_.dim(); ++i) v += loc.bary[static_cast<std::size_t>(i)] * values(el.v[i]);
  return v;
}

std::pair<MeshPtr, TransferMap> adapt_to_interface(const NodalField& phi, int N_f, int N_c,
                                                   const AdaptOptions& options) {
  if (!phi.mesh || phi.values.size() != phi.mesh->num_vertices()) {
    throw Error(ErrorKind::MeshMismatch, "field does not match its mesh");
  }
  const auto& src = *phi.mesh;
  const PointLocator locator(src);
  auto value = [&](const Point& x) { return locator.interpolate(phi.values, x); };
  auto mesh = adapt_impl(src.half_width(), src.dim(), src.boundary_case(), N_f, N_c, value, options);

  TransferMap map;
  map.source = phi.mesh;
  map.target = mesh;
  map.nodes.reserve(static_cast<std::size_t>(mesh->num_vertices()));
  map.weights.reserve(static_cast<std::size_t>(mesh->num_vertices()));
  for (const auto& x : mesh->vertices()) {
    const auto loc = locator.locate(x);
    map.nodes.push_back(src.element(loc.element).v);
    map.weights.push_back(loc.bary);
  }
  return {mesh, std::move(map)};
}

MeshPtr adapt_to_function(double H, int dim, BoundaryCase bc,
                          const std::function<double(const Point&)>& phi, int N_f, int N_c,
                          const AdaptOptions& options) {
  check_dim(dim);
  return adapt_impl(H, dim, bc, N_f, N_c, phi, options);
}

NodalField transfer_field(const NodalField& field, const TransferMap& map) {
  if (!field.mesh || field.mesh != map.source || field.values.size() != field.mesh->num_vertices()) {
    throw Error(ErrorKind::MeshMismatch, "field does not live on the source mesh of the transfer map");
  }
  const int d = field.mesh->dim();
  NodalField out{map.target, Vector::Zero(static_cast<Eigen::Index>(map.nodes.size()))};
  for (std::size_t i = 0; i < map.nodes.size(); ++i) {
    double v = 0.0;
    for (int k = 0; k <= d; ++k) {
      v += map.weights[i][static_cast<std::size_t>(k)] * field.values(map.nodes[i][static_cast<std::size_t>(k)]);
    }
    out.values(static_cast<Eigen::Index>(i)) = v;
  }
  return out;
}

}  // namespace anisopf
