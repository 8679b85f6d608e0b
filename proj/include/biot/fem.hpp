#pragma once

/// \file fem.hpp
/// \brief Lagrange reference elements (P0, P1, P2), triangle and edge
/// quadrature, degree-of-freedom maps and Dirichlet constraint sets.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "biot/mesh.hpp"

namespace biot {

using Vec2 = std::array<double, 2>;
using Bary = std::array<double, 3>;

enum class Continuity { kDiscontinuous, kContinuous };

struct ElementKind {
  int order = 1;       // 0, 1 or 2
  int components = 1;  // 1 (scalar) or 2 (vector)

  static constexpr ElementKind P0() { return {0, 1}; }
  static constexpr ElementKind P1(int components = 1) { return {1, components}; }
  static constexpr ElementKind P2(int components = 1) { return {2, components}; }

  Continuity continuity() const {
    return order == 0 ? Continuity::kDiscontinuous : Continuity::kContinuous;
  }
  /// Scalar shape functions per triangle.
  int local_dofs() const { return order == 0 ? 1 : (order == 1 ? 3 : 6); }

  friend bool operator==(const ElementKind&, const ElementKind&) = default;
};

inline std::string to_string(const ElementKind& k) {
  std::string s = "P" + std::to_string(k.order);
  if (k.components > 1) s += "^" + std::to_string(k.components);
  return s;
}

/// Scalar shape function values and reference-coordinate gradients.
struct BasisEval {
  std::vector<double> values;
  std::vector<Vec2> gradients;
};

/// Lagrange basis on the reference triangle (0,0), (1,0), (0,1) with
/// barycentrics l0 = 1 - x - y, l1 = x, l2 = y. P2 ordering: the three vertex
/// functions l_i (2 l_i - 1), then the edge functions 4 l1 l2, 4 l2 l0, 4 l0 l1
/// (edge k opposite vertex k).
inline BasisEval reference_basis(const ElementKind& kind, const Bary& l) {
  constexpr double tol = 1e-12;
  for (double li : l) {
    if (li < -tol || li > 1.0 + tol) {
      throw std::domain_error("reference_basis: point outside the reference triangle");
    }
  }
  if (std::abs(l[0] + l[1] + l[2] - 1.0) > tol) {
    throw std::domain_error("reference_basis: barycentric coordinates do not sum to 1");
  }
  static constexpr std::array<Vec2, 3> dl{{{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}}};
  BasisEval out;
  switch (kind.order) {
    case 0:
      out.values = {1.0};
      out.gradients = {{0.0, 0.0}};
      break;
    case 1:
      out.values = {l[0], l[1], l[2]};
      out.gradients = {dl[0], dl[1], dl[2]};
      break;
    case 2: {
      out.values.resize(6);
      out.gradients.resize(6);
      for (int i = 0; i < 3; ++i) {
        out.values[i] = l[i] * (2.0 * l[i] - 1.0);
        const double s = 4.0 * l[i] - 1.0;
        out.gradients[i] = {s * dl[i][0], s * dl[i][1]};
      }
      for (int k = 0; k < 3; ++k) {
        const int i = (k + 1) % 3, j = (k + 2) % 3;
        out.values[3 + k] = 4.0 * l[i] * l[j];
        out.gradients[3 + k] = {4.0 * (dl[i][0] * l[j] + l[i] * dl[j][0]),
                                4.0 * (dl[i][1] * l[j] + l[i] * dl[j][1])};
      }
      break;
    }
    default:
      throw std::invalid_argument("reference_basis: unsupported order " + std::to_string(kind.order));
  }
  return out;
}

/// Rule on the reference triangle; weights sum to its area 1/2.
struct QuadratureRule {
  std::vector<Bary> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return points.size(); }
};

namespace detail {

inline void add_orbit3(QuadratureRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.points.push_back({b, a, a});
  r.points.push_back({a, b, a});
  r.points.push_back({a, a, b});
  for (int i = 0; i < 3; ++i) r.weights.push_back(0.5 * w);
}

inline void add_orbit6(QuadratureRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  for (const Bary& p : {Bary{a, b, c}, Bary{a, c, b}, Bary{b, a, c}, Bary{b, c, a},
                        Bary{c, a, b}, Bary{c, b, a}}) {
    r.points.push_back(p);
    r.weights.push_back(0.5 * w);
  }
}

}  // namespace detail

/// Smallest tabulated rule exact for polynomials of total degree <= `degree`.
inline QuadratureRule quadrature_rule(int degree) {
  QuadratureRule r;
  if (degree < 0 || degree > 6) {
    throw std::invalid_argument("quadrature_rule: unsupported degree " + std::to_string(degree));
  }
  if (degree <= 1) {
    r.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
    r.weights = {0.5};
    r.degree = 1;
  } else if (degree == 2) {
    detail::add_orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
    r.degree = 2;
  } else if (degree <= 4) {
    // Dunavant, 6 points.
    detail::add_orbit3(r, 0.44594849091596488632, 0.22338158967801146570);
    detail::add_orbit3(r, 0.09157621350977074346, 0.10995174365532186764);
    r.degree = 4;
  } else if (degree == 5) {
    // Radon / Strang-Fix 7-point rule.
    const double s15 = std::sqrt(15.0);
    r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    r.weights.push_back(0.5 * 9.0 / 40.0);
    detail::add_orbit3(r, (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
    detail::add_orbit3(r, (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
    r.degree = 5;
  } else {
    // Dunavant, 12 points.
    detail::add_orbit3(r, 0.063089014491502228340, 0.050844906370206816921);
    detail::add_orbit3(r, 0.24928674517091042129, 0.11678627572637936603);
    detail::add_orbit6(r, 0.053145049844816947353, 0.31035245103378440542,
                       0.082851075618373575194);
    r.degree = 6;
  }
  return r;
}

/// Gauss-Legendre rule on [0,1] (weights sum to 1), exact to degree 5.
struct EdgeQuadrature {
  std::array<double, 3> points;
  std::array<double, 3> weights;
};

inline EdgeQuadrature gauss_edge_rule() {
  const double d = 0.5 * std::sqrt(0.6);
  return {{0.5 - d, 0.5, 0.5 + d}, {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};
}

/// Affine map from the reference triangle.
struct CellGeometry {
  std::array<Point, 3> v;
  double det = 0.0;  // twice the signed area
  std::array<std::array<double, 2>, 2> inv_jac_t{};

  Point map(const Bary& l) const {
    return {l[0] * v[0].x + l[1] * v[1].x + l[2] * v[2].x,
            l[0] * v[0].y + l[1] * v[1].y + l[2] * v[2].y};
  }
  Vec2 gradient(const Vec2& ref) const {
    return {inv_jac_t[0][0] * ref[0] + inv_jac_t[0][1] * ref[1],
            inv_jac_t[1][0] * ref[0] + inv_jac_t[1][1] * ref[1]};
  }
  double area() const { return 0.5 * std::abs(det); }
  /// Longest edge.
  double diameter() const {
    double d = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Point& a = v[k];
      const Point& b = v[(k + 1) % 3];
      d = std::max(d, std::hypot(b.x - a.x, b.y - a.y));
    }
    return d;
  }
};

inline CellGeometry cell_geometry(const Mesh& mesh, int cell) {
  CellGeometry g;
  for (int k = 0; k < 3; ++k) g.v[k] = mesh.vertices[mesh.triangles[cell][k]];
  const double j00 = g.v[1].x - g.v[0].x, j01 = g.v[2].x - g.v[0].x;
  const double j10 = g.v[1].y - g.v[0].y, j11 = g.v[2].y - g.v[0].y;
  g.det = j00 * j11 - j01 * j10;
  // J^{-T}
  g.inv_jac_t = {{{j11 / g.det, -j10 / g.det}, {-j01 / g.det, j00 / g.det}}};
  return g;
}

/// Basis values and reference gradients tabulated at every point of a rule.
struct BasisTable {
  int num_basis = 0;
  std::vector<BasisEval> at;  // one per quadrature point
};

inline BasisTable tabulate(const ElementKind& kind, const QuadratureRule& rule) {
  BasisTable t;
  t.num_basis = kind.local_dofs();
  t.at.reserve(rule.size());
  for (const auto& p : rule.points) t.at.push_back(reference_basis(kind, p));
  return t;
}

/// Global numbering of a Lagrange space. Vector spaces are blocked by
/// component: dof = component * num_scalar + scalar dof.
/// Scalar numbering: P0 = cells, P1 = vertices, P2 = vertices then edges.
struct DofMap {
  ElementKind kind;
  int num_scalar = 0;
  int per_cell = 0;
  std::vector<int> cell_dofs;  // scalar dofs, per_cell entries per cell
  std::vector<Point> nodes;    // nodal point per scalar dof (P0: centroid)

  int size() const { return num_scalar * kind.components; }
  std::span<const int> cell(int c) const {
    return {cell_dofs.data() + static_cast<std::size_t>(c) * per_cell,
            static_cast<std::size_t>(per_cell)};
  }
  int global(int c, int local, int comp = 0) const {
    return comp * num_scalar + cell_dofs[static_cast<std::size_t>(c) * per_cell + local];
  }
  int component(int dof) const { return dof / num_scalar; }
  const Point& node(int dof) const { return nodes[dof % num_scalar]; }
};

inline DofMap build_dofmap(const Mesh& mesh, const EdgeTopology& topo, const ElementKind& kind) {
  if (kind.components < 1 || kind.components > 2) {
    throw std::invalid_argument("build_dofmap: components must be 1 or 2");
  }
  DofMap map;
  map.kind = kind;
  map.per_cell = kind.local_dofs();
  const int nc = mesh.num_cells();
  map.cell_dofs.resize(static_cast<std::size_t>(nc) * map.per_cell);
  switch (kind.order) {
    case 0:
      map.num_scalar = nc;
      for (int c = 0; c < nc; ++c) {
        map.cell_dofs[c] = c;
        const auto& t = mesh.triangles[c];
        const Point& a = mesh.vertices[t[0]];
        const Point& b = mesh.vertices[t[1]];
        const Point& d = mesh.vertices[t[2]];
        map.nodes.push_back({(a.x + b.x + d.x) / 3.0, (a.y + b.y + d.y) / 3.0});
      }
      break;
    case 1:
      map.num_scalar = mesh.num_vertices();
      map.nodes = mesh.vertices;
      for (int c = 0; c < nc; ++c) {
        for (int k = 0; k < 3; ++k) map.cell_dofs[3 * c + k] = mesh.triangles[c][k];
      }
      break;
    case 2: {
      const int nv = mesh.num_vertices();
      map.num_scalar = nv + topo.num_edges();
      map.nodes = mesh.vertices;
      for (const auto& e : topo.edges) {
        const Point& a = mesh.vertices[e[0]];
        const Point& b = mesh.vertices[e[1]];
        map.nodes.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
      }
      for (int c = 0; c < nc; ++c) {
        for (int k = 0; k < 3; ++k) {
          map.cell_dofs[6 * c + k] = mesh.triangles[c][k];
          map.cell_dofs[6 * c + 3 + k] = nv + topo.cell_edges[c][k];
        }
      }
      break;
    }
    default:
      throw std::invalid_argument("build_dofmap: unsupported order " + std::to_string(kind.order));
  }
  return map;
}

/// Value of component `comp` of a field at point x and time t.
using FieldFn = std::function<double(const Point& x, double t, int comp)>;

/// Constrained global dofs (sorted) with prescribed values.
struct DirichletSet {
  std::vector<int> dofs;
  std::vector<double> values;

  std::size_t size() const { return dofs.size(); }
};

enum class Partition { kDisplacement, kPressure };

/// Scalar dofs lying on edges tagged essential in the chosen partition.
inline std::vector<int> boundary_scalar_dofs(const DofMap& map, const EdgeTopology& topo,
                                             const BoundaryTags& tags, Partition which) {
  const auto& tag = which == Partition::kDisplacement ? tags.displacement : tags.pressure;
  std::vector<int> out;
  if (map.kind.order == 0) return out;
  const int nv = map.kind.order == 2 ? map.num_scalar - topo.num_edges() : map.num_scalar;
  for (int e = 0; e < topo.num_edges(); ++e) {
    if (tag[e] != BoundaryTag::kEssential) continue;
    out.push_back(topo.edges[e][0]);
    out.push_back(topo.edges[e][1]);
    if (map.kind.order == 2) out.push_back(nv + e);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Nodal interpolation of value_fn at time t on every dof on the tagged
/// edges (all components for vector spaces).
inline DirichletSet dirichlet_set(const DofMap& map, const EdgeTopology& topo,
                                  const BoundaryTags& tags, Partition which,
                                  const FieldFn& value_fn, double t) {
  const auto scalar = boundary_scalar_dofs(map, topo, tags, which);
  DirichletSet set;
  set.dofs.reserve(scalar.size() * map.kind.components);
  for (int comp = 0; comp < map.kind.components; ++comp) {
    for (int s : scalar) {
      set.dofs.push_back(comp * map.num_scalar + s);
      set.values.push_back(value_fn ? value_fn(map.nodes[s], t, comp) : 0.0);
    }
  }
  return set;
}

/// Nodal interpolant (P0: value at the centroid).
inline std::vector<double> interpolate(const DofMap& map, const FieldFn& fn, double t) {
  std::vector<double> out(map.size());
  for (int comp = 0; comp < map.kind.components; ++comp) {
    for (int s = 0; s < map.num_scalar; ++s) {
      out[comp * map.num_scalar + s] = fn(map.nodes[s], t, comp);
    }
  }
  return out;
}

}  // namespace biot
