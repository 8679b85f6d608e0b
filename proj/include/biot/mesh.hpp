#pragma once

/// \file mesh.hpp
/// \brief Structured triangulations of the unit square, edge topology and
/// boundary-partition tagging.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace biot {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform N x N triangulation of [0,1]^2. Vertices are numbered row-major,
/// index = j * (N + 1) + i for the vertex at (i / N, j / N). Every triangle
/// is stored counterclockwise.
struct Mesh {
  int N = 0;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(triangles.size()); }
  double h() const { return 1.0 / N; }

  double signed_area(int cell) const {
    const auto& t = triangles[cell];
    const Point& a = vertices[t[0]];
    const Point& b = vertices[t[1]];
    const Point& c = vertices[t[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  }
};

/// Each grid square is split along its lower-left to upper-right diagonal.
inline Mesh unit_square_mesh(int N) {
  if (N < 1) {
    throw std::invalid_argument("unit_square_mesh: N must be >= 1, got " + std::to_string(N));
  }
  Mesh mesh;
  mesh.N = N;
  mesh.vertices.reserve(static_cast<std::size_t>(N + 1) * (N + 1));
  for (int j = 0; j <= N; ++j) {
    for (int i = 0; i <= N; ++i) {
      mesh.vertices.push_back({static_cast<double>(i) / N, static_cast<double>(j) / N});
    }
  }
  mesh.triangles.reserve(2 * static_cast<std::size_t>(N) * N);
  auto vid = [N](int i, int j) { return j * (N + 1) + i; };
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < N; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  }
  return mesh;
}

struct EdgeCell {
  int cell = -1;
  int local = -1;  // local edge index = index of the opposite vertex
};

/// Unique undirected edges with cell incidence. Local edge k of a triangle
/// joins its vertices (k+1)%3 and (k+2)%3.
struct EdgeTopology {
  std::vector<std::array<int, 2>> edges;  // sorted vertex pairs, lexicographic order
  std::vector<std::array<EdgeCell, 2>> cells;
  std::vector<double> length;
  std::vector<std::array<int, 3>> cell_edges;

  int num_edges() const { return static_cast<int>(edges.size()); }
  bool is_interior(int e) const { return cells[e][1].cell >= 0; }
  int num_interior() const {
    return static_cast<int>(std::count_if(cells.begin(), cells.end(),
                                          [](const auto& c) { return c[1].cell >= 0; }));
  }
};

inline EdgeTopology build_edges(const Mesh& mesh) {
  struct Incidence {
    std::array<int, 2> key;
    int cell;
    int local;
  };
  std::vector<Incidence> all;
  all.reserve(3 * mesh.triangles.size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.triangles[c];
    for (int k = 0; k < 3; ++k) {
      int a = t[(k + 1) % 3], b = t[(k + 2) % 3];
      if (a > b) std::swap(a, b);
      all.push_back({{a, b}, c, k});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Incidence& l, const Incidence& r) { return l.key < r.key; });

  EdgeTopology topo;
  topo.cell_edges.assign(mesh.triangles.size(), {-1, -1, -1});
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i + 1;
    while (j < all.size() && all[j].key == all[i].key) ++j;
    if (j - i > 2) throw std::runtime_error("build_edges: non-manifold edge");
    const int e = topo.num_edges();
    topo.edges.push_back(all[i].key);
    std::array<EdgeCell, 2> inc{};
    for (std::size_t k = i; k < j; ++k) {
      inc[k - i] = {all[k].cell, all[k].local};
      topo.cell_edges[all[k].cell][all[k].local] = e;
    }
    topo.cells.push_back(inc);
    const Point& p = mesh.vertices[all[i].key[0]];
    const Point& q = mesh.vertices[all[i].key[1]];
    topo.length.push_back(std::hypot(q.x - p.x, q.y - p.y));
    i = j;
  }
  return topo;
}

// Sides of the unit square as a bitmask.
enum Side : int { kLeft = 1, kRight = 2, kBottom = 4, kTop = 8, kAllSides = 15 };

/// Side on which a boundary edge lies (exactly one for structured meshes).
inline int edge_side(const Mesh& mesh, const EdgeTopology& topo, int e) {
  const Point& p = mesh.vertices[topo.edges[e][0]];
  const Point& q = mesh.vertices[topo.edges[e][1]];
  if (p.x == 0.0 && q.x == 0.0) return kLeft;
  if (p.x == 1.0 && q.x == 1.0) return kRight;
  if (p.y == 0.0 && q.y == 0.0) return kBottom;
  if (p.y == 1.0 && q.y == 1.0) return kTop;
  return 0;
}

/// Outward unit normal of a side.
inline Point side_normal(int side) {
  switch (side) {
    case kLeft: return {-1.0, 0.0};
    case kRight: return {1.0, 0.0};
    case kBottom: return {0.0, -1.0};
    case kTop: return {0.0, 1.0};
    default: throw std::invalid_argument("side_normal: not a single side");
  }
}

/// Parses "left|right", "top|bottom", "all", "none" into a side mask.
inline int parse_sides(std::string_view text) {
  if (text.empty() || text == "none") return 0;
  if (text == "all") return kAllSides;
  int mask = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t bar = text.find('|', start);
    const std::string_view tok =
        text.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start);
    if (tok == "left") mask |= kLeft;
    else if (tok == "right") mask |= kRight;
    else if (tok == "bottom") mask |= kBottom;
    else if (tok == "top") mask |= kTop;
    else if (tok == "all") mask |= kAllSides;
    else throw std::invalid_argument("unknown boundary side '" + std::string(tok) + "'");
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return mask;
}

/// One partition of the boundary into an essential and a natural part.
/// An empty natural descriptor means "the complement of the essential part".
struct PartitionSpec {
  std::string essential;
  std::string natural;
};

/// Boundary partitions of the Biot problem: displacement (Gamma_d | Gamma_t)
/// and pressure (Gamma_p | Gamma_f).
struct BoundarySpec {
  PartitionSpec displacement{"left|right", ""};
  PartitionSpec pressure{"all", ""};
};

enum class BoundaryTag : std::uint8_t { kInterior, kEssential, kNatural };

struct BoundaryTags {
  std::vector<BoundaryTag> displacement;  // Gamma_d = kEssential, Gamma_t = kNatural
  std::vector<BoundaryTag> pressure;      // Gamma_p = kEssential, Gamma_f = kNatural
  std::vector<int> side;                  // side bit per edge, 0 for interior

  static int count(const std::vector<BoundaryTag>& tags, BoundaryTag which) {
    return static_cast<int>(std::count(tags.begin(), tags.end(), which));
  }
};

namespace detail {

inline std::vector<BoundaryTag> tag_partition(const std::vector<int>& side,
                                              const PartitionSpec& spec, const char* name) {
  const int essential = parse_sides(spec.essential);
  const int natural = spec.natural.empty() ? (kAllSides & ~essential) : parse_sides(spec.natural);
  if ((essential & natural) != 0) {
    throw std::invalid_argument(std::string(name) + " partition: essential and natural parts overlap");
  }
  if ((essential | natural) != kAllSides) {
    throw std::invalid_argument(std::string(name) + " partition leaves boundary edges untagged");
  }
  std::vector<BoundaryTag> tags(side.size(), BoundaryTag::kInterior);
  for (std::size_t e = 0; e < side.size(); ++e) {
    if (side[e] == 0) continue;
    tags[e] = (side[e] & essential) ? BoundaryTag::kEssential : BoundaryTag::kNatural;
  }
  return tags;
}

}  // namespace detail

inline BoundaryTags tag_boundary(const Mesh& mesh, const EdgeTopology& topo,
                                 const BoundarySpec& spec) {
  BoundaryTags tags;
  tags.side.assign(topo.num_edges(), 0);
  for (int e = 0; e < topo.num_edges(); ++e) {
    if (!topo.is_interior(e)) tags.side[e] = edge_side(mesh, topo, e);
  }
  tags.displacement = detail::tag_partition(tags.side, spec.displacement, "displacement");
  tags.pressure = detail::tag_partition(tags.side, spec.pressure, "pressure");
  return tags;
}

/// Plain-text dump: header, one vertex per line, one triangle per line.
inline void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << "# vertices " << mesh.num_vertices() << " triangles " << mesh.num_cells() << '\n';
  os.precision(17);
  for (const auto& v : mesh.vertices) os << v.x << ' ' << v.y << '\n';
  for (const auto& t : mesh.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace biot
