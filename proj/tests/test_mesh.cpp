#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "biot/mesh.hpp"

using namespace biot;

TEST(UnitSquareMesh, SmallestMesh) {
  const Mesh m = unit_square_mesh(1);
  EXPECT_EQ(m.num_vertices(), 4);
  EXPECT_EQ(m.num_cells(), 2);
}

TEST(UnitSquareMesh, CountsForN4) {
  const Mesh m = unit_square_mesh(4);
  EXPECT_EQ(m.num_vertices(), 25);
  EXPECT_EQ(m.num_cells(), 32);
  EXPECT_EQ(build_edges(m).num_edges(), 56);
}

TEST(UnitSquareMesh, RejectsZero) { EXPECT_THROW(unit_square_mesh(0), std::invalid_argument); }

TEST(UnitSquareMesh, RowMajorVertices) {
  const Mesh m = unit_square_mesh(3);
  for (int j = 0; j <= 3; ++j) {
    for (int i = 0; i <= 3; ++i) {
      const Point& p = m.vertices[j * 4 + i];
      EXPECT_DOUBLE_EQ(p.x, i / 3.0);
      EXPECT_DOUBLE_EQ(p.y, j / 3.0);
    }
  }
}

TEST(UnitSquareMesh, DiagonalRunsLowerLeftToUpperRight) {
  const Mesh m = unit_square_mesh(1);
  const EdgeTopology t = build_edges(m);
  for (int e = 0; e < t.num_edges(); ++e) {
    if (!t.is_interior(e)) continue;
    const auto [a, b] = t.edges[e];
    EXPECT_EQ(a, 0);
    EXPECT_EQ(b, 3);
  }
}

class MeshSizes : public ::testing::TestWithParam<int> {};

TEST_P(MeshSizes, AreasPositiveAndSumToOne) {
  const int n = GetParam();
  const Mesh m = unit_square_mesh(n);
  double total = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) {
    EXPECT_NEAR(m.signed_area(c), 1.0 / (2.0 * n * n), 1e-15);
    total += m.signed_area(c);
    const auto& tri = m.triangles[c];
    EXPECT_NE(tri[0], tri[1]);
    EXPECT_NE(tri[1], tri[2]);
    EXPECT_NE(tri[0], tri[2]);
    for (int v : tri) {
      EXPECT_GE(v, 0);
      EXPECT_LT(v, m.num_vertices());
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-13);
}

TEST_P(MeshSizes, EulerAndIncidence) {
  const int n = GetParam();
  const Mesh m = unit_square_mesh(n);
  const EdgeTopology t = build_edges(m);
  EXPECT_EQ(m.num_vertices() - t.num_edges() + m.num_cells(), 1);
  std::set<std::pair<int, int>> unique;
  for (int e = 0; e < t.num_edges(); ++e) {
    const auto [a, b] = t.edges[e];
    EXPECT_LT(a, b);
    unique.insert({a, b});
    const int incident = t.is_interior(e) ? 2 : 1;
    for (int k = 0; k < incident; ++k) {
      const auto [cell, local] = t.cells[e][k];
      const auto& tri = m.triangles[cell];
      EXPECT_EQ(std::min(tri[(local + 1) % 3], tri[(local + 2) % 3]), a);
      EXPECT_EQ(std::max(tri[(local + 1) % 3], tri[(local + 2) % 3]), b);
      EXPECT_EQ(t.cell_edges[cell][local], e);
    }
    const double h = t.length[e];
    EXPECT_TRUE(std::abs(h - 1.0 / n) < 1e-15 || std::abs(h - std::sqrt(2.0) / n) < 1e-15) << h;
    if (!t.is_interior(e)) {
      const Point& p = m.vertices[a];
      const Point& q = m.vertices[b];
      const bool vertical = p.x == q.x && (p.x == 0.0 || p.x == 1.0);
      const bool horizontal = p.y == q.y && (p.y == 0.0 || p.y == 1.0);
      EXPECT_TRUE(vertical || horizontal);
    }
  }
  EXPECT_EQ(static_cast<int>(unique.size()), t.num_edges());
  EXPECT_EQ(t.num_edges() - t.num_interior(), 4 * n);
}

INSTANTIATE_TEST_SUITE_P(Sizes, MeshSizes, ::testing::Values(1, 2, 3, 5, 8, 13));

TEST(BuildEdges, N1HasFiveEdgesOneInterior) {
  const EdgeTopology t = build_edges(unit_square_mesh(1));
  EXPECT_EQ(t.num_edges(), 5);
  EXPECT_EQ(t.num_interior(), 1);
}

// Brute force over the 2x2 grid: 12 axis-aligned unit segments plus 4 diagonals.
TEST(BuildEdges, N2MatchesEnumeration) {
  const EdgeTopology t = build_edges(unit_square_mesh(2));
  EXPECT_EQ(t.num_edges(), 16);
  EXPECT_EQ(t.num_interior(), 8);
}

TEST(TagBoundary, LeftRightDisplacement) {
  const Mesh m = unit_square_mesh(2);
  const EdgeTopology t = build_edges(m);
  const BoundaryTags tags = tag_boundary(m, t, BoundarySpec{});
  EXPECT_EQ(BoundaryTags::count(tags.displacement, BoundaryTag::kEssential), 4);
  EXPECT_EQ(BoundaryTags::count(tags.displacement, BoundaryTag::kNatural), 4);
  EXPECT_EQ(BoundaryTags::count(tags.pressure, BoundaryTag::kEssential), 8);
  EXPECT_EQ(BoundaryTags::count(tags.pressure, BoundaryTag::kNatural), 0);
}

TEST(TagBoundary, AllDisplacementLeavesNoTraction) {
  const Mesh m = unit_square_mesh(3);
  const EdgeTopology t = build_edges(m);
  BoundarySpec spec;
  spec.displacement = {"all", ""};
  const BoundaryTags tags = tag_boundary(m, t, spec);
  EXPECT_EQ(BoundaryTags::count(tags.displacement, BoundaryTag::kNatural), 0);
  EXPECT_EQ(BoundaryTags::count(tags.displacement, BoundaryTag::kEssential), 12);
}

TEST(TagBoundary, EveryBoundaryEdgeTaggedOncePerPartition) {
  const Mesh m = unit_square_mesh(4);
  const EdgeTopology t = build_edges(m);
  BoundarySpec spec;
  spec.displacement = {"left|bottom", ""};
  spec.pressure = {"top", "left|right|bottom"};
  const BoundaryTags tags = tag_boundary(m, t, spec);
  for (int e = 0; e < t.num_edges(); ++e) {
    const bool boundary = !t.is_interior(e);
    EXPECT_EQ(tags.displacement[e] != BoundaryTag::kInterior, boundary);
    EXPECT_EQ(tags.pressure[e] != BoundaryTag::kInterior, boundary);
  }
}

TEST(TagBoundary, RejectsUntaggedEdges) {
  const Mesh m = unit_square_mesh(2);
  const EdgeTopology t = build_edges(m);
  BoundarySpec spec;
  spec.pressure = {"left", "right"};
  EXPECT_THROW(tag_boundary(m, t, spec), std::invalid_argument);
  spec.pressure = {"left", "left|right|top|bottom"};
  EXPECT_THROW(tag_boundary(m, t, spec), std::invalid_argument);
  spec.pressure = {"sideways", ""};
  EXPECT_THROW(tag_boundary(m, t, spec), std::invalid_argument);
}

TEST(WriteMesh, OneLinePerEntity) {
  std::ostringstream os;
  write_mesh(os, unit_square_mesh(2));
  int lines = 0;
  for (char c : os.str()) lines += c == '\n';
  EXPECT_EQ(lines, 1 + 9 + 8);
}
