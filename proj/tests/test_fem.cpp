#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "biot/fem.hpp"

using namespace biot;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Exact integral of x^a y^b over the reference triangle.
double monomial_integral(int a, int b) {
  return factorial(a) * factorial(b) / factorial(a + b + 2);
}

double integrate_reference(const QuadratureRule& r, int a, int b) {
  double s = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q) {
    s += r.weights[q] * std::pow(r.points[q][1], a) * std::pow(r.points[q][2], b);
  }
  return s;
}

}  // namespace

TEST(ReferenceBasis, P2AtBarycenter) {
  const BasisEval b = reference_basis(ElementKind::P2(), {1.0 / 3, 1.0 / 3, 1.0 / 3});
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(b.values[i], -1.0 / 9.0, 1e-15);
  for (int i = 3; i < 6; ++i) EXPECT_NEAR(b.values[i], 4.0 / 9.0, 1e-15);
}

TEST(ReferenceBasis, LagrangeProperty) {
  const std::array<Bary, 6> nodes{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                   {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}}};
  for (int j = 0; j < 6; ++j) {
    const BasisEval b = reference_basis(ElementKind::P2(), nodes[j]);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(b.values[i], i == j ? 1.0 : 0.0, 1e-15);
  }
  for (int j = 0; j < 3; ++j) {
    const BasisEval b = reference_basis(ElementKind::P1(), nodes[j]);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(b.values[i], i == j ? 1.0 : 0.0, 1e-15);
  }
}

TEST(ReferenceBasis, PartitionOfUnityAndZeroGradientSum) {
  for (const auto kind : {ElementKind::P0(), ElementKind::P1(), ElementKind::P2()}) {
    for (const auto& l : quadrature_rule(6).points) {
      const BasisEval b = reference_basis(kind, l);
      EXPECT_NEAR(std::accumulate(b.values.begin(), b.values.end(), 0.0), 1.0, 1e-14);
      double gx = 0.0, gy = 0.0;
      for (const auto& g : b.gradients) {
        gx += g[0];
        gy += g[1];
      }
      EXPECT_NEAR(gx, 0.0, 1e-13);
      EXPECT_NEAR(gy, 0.0, 1e-13);
    }
  }
}

TEST(ReferenceBasis, GradientsMatchFiniteDifferences) {
  const Bary l{0.2, 0.3, 0.5};
  const double eps = 1e-6;
  const BasisEval b = reference_basis(ElementKind::P2(), l);
  const BasisEval bx = reference_basis(ElementKind::P2(), {l[0] - eps, l[1] + eps, l[2]});
  const BasisEval by = reference_basis(ElementKind::P2(), {l[0] - eps, l[1], l[2] + eps});
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR((bx.values[i] - b.values[i]) / eps, b.gradients[i][0], 1e-5);
    EXPECT_NEAR((by.values[i] - b.values[i]) / eps, b.gradients[i][1], 1e-5);
  }
}

TEST(ReferenceBasis, RejectsOutsidePoints) {
  EXPECT_THROW(reference_basis(ElementKind::P1(), {1.1, -0.1, 0.0}), std::domain_error);
  EXPECT_THROW(reference_basis(ElementKind::P1(), {0.5, 0.5, 0.5}), std::domain_error);
  EXPECT_NO_THROW(reference_basis(ElementKind::P1(), {1.0 + 1e-13, -1e-13, 0.0}));
}

TEST(Quadrature, KnownIntegrals) {
  EXPECT_NEAR(integrate_reference(quadrature_rule(4), 2, 2), 1.0 / 180.0, 1e-15);
  EXPECT_NEAR(integrate_reference(quadrature_rule(2), 2, 0), 1.0 / 12.0, 1e-15);
}

class QuadratureDegree : public ::testing::TestWithParam<int> {};

TEST_P(QuadratureDegree, ExactForAllMonomials) {
  const int d = GetParam();
  const QuadratureRule r = quadrature_rule(d);
  EXPECT_GE(r.degree, d);
  EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 0.5, 1e-15);
  for (const auto& p : r.points) {
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
    for (double li : p) EXPECT_GE(li, 0.0);
  }
  for (int a = 0; a <= r.degree; ++a) {
    for (int b = 0; a + b <= r.degree; ++b) {
      EXPECT_NEAR(integrate_reference(r, a, b), monomial_integral(a, b), 1e-15)
          << "x^" << a << " y^" << b;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Degrees, QuadratureDegree, ::testing::Range(0, 7));

TEST(Quadrature, RejectsUnsupportedDegree) {
  EXPECT_THROW(quadrature_rule(7), std::invalid_argument);
  EXPECT_THROW(quadrature_rule(-1), std::invalid_argument);
}

TEST(Quadrature, EdgeRuleExactToDegreeFive) {
  const auto r = gauss_edge_rule();
  for (int k = 0; k <= 5; ++k) {
    double s = 0.0;
    for (int q = 0; q < 3; ++q) s += r.weights[q] * std::pow(r.points[q], k);
    EXPECT_NEAR(s, 1.0 / (k + 1), 1e-15);
  }
  double s6 = 0.0;
  for (int q = 0; q < 3; ++q) s6 += r.weights[q] * std::pow(r.points[q], 6);
  EXPECT_GT(std::abs(s6 - 1.0 / 7.0), 1e-6);
}

TEST(CellGeometry, MapsAndInverts) {
  const Mesh m = unit_square_mesh(3);
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellGeometry g = cell_geometry(m, c);
    EXPECT_GT(g.det, 0.0);
    EXPECT_NEAR(g.area(), m.signed_area(c), 1e-15);
    EXPECT_NEAR(g.diameter(), std::sqrt(2.0) / 3.0, 1e-15);
    for (int k = 0; k < 3; ++k) {
      Bary l{0, 0, 0};
      l[k] = 1.0;
      const Point p = g.map(l);
      EXPECT_EQ(p.x, g.v[k].x);
      EXPECT_EQ(p.y, g.v[k].y);
    }
    // Physical gradients of the P1 basis reproduce grad x = (1, 0), grad y = (0, 1).
    const BasisEval b = reference_basis(ElementKind::P1(), {1.0 / 3, 1.0 / 3, 1.0 / 3});
    Vec2 gx{0, 0}, gy{0, 0};
    for (int i = 0; i < 3; ++i) {
      const Vec2 gi = g.gradient(b.gradients[i]);
      gx[0] += g.v[i].x * gi[0];
      gx[1] += g.v[i].x * gi[1];
      gy[0] += g.v[i].y * gi[0];
      gy[1] += g.v[i].y * gi[1];
    }
    EXPECT_NEAR(gx[0], 1.0, 1e-13);
    EXPECT_NEAR(gx[1], 0.0, 1e-13);
    EXPECT_NEAR(gy[0], 0.0, 1e-13);
    EXPECT_NEAR(gy[1], 1.0, 1e-13);
  }
}

TEST(DofMap, CountsAtN2) {
  const Mesh m = unit_square_mesh(2);
  const EdgeTopology t = build_edges(m);
  EXPECT_EQ(build_dofmap(m, t, ElementKind::P2()).size(), 25);
  EXPECT_EQ(build_dofmap(m, t, ElementKind::P2(2)).size(), 50);
  EXPECT_EQ(build_dofmap(m, t, ElementKind::P1()).size(), 9);
  EXPECT_EQ(build_dofmap(m, t, ElementKind::P1(2)).size(), 18);
  EXPECT_EQ(build_dofmap(m, t, ElementKind::P0()).size(), 8);
}

TEST(DofMap, NodesMatchLocalPositions) {
  const Mesh m = unit_square_mesh(3);
  const EdgeTopology t = build_edges(m);
  const DofMap map = build_dofmap(m, t, ElementKind::P2(2));
  const std::array<Bary, 6> local{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                   {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}}};
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellGeometry g = cell_geometry(m, c);
    for (int k = 0; k < 6; ++k) {
      const Point p = g.map(local[k]);
      for (int comp = 0; comp < 2; ++comp) {
        const int dof = map.global(c, k, comp);
        EXPECT_EQ(map.component(dof), comp);
        EXPECT_NEAR(map.node(dof).x, p.x, 1e-15);
        EXPECT_NEAR(map.node(dof).y, p.y, 1e-15);
      }
    }
  }
}

TEST(DofMap, P0NodesAreCentroids) {
  const Mesh m = unit_square_mesh(2);
  const DofMap map = build_dofmap(m, build_edges(m), ElementKind::P0());
  EXPECT_EQ(map.per_cell, 1);
  for (int c = 0; c < m.num_cells(); ++c) {
    EXPECT_EQ(map.global(c, 0), c);
    const CellGeometry g = cell_geometry(m, c);
    EXPECT_NEAR(map.node(c).x, (g.v[0].x + g.v[1].x + g.v[2].x) / 3.0, 1e-15);
  }
}

TEST(Dirichlet, PressureOnWholeBoundary) {
  const Mesh m = unit_square_mesh(2);
  const EdgeTopology t = build_edges(m);
  const BoundaryTags tags = tag_boundary(m, t, BoundarySpec{});
  const DofMap p1 = build_dofmap(m, t, ElementKind::P1());
  const FieldFn xy = [](const Point& x, double, int) { return x.x * x.y; };
  const DirichletSet set = dirichlet_set(p1, t, tags, Partition::kPressure, xy, 0.0);
  ASSERT_EQ(set.size(), 8u);
  EXPECT_TRUE(std::is_sorted(set.dofs.begin(), set.dofs.end()));
  EXPECT_EQ(std::find(set.dofs.begin(), set.dofs.end(), 4), set.dofs.end());  // centre vertex
  const auto it = std::find(set.dofs.begin(), set.dofs.end(), 8);
  ASSERT_NE(it, set.dofs.end());
  EXPECT_EQ(set.values[it - set.dofs.begin()], 1.0);
}

TEST(Dirichlet, DisplacementLeftRightBothComponents) {
  const Mesh m = unit_square_mesh(2);
  const EdgeTopology t = build_edges(m);
  const BoundaryTags tags = tag_boundary(m, t, BoundarySpec{});
  const DofMap p2 = build_dofmap(m, t, ElementKind::P2(2));
  const FieldFn f = [](const Point& x, double time, int comp) { return comp + x.y + time; };
  const DirichletSet set = dirichlet_set(p2, t, tags, Partition::kDisplacement, f, 2.0);
  // Per side: 3 vertices and 2 edge midpoints.
  ASSERT_EQ(set.size(), 2u * 10u);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Point& x = p2.node(set.dofs[i]);
    EXPECT_TRUE(x.x == 0.0 || x.x == 1.0);
    EXPECT_DOUBLE_EQ(set.values[i], p2.component(set.dofs[i]) + x.y + 2.0);
  }
}

TEST(Dirichlet, P0HasNoBoundaryDofs) {
  const Mesh m = unit_square_mesh(2);
  const EdgeTopology t = build_edges(m);
  const BoundaryTags tags = tag_boundary(m, t, BoundarySpec{});
  const DofMap p0 = build_dofmap(m, t, ElementKind::P0());
  EXPECT_EQ(dirichlet_set(p0, t, tags, Partition::kPressure, nullptr, 0.0).size(), 0u);
}

TEST(Interpolate, ReproducesQuadratics) {
  const Mesh m = unit_square_mesh(4);
  const EdgeTopology t = build_edges(m);
  const DofMap p2 = build_dofmap(m, t, ElementKind::P2());
  const FieldFn f = [](const Point& x, double, int) { return x.x * x.x - 3.0 * x.x * x.y; };
  const auto v = interpolate(p2, f, 0.0);
  // Evaluate the interpolant at an interior quadrature point of every cell.
  const QuadratureRule r = quadrature_rule(4);
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellGeometry g = cell_geometry(m, c);
    for (const auto& l : r.points) {
      const BasisEval b = reference_basis(ElementKind::P2(), l);
      double uh = 0.0;
      for (int k = 0; k < 6; ++k) uh += v[p2.global(c, k)] * b.values[k];
      EXPECT_NEAR(uh, f(g.map(l), 0.0, 0), 1e-14);
    }
  }
}
