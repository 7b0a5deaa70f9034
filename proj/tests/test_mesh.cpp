#include "fdlm/locator.hpp"
#include "fdlm/mesh.hpp"
#include "fdlm/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

using namespace fdlm;

namespace {

int count_tag(const TriMesh& m, BoundaryTag tag) {
  int n = 0;
  for (const auto& e : m.boundary_edges) n += e.tag == tag;
  return n;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST(Mesh, RectangleCountsAndArea) {
  const TriMesh m = build_rectangle_mesh(4, 3, {0.0, 2.0}, {-1.0, 0.5}, RectangleTags::all(BoundaryTag::OuterWall));
  EXPECT_EQ(m.n_nodes(), 5 * 4);
  EXPECT_EQ(m.n_tris(), 2 * 4 * 3);
  EXPECT_EQ(static_cast<int>(m.boundary_edges.size()), 2 * (4 + 3));
  EXPECT_NEAR(m.total_area(), 3.0, 1e-14);
  for (int t = 0; t < m.n_tris(); ++t) EXPECT_GT(m.signed_area(t), 0.0);
  EXPECT_NO_THROW(m.validate());
}

TEST(Mesh, QuarterTagsOnSymmetryLines) {
  const TriMesh m = build_square_mesh(4, {0.0, 1.0}, RectangleTags::quarter());
  EXPECT_EQ(count_tag(m, BoundaryTag::SymmetryX), 4);
  EXPECT_EQ(count_tag(m, BoundaryTag::SymmetryY), 4);
  EXPECT_EQ(count_tag(m, BoundaryTag::OuterWall), 8);
  for (const auto& e : m.boundary_edges) {
    const Point2& a = m.nodes[e.nodes[0]];
    const Point2& b = m.nodes[e.nodes[1]];
    if (e.tag == BoundaryTag::SymmetryX) {
      EXPECT_EQ(a.x(), 0.0);
      EXPECT_EQ(b.x(), 0.0);
    }
    if (e.tag == BoundaryTag::SymmetryY) {
      EXPECT_EQ(a.y(), 0.0);
      EXPECT_EQ(b.y(), 0.0);
    }
  }
}

TEST(Mesh, QuarterAnnulusIsInscribedPolygon) {
  const int nr = 3, na = 7;
  const double ri = 0.3, ro = 0.5;
  const TriMesh m = build_quarter_annulus_mesh(nr, na, ri, ro);
  EXPECT_EQ(m.n_nodes(), (nr + 1) * (na + 1));
  EXPECT_EQ(m.n_tris(), 2 * nr * na);
  // Each angular sector is a union of trapezoids between chords.
  const double dtheta = std::numbers::pi / 2.0 / na;
  const double exact = na * 0.5 * std::sin(dtheta) * (ro * ro - ri * ri);
  EXPECT_NEAR(m.total_area(), exact, 1e-14);
  for (const auto& p : m.nodes) {
    const double r = p.norm();
    EXPECT_GE(r, ri - 1e-15);
    EXPECT_LE(r, ro + 1e-15);
    EXPECT_GE(p.x(), 0.0);
    EXPECT_GE(p.y(), 0.0);
  }
  EXPECT_EQ(count_tag(m, BoundaryTag::SymmetryY), nr);
  EXPECT_EQ(count_tag(m, BoundaryTag::SymmetryX), nr);
  EXPECT_EQ(count_tag(m, BoundaryTag::Free), 2 * na);
}

TEST(Mesh, AnnulusForMeshsizeRespectsBound) {
  for (double h : {0.25, 0.125, 0.0625}) {
    const TriMesh m = build_quarter_annulus_for_meshsize(h, 0.3, 0.5);
    EXPECT_LE(m.max_diameter(), h);
  }
}

TEST(Mesh, UniformRefinementKeepsGeometry) {
  auto coarse = std::make_shared<const TriMesh>(build_quarter_annulus_mesh(2, 4, 0.3, 0.5));
  const TriMesh fine = refine_uniform(coarse);
  const int n_edges = static_cast<int>(coarse->edge_table().edges.size());
  EXPECT_EQ(fine.n_nodes(), coarse->n_nodes() + n_edges);
  EXPECT_EQ(fine.n_tris(), 4 * coarse->n_tris());
  EXPECT_EQ(fine.boundary_edges.size(), 2 * coarse->boundary_edges.size());
  EXPECT_NEAR(fine.total_area(), coarse->total_area(), 1e-15);
  for (int t = 0; t < fine.n_tris(); ++t) {
    EXPECT_EQ(fine.parent_tri[t], t / 4);
    EXPECT_NEAR(fine.area(t), coarse->area(t / 4) / 4.0, 1e-15);
    const Bary b = barycentric(*coarse, fine.parent_tri[t], fine.centroid(t));
    for (double l : b) EXPECT_GE(l, -1e-14);
  }
  EXPECT_LE(fine.max_diameter(), 0.5 * coarse->max_diameter() + 1e-15);
}

TEST(Mesh, DumpRoundTrip) {
  const TriMesh m = build_quarter_annulus_mesh(2, 3, 0.3, 0.5);
  std::stringstream ss;
  write_mesh(ss, m);
  const TriMesh r = read_mesh(ss);
  ASSERT_EQ(r.n_nodes(), m.n_nodes());
  ASSERT_EQ(r.n_tris(), m.n_tris());
  for (int i = 0; i < m.n_nodes(); ++i) EXPECT_EQ(r.nodes[i], m.nodes[i]);
  EXPECT_EQ(r.tris, m.tris);
  ASSERT_EQ(r.boundary_edges.size(), m.boundary_edges.size());
  for (size_t i = 0; i < m.boundary_edges.size(); ++i) {
    EXPECT_EQ(r.boundary_edges[i].nodes, m.boundary_edges[i].nodes);
    EXPECT_EQ(r.boundary_edges[i].tag, m.boundary_edges[i].tag);
  }
}

TEST(Mesh, ReadRejectsGarbage) {
  std::stringstream ss("nodes 3 tris 1\n0 0\n1 0\n0 1\n0 1 5\n");
  EXPECT_THROW(read_mesh(ss), Error);
  std::stringstream bad("vertices 3\n");
  EXPECT_THROW(read_mesh(bad), Error);
}

TEST(Mesh, InvalidSizesRejected) {
  EXPECT_THROW(build_rectangle_mesh(0, 3, {0, 1}, {0, 1}, RectangleTags::all(BoundaryTag::OuterWall)),
               InvalidArgument);
  EXPECT_THROW(build_quarter_annulus_mesh(1, 1, 0.5, 0.3), InvalidArgument);
}

TEST(Locator, FindsContainingTriangle) {
  auto m = std::make_shared<const TriMesh>(build_square_mesh(5, {-1.0, 1.0}, RectangleTags::all(BoundaryTag::OuterWall)));
  const MeshLocator loc(m);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Point2 p(u(rng), u(rng));
    const auto where = loc.locate(p);
    ASSERT_TRUE(where.has_value());
    for (double l : where->bary) EXPECT_GE(l, -1e-12);
    EXPECT_NEAR((from_barycentric(*m, where->tri, where->bary) - p).norm(), 0.0, 1e-14);
  }
  EXPECT_FALSE(loc.locate(Point2(1.01, 0.0)).has_value());
  EXPECT_FALSE(loc.locate(Point2(0.0, -1.5)).has_value());
  EXPECT_TRUE(loc.locate(Point2(1.0, 1.0)).has_value());
}

TEST(Locator, SharedEdgeResolvesToLowestIndex) {
  auto m = std::make_shared<const TriMesh>(build_square_mesh(2, {0.0, 1.0}, RectangleTags::all(BoundaryTag::OuterWall)));
  const MeshLocator loc(m);
  std::vector<int> hits;
  const Point2 p(0.5, 0.25);
  for (int t = 0; t < m->n_tris(); ++t) {
    const Bary b = barycentric(*m, t, p);
    if (b[0] >= -1e-12 && b[1] >= -1e-12 && b[2] >= -1e-12) hits.push_back(t);
  }
  ASSERT_GE(hits.size(), 2u);
  EXPECT_EQ(loc.locate(p)->tri, hits.front());
}

TEST(Quadrature, MonomialsExactUpToDegree) {
  // Integral over a triangle of l1^a l2^b l3^c = 2|T| a! b! c! / (a+b+c+2)!.
  for (int deg : {1, 2, 4, 5, 6, 8, 10}) {
    const QuadRule r = triangle_rule(deg);
    double wsum = 0.0;
    for (double w : r.weights) wsum += w;
    EXPECT_NEAR(wsum, 1.0, 1e-14) << "degree " << deg;
    for (int a = 0; a <= r.degree; ++a)
      for (int b = 0; a + b <= r.degree; ++b)
        for (int c = 0; a + b + c <= r.degree; ++c) {
          double q = 0.0;
          for (int i = 0; i < r.size(); ++i)
            q += r.weights[i] * std::pow(r.points[i][0], a) * std::pow(r.points[i][1], b) *
                 std::pow(r.points[i][2], c);
          const double exact = 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
          EXPECT_NEAR(q, exact, 1e-14) << "rule " << deg << " monomial " << a << b << c;
        }
  }
}

TEST(Quadrature, RuleIsNotExactBeyondDegree) {
  const QuadRule r = triangle_rule(2);
  double q = 0.0;
  for (int i = 0; i < r.size(); ++i) q += r.weights[i] * std::pow(r.points[i][0], 4);
  EXPECT_GT(std::abs(q - 2.0 * 24.0 / factorial(6)), 1e-4);
}
