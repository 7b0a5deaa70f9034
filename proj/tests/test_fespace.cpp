#include "fdlm/fespace.hpp"
#include "fdlm/locator.hpp"
#include "fdlm/mesh.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace fdlm;

namespace {

std::shared_ptr<const TriMesh> unit_square(int n, RectangleTags tags = RectangleTags::all(BoundaryTag::OuterWall)) {
  return std::make_shared<const TriMesh>(build_square_mesh(n, {0.0, 1.0}, tags));
}

Bary random_bary(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double a = u(rng), b = u(rng);
  if (a + b > 1.0) {
    a = 1.0 - a;
    b = 1.0 - b;
  }
  return {1.0 - a - b, a, b};
}

}  // namespace

TEST(Shape, PartitionOfUnity) {
  const auto m = unit_square(3);
  std::mt19937 rng(11);
  for (Family f : {Family::P1, Family::P2}) {
    for (int k = 0; k < 50; ++k) {
      const int t = k % m->n_tris();
      const ShapeValues s = shape_functions(f, *m, t, random_bary(rng));
      double sum = 0.0;
      Point2 g = Point2::Zero();
      for (int i = 0; i < s.n; ++i) {
        sum += s.phi[i];
        g += s.grad[i];
      }
      EXPECT_NEAR(sum, 1.0, 1e-13);
      EXPECT_NEAR(g.norm(), 0.0, 1e-12);
    }
  }
}

TEST(Shape, GradientMatchesFiniteDifference) {
  const auto m = unit_square(2);
  const int t = 3;
  const Bary b = {0.2, 0.5, 0.3};
  const Point2 x = from_barycentric(*m, t, b);
  const ShapeValues s = shape_functions(Family::P2, *m, t, b);
  const double h = 1e-6;
  for (int d = 0; d < 2; ++d) {
    Point2 xp = x, xm = x;
    xp[d] += h;
    xm[d] -= h;
    const ShapeValues sp = shape_functions(Family::P2, *m, t, barycentric(*m, t, xp));
    const ShapeValues sm = shape_functions(Family::P2, *m, t, barycentric(*m, t, xm));
    for (int i = 0; i < 6; ++i) EXPECT_NEAR((sp.phi[i] - sm.phi[i]) / (2 * h), s.grad[i][d], 1e-8);
  }
}

TEST(Space, DofCounts) {
  const auto m = unit_square(4);
  const int n_edges = static_cast<int>(m->edge_table().edges.size());
  EXPECT_EQ(make_space(m, Family::P1, 2).n_dofs(), 2 * m->n_nodes());
  EXPECT_EQ(make_space(m, Family::P2, 2).n_dofs(), 2 * (m->n_nodes() + n_edges));
  EXPECT_EQ(make_space(m, Family::P1plusP0, 1).n_dofs(), m->n_nodes() + m->n_tris() - 1);
  const FeSpace iso = make_velocity_space(m, VelocityElement::P1isoP2);
  EXPECT_EQ(iso.n_dofs(), 2 * (m->n_nodes() + n_edges));
  EXPECT_EQ(iso.mesh->parent.get(), m.get());
}

TEST(Space, ConstraintsFollowTags) {
  const int n = 4;
  const auto m = unit_square(n, RectangleTags::quarter());
  const FeSpace v = make_velocity_space(m, VelocityElement::TaylorHoodP2);
  // 2n+1 P2 nodes per side; x = 0 fixes u_x, y = 0 fixes u_y, outer sides fix both.
  const int side = 2 * n + 1;
  int cx = 0, cy = 0;
  for (int i = 0; i < v.n_scalar; ++i) {
    cx += v.constrained[v.dof(0, i)];
    cy += v.constrained[v.dof(1, i)];
    const Point2& p = v.support[i];
    const bool outer = p.x() == 1.0 || p.y() == 1.0;
    EXPECT_EQ(static_cast<bool>(v.constrained[v.dof(0, i)]), outer || p.x() == 0.0);
    EXPECT_EQ(static_cast<bool>(v.constrained[v.dof(1, i)]), outer || p.y() == 0.0);
  }
  EXPECT_EQ(cx, 3 * side - 2);
  EXPECT_EQ(cy, 3 * side - 2);
}

TEST(Space, SolidSpacesRejectRicherMultiplier) {
  auto s = std::make_shared<const TriMesh>(build_quarter_annulus_mesh(2, 3, 0.3, 0.5));
  EXPECT_THROW(make_solid_spaces(s, 1, 2), InvalidArgument);
  EXPECT_NO_THROW(make_solid_spaces(s, 2, 1));
}

TEST(Space, SolidSymmetryEdgesFixNormalComponent) {
  auto s = std::make_shared<const TriMesh>(build_quarter_annulus_mesh(2, 3, 0.3, 0.5));
  const SolidSpaces ss = make_solid_spaces(s, 2, 1);
  for (const FeSpace* sp : {&ss.position, &ss.multiplier})
    for (int i = 0; i < sp->n_scalar; ++i) {
      const Point2& p = sp->support[i];
      EXPECT_EQ(static_cast<bool>(sp->constrained[sp->dof(0, i)]), p.x() == 0.0);
      EXPECT_EQ(static_cast<bool>(sp->constrained[sp->dof(1, i)]), p.y() == 0.0);
    }
  auto rect = std::make_shared<const TriMesh>(
      build_rectangle_mesh(2, 2, {0.2, 0.4}, {0.2, 0.4}, RectangleTags::all(BoundaryTag::Free)));
  EXPECT_EQ(make_solid_spaces(rect, 1, 1).position.n_constrained(), 0);
}

TEST(Interpolation, ReproducesPolynomialsOfSpaceDegree) {
  const auto m = unit_square(3);
  auto p1 = std::make_shared<const FeSpace>(make_space(m, Family::P1, 2));
  auto p2 = std::make_shared<const FeSpace>(make_space(m, Family::P2, 2));
  const VectorFunction lin = [](const Point2& x) { return Eigen::Vector2d(1.0 + 2.0 * x.x() - x.y(), 0.5 * x.y()); };
  const VectorFunction quad = [](const Point2& x) {
    return Eigen::Vector2d(x.x() * x.y() - x.x() * x.x(), 1.0 + x.y() * x.y());
  };
  std::mt19937 rng(3);
  for (int k = 0; k < 40; ++k) {
    const int t = k % m->n_tris();
    const Bary b = random_bary(rng);
    const Point2 x = from_barycentric(*m, t, b);
    const FieldValue f1 = eval_on_cell(*p1, interpolate(*p1, lin), t, b);
    EXPECT_NEAR((f1.value - lin(x)).norm(), 0.0, 1e-14);
    Eigen::Matrix2d g1;
    g1 << 2.0, -1.0, 0.0, 0.5;
    EXPECT_NEAR((f1.grad - g1).norm(), 0.0, 1e-12);
    const FieldValue f2 = eval_on_cell(*p2, interpolate(*p2, quad), t, b);
    EXPECT_NEAR((f2.value - quad(x)).norm(), 0.0, 1e-14);
    Eigen::Matrix2d g2;
    g2 << x.y() - 2.0 * x.x(), x.x(), 0.0, 2.0 * x.y();
    EXPECT_NEAR((f2.grad - g2).norm(), 0.0, 1e-12);
  }
}

TEST(Interpolation, CrossMeshEvaluationIsExactForLinears) {
  // Field on one mesh evaluated at points of an unrelated mesh.
  auto fluid = std::make_shared<const TriMesh>(build_square_mesh(5, {-1.0, 1.0}, RectangleTags::all(BoundaryTag::OuterWall)));
  auto space = std::make_shared<const FeSpace>(make_space(fluid, Family::P1, 2));
  const VectorFunction lin = [](const Point2& x) { return Eigen::Vector2d(0.3 - x.x() + 4.0 * x.y(), 2.0 * x.x()); };
  const DiscreteField f(space, interpolate(*space, lin));
  const MeshLocator loc(fluid);
  const TriMesh solid = build_quarter_annulus_mesh(3, 5, 0.3, 0.5);
  for (int t = 0; t < solid.n_tris(); ++t) {
    const Point2 p = from_barycentric(solid, t, {0.1, 0.3, 0.6});
    const auto v = eval_field(f, loc, p);
    ASSERT_TRUE(v.has_value());
    EXPECT_LE((v->value - lin(p)).norm(), 1e-12 * std::max(1.0, lin(p).norm()));
  }
  EXPECT_FALSE(eval_field(f, loc, Point2(2.0, 0.0)).has_value());
}

TEST(Interpolation, P1isoP2EvaluatesOnFineMesh) {
  const auto coarse = unit_square(2);
  auto v = std::make_shared<const FeSpace>(make_velocity_space(coarse, VelocityElement::P1isoP2));
  const VectorFunction quad = [](const Point2& x) { return Eigen::Vector2d(x.x() * x.x(), 0.0); };
  const Vec c = interpolate(*v, quad);
  // Piecewise linear on the refined mesh: exact at fine vertices, not in between.
  const TriMesh& fine = *v->mesh;
  for (int i = 0; i < fine.n_nodes(); ++i) EXPECT_DOUBLE_EQ(c[v->dof(0, i)], fine.nodes[i].x() * fine.nodes[i].x());
  const FieldValue mid = eval_on_cell(*v, c, 0, {0.5, 0.5, 0.0});
  const Point2 x = from_barycentric(fine, 0, {0.5, 0.5, 0.0});
  const Point2 a = fine.vertex(0, 0), b = fine.vertex(0, 1);
  EXPECT_NEAR(mid.value.x(), 0.5 * (a.x() * a.x() + b.x() * b.x()), 1e-15);
  if (a.x() != b.x()) {
    EXPECT_GT(std::abs(mid.value.x() - x.x() * x.x()), 1e-6);
  }
}

TEST(FieldDump, RoundTrip) {
  Vec c(4);
  c << 1.0, -2.5e-17, 3.141592653589793, 1e300;
  std::stringstream ss;
  write_field(ss, "u", c);
  std::string name;
  const Vec r = read_field(ss, &name);
  EXPECT_EQ(name, "u");
  EXPECT_EQ(r, c);
  std::stringstream trunc("field u ndofs 3\n1\n2\n");
  EXPECT_THROW(read_field(trunc), IoError);
}
