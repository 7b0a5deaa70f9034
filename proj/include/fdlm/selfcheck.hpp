#pragma once

#include "fdlm/analysis.hpp"
#include "fdlm/fespace.hpp"
#include "fdlm/forms.hpp"
#include "fdlm/locator.hpp"
#include "fdlm/mesh.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace fdlm {

/// Invariant suite shared by `fdlm check` and the acceptance binary.
struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // worst observed quantity
  double tolerance = 0.0;  // bound it is compared against
};

namespace detail {

inline Bary random_bary(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double a = u(rng), b = u(rng);
  if (a + b > 1.0) {
    a = 1.0 - a;
    b = 1.0 - b;
  }
  return {1.0 - a - b, a, b};
}

inline std::shared_ptr<const TriMesh> square(int n) {
  return std::make_shared<const TriMesh>(
      build_square_mesh(n, {0.0, 1.0}, RectangleTags::all(BoundaryTag::OuterWall)));
}

}  // namespace detail

/// v^T N(u_bar) v over 100 random v, relative to |v|^T |N| |v|.
inline CheckResult check_convection_skew(unsigned seed = 1) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  auto v = std::make_shared<const FeSpace>(make_velocity_space(detail::square(6), VelocityElement::P1isoP2));
  Vec ub(v->n_dofs());
  for (int i = 0; i < ub.size(); ++i) ub[i] = v->constrained[i] ? 0.0 : g(rng);
  const SparseMat n = assemble_convection(DiscreteField(v, ub), *v, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    Vec x(v->n_dofs());
    for (int i = 0; i < x.size(); ++i) x[i] = v->constrained[i] ? 0.0 : g(rng);
    const double scale = x.cwiseAbs().dot(abs_product(n, x.cwiseAbs()));
    worst = std::max(worst, std::abs(x.dot(n * x)) / scale);
  }
  return {"convection skew-symmetry", worst <= 1e-12, worst, 1e-12};
}

/// Elastic force against central differences of the elastic energy.
inline CheckResult check_elastic_force(unsigned seed = 2) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  auto mesh = std::make_shared<const TriMesh>(build_quarter_annulus_mesh(3, 6, 0.3, 0.5));
  double worst = 0.0;
  for (int deg : {1, 2}) {
    auto s = std::make_shared<const FeSpace>(make_solid_spaces(mesh, deg, 1).position);
    Vec x = interpolate(*s, [](const Point2& p) { return Eigen::Vector2d(p.x() / 1.4, 1.4 * p.y()); });
    for (int i = 0; i < x.size(); ++i) x[i] += 0.01 * g(rng);
    const double kappa = 3.0;
    const Vec force = elastic_force(DiscreteField(s, x), kappa);
    for (int k = 0; k < 10; ++k) {
      Vec dir(x.size());
      for (int i = 0; i < dir.size(); ++i) dir[i] = g(rng);
      dir /= dir.norm();
      const double h = 1e-5;
      const double fd = (elastic_energy(DiscreteField(s, x + h * dir), kappa) -
                         elastic_energy(DiscreteField(s, x - h * dir), kappa)) /
                        (2.0 * h);
      const double exact = force.dot(dir);
      worst = std::max(worst, std::abs(fd - exact) / std::max(std::abs(exact), force.norm() * 1e-3));
    }
  }
  return {"elastic force vs central differences", worst <= 1e-6, worst, 1e-6};
}

inline CheckResult check_partition_of_unity(unsigned seed = 3) {
  std::mt19937 rng(seed);
  const auto m = detail::square(3);
  double worst = 0.0;
  for (Family f : {Family::P1, Family::P2})
    for (int k = 0; k < 200; ++k) {
      const ShapeValues s = shape_functions(f, *m, k % m->n_tris(), detail::random_bary(rng));
      double sum = 0.0;
      for (int i = 0; i < s.n; ++i) sum += s.phi[i];
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  return {"partition of unity", worst <= 1e-13, worst, 1e-13};
}

/// A linear field on the fluid mesh evaluated at points of an unrelated mesh.
inline CheckResult check_cross_mesh_linear(unsigned seed = 4) {
  std::mt19937 rng(seed);
  auto fluid = std::make_shared<const TriMesh>(
      build_square_mesh(7, {0.0, 1.0}, RectangleTags::quarter()));
  const auto lin = [](const Point2& x) { return Eigen::Vector2d(0.3 - x.x() + 4.0 * x.y(), 2.0 * x.x() - 0.5); };
  const MeshLocator loc(fluid);
  const TriMesh solid = build_quarter_annulus_mesh(3, 7, 0.3, 0.5);
  double worst = 0.0;
  for (Family fam : {Family::P1, Family::P2}) {
    auto space = std::make_shared<const FeSpace>(make_space(fluid, fam, 2));
    const DiscreteField f(space, interpolate(*space, lin));
    for (int t = 0; t < solid.n_tris(); ++t) {
      const Point2 p = from_barycentric(solid, t, detail::random_bary(rng));
      const auto v = eval_field(f, loc, p);
      if (!v) return {"cross-mesh linear reproduction", false, INFINITY, 1e-12};
      worst = std::max(worst, (v->value - lin(p)).norm() / std::max(1.0, lin(p).norm()));
    }
  }
  return {"cross-mesh linear reproduction", worst <= 1e-12, worst, 1e-12};
}

/// H1 velocity rate of the manufactured stationary problem at the finest pair.
inline CheckResult check_spatial_rate() {
  SpatialOptions o;
  o.levels = 4;
  const RateTable t = spatial_convergence(o);
  const double r = t.rate(t.rows() - 1, "u_H1");
  return {"spatial H1 velocity rate (target 1.0 +- 0.15)", std::abs(r - 1.0) <= 0.15, r, 0.15};
}

inline std::vector<CheckResult> run_selfcheck() {
  return {check_convection_skew(), check_elastic_force(), check_partition_of_unity(),
          check_cross_mesh_linear(), check_spatial_rate()};
}

}  // namespace fdlm
