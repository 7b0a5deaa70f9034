#pragma once

#include "fdlm/core.hpp"
#include "fdlm/fespace.hpp"
#include "fdlm/forms.hpp"
#include "fdlm/locator.hpp"
#include "fdlm/parallel.hpp"

#include <cstdio>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace fdlm {

/// Cross-mesh pairing c(mu, v(X_bar)) between the multiplier space on the
/// solid reference mesh and the velocity space on the fluid mesh.
///
/// Integration runs over the solid mesh with `quad`. The composed velocity
/// basis is only piecewise smooth on a solid element, so the rule is not exact
/// in general.
struct CouplingAssembler {
  SpacePtr lambda_space;
  SpacePtr velocity_space;
  std::shared_ptr<const MeshLocator> locator;  // over the velocity mesh
  QuadRule quad = triangle_rule(4);
  CouplingForm form = CouplingForm::C1_L2;

  CouplingAssembler(SpacePtr lambda, SpacePtr velocity, CouplingForm f, int quad_degree = 4)
      : lambda_space(std::move(lambda)),
        velocity_space(std::move(velocity)),
        locator(std::make_shared<const MeshLocator>(velocity_space->mesh)),
        quad(triangle_rule(quad_degree)),
        form(f) {
    require(lambda_space->components == 2 && velocity_space->components == 2,
            "coupling needs vector spaces");
  }
};

namespace detail {

inline std::string escape_report(const FeSpace& xs, const Vec& x, int cell, const Point2& p) {
  std::ostringstream os;
  os.precision(17);
  os << "solid escaped the fluid container: solid element " << cell
     << " maps a quadrature point to (" << p.x() << ", " << p.y() << "); element nodes at";
  for (int i = 0; i < xs.n_local(); ++i) {
    const int d = xs.cell_dofs[cell][i];
    if (d < 0) continue;
    os << " (" << x[xs.dof(0, d)] << ", " << x[xs.dof(1, d)] << ")";
  }
  return os.str();
}

}  // namespace detail

/// C_f with (C_f)_{mu, v} = c(mu, v o X_bar). For the H1 form the gradient
/// uses the chain rule grad_s[v(X_bar(s))] = grad v(X_bar) . grad_s X_bar.
/// Throws SolidEscaped if a mapped quadrature point is outside the fluid mesh.
inline SparseMat assemble_Cf(const CouplingAssembler& ca, const DiscreteField& x_bar) {
  const FeSpace& ls = *ca.lambda_space;
  const FeSpace& vs = *ca.velocity_space;
  const FeSpace& xs = *x_bar.space;
  require(xs.mesh.get() == ls.mesh.get(), "X_bar must live on the multiplier mesh");
  require(xs.components == 2, "X_bar must be vector valued");
  const TriMesh& solid = *ls.mesh;
  const bool h1 = ca.form == CouplingForm::C2_H1;
  const int nl = ls.n_local(), nv = vs.n_local();

  std::vector<std::vector<Triplet>> per_cell(solid.n_tris());
  std::vector<std::string> failure(solid.n_tris());
  parallel_for(solid.n_tris(), [&](int e) {
    auto& out = per_cell[e];
    const double area = solid.area(e);
    const auto& ldofs = ls.cell_dofs[e];
    for (int q = 0; q < ca.quad.size(); ++q) {
      const Bary& b = ca.quad.points[q];
      const FieldValue xq = eval_on_cell(xs, x_bar.coeffs, e, b);
      const Point2 mapped = xq.value;
      const auto where = ca.locator->locate(mapped);
      if (!where) {
        failure[e] = detail::escape_report(xs, x_bar.coeffs, e, mapped);
        return;
      }
      const ShapeValues mu = shape_functions(ls.basis_family(), solid, e, b);
      const ShapeValues phi =
          shape_functions(vs.basis_family(), *vs.mesh, where->tri, where->bary);
      const auto& vdofs = vs.cell_dofs[where->tri];
      const double w = ca.quad.weights[q] * area;
      for (int i = 0; i < nl; ++i) {
        if (ldofs[i] < 0) continue;
        for (int j = 0; j < nv; ++j) {
          if (vdofs[j] < 0) continue;
          double v = mu.phi[i] * phi.phi[j];
          // xq.grad(a, b) = d X_a / d s_b, so grad_s(phi o X) = F^T grad phi.
          if (h1) v += mu.grad[i].dot(xq.grad.transpose() * phi.grad[j]);
          if (v == 0.0) continue;
          for (int c = 0; c < 2; ++c)
            out.emplace_back(ls.dof(c, ldofs[i]), vs.dof(c, vdofs[j]), w * v);
        }
      }
    }
  });
  for (const auto& f : failure)
    if (!f.empty()) throw SolidEscaped(f);
  std::vector<Triplet> all;
  for (const auto& c : per_cell) all.insert(all.end(), c.begin(), c.end());
  return from_triplets(ls.n_dofs(), vs.n_dofs(), all);
}

/// Load vector v -> int_B lambda(s) . v(X_bar(s)) ds for a given multiplier
/// function on the reference domain, with the same quadrature as assemble_Cf.
inline Vec assemble_coupling_load(const CouplingAssembler& ca, const DiscreteField& x_bar,
                                  const VectorFunction& lambda) {
  require(ca.form == CouplingForm::C1_L2, "coupling load is implemented for the L2 form only");
  const FeSpace& vs = *ca.velocity_space;
  const FeSpace& xs = *x_bar.space;
  const TriMesh& solid = *xs.mesh;
  Vec out = Vec::Zero(vs.n_dofs());
  for (int e = 0; e < solid.n_tris(); ++e) {
    for (int q = 0; q < ca.quad.size(); ++q) {
      const Bary& b = ca.quad.points[q];
      const FieldValue xq = eval_on_cell(xs, x_bar.coeffs, e, b);
      const auto where = ca.locator->locate(xq.value);
      if (!where) throw SolidEscaped(detail::escape_report(xs, x_bar.coeffs, e, xq.value));
      const ShapeValues phi = shape_functions(vs.basis_family(), *vs.mesh, where->tri, where->bary);
      const auto& vdofs = vs.cell_dofs[where->tri];
      const Eigen::Vector2d l = lambda(from_barycentric(solid, e, b));
      const double w = ca.quad.weights[q] * solid.area(e);
      for (int j = 0; j < vs.n_local(); ++j)
        if (vdofs[j] >= 0)
          for (int c = 0; c < 2; ++c) out[vs.dof(c, vdofs[j])] += w * l[c] * phi.phi[j];
    }
  }
  return out;
}

/// Kinematic constraint violation || C_f u - C_s x - C_s d ||_inf.
inline double constraint_residual(const SparseMat& c_f, const SparseMat& c_s, const Vec& u,
                                  const Vec& x, const Vec& d) {
  if (c_f.rows() == 0) return 0.0;
  return (c_f * u - c_s * x - c_s * d).lpNorm<Eigen::Infinity>();
}

}  // namespace fdlm
