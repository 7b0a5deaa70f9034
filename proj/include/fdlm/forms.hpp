#pragma once

#include "fdlm/core.hpp"
#include "fdlm/fespace.hpp"
#include "fdlm/parallel.hpp"
#include "fdlm/quadrature.hpp"
#include "fdlm/sparse.hpp"

#include <array>
#include <vector>

namespace fdlm {

/// Material parameters. delta_rho is the excess solid density rho_s - rho_f.
struct PhysParams {
  double rho_f = 1.0;
  double delta_rho = 0.0;
  double nu_f = 1.0;
  double nu_s = 1.0;
  double kappa = 1.0;

  void validate() const {
    require(rho_f > 0.0, "rho_f must be positive");
    require(delta_rho >= 0.0, "delta_rho must be nonnegative");
    require(nu_f > 0.0 && nu_s > 0.0, "viscosities must be positive");
    require(kappa > 0.0, "kappa must be positive");
  }
};

/// Form used for the multiplier pairing: the L2(B) product or the full H1(B)
/// inner product.
enum class CouplingForm { C1_L2, C2_H1 };

inline const char* to_string(CouplingForm f) {
  return f == CouplingForm::C1_L2 ? "C1_L2" : "C2_H1";
}

/// Default rule for all single-mesh forms.
inline const QuadRule& default_rule() {
  static const QuadRule r = triangle_rule(4);
  return r;
}

struct QuadPoint {
  int cell;
  Bary bary;
  Point2 x;
  double JxW;
};

/// Local matrix indexed by (component * n_local + local function).
using LocalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 12, 12>;

/// Generic element loop over `integ`. The kernel adds the contribution of one
/// quadrature point to the local matrix. Rows follow `test`, columns `trial`.
template <class Kernel>
SparseMat assemble_form(const FeSpace& test, const FeSpace& trial, const TriMesh& integ,
                        const QuadRule& rule, Kernel&& kernel) {
  const int nt = test.n_local(), nr = trial.n_local();
  const int rows = test.components * nt, cols = trial.components * nr;
  struct Cell {
    LocalMatrix local;
    std::array<int, 6> test_dofs, trial_dofs;
  };
  std::vector<Cell> cells(integ.n_tris());
  parallel_for(integ.n_tris(), [&](int e) {
    SpaceOnCell te(test, integ), tr(trial, integ);
    te.reinit(e);
    tr.reinit(e);
    Cell& c = cells[e];
    c.local = LocalMatrix::Zero(rows, cols);
    c.test_dofs = te.dofs();
    c.trial_dofs = tr.dofs();
    const double area = integ.area(e);
    for (int q = 0; q < rule.size(); ++q) {
      const Bary& b = rule.points[q];
      const Point2 x = from_barycentric(integ, e, b);
      kernel(QuadPoint{e, b, x, rule.weights[q] * area}, te.at(b, x), tr.at(b, x), c.local);
    }
  });
  std::vector<Triplet> trip;
  trip.reserve(cells.size() * rows * cols);
  for (const Cell& c : cells)
    for (int ct = 0; ct < test.components; ++ct)
      for (int i = 0; i < nt; ++i) {
        if (c.test_dofs[i] < 0) continue;
        const int gi = test.dof(ct, c.test_dofs[i]);
        for (int cr = 0; cr < trial.components; ++cr)
          for (int j = 0; j < nr; ++j) {
            if (c.trial_dofs[j] < 0) continue;
            const double v = c.local(ct * nt + i, cr * nr + j);
            if (v != 0.0) trip.emplace_back(gi, trial.dof(cr, c.trial_dofs[j]), v);
          }
      }
  return from_triplets(test.n_dofs(), trial.n_dofs(), trip);
}

namespace detail {

// Adds w * value to every diagonal component block.
inline void add_diag(LocalMatrix& L, int comps, int nt, int nr, int i, int j, double v) {
  for (int c = 0; c < comps; ++c) L(c * nt + i, c * nr + j) += v;
}

}  // namespace detail

/// (u, v) on the space's own mesh, componentwise.
inline SparseMat assemble_mass(const FeSpace& s, const QuadRule& rule = default_rule()) {
  const int n = s.n_local();
  return assemble_form(s, s, *s.mesh, rule,
                       [&](const QuadPoint& q, const ShapeValues& a, const ShapeValues& b,
                           LocalMatrix& L) {
                         for (int i = 0; i < n; ++i)
                           for (int j = 0; j < n; ++j)
                             detail::add_diag(L, s.components, n, n, i, j,
                                              q.JxW * a.phi[i] * b.phi[j]);
                       });
}

/// (grad u, grad v), componentwise.
inline SparseMat assemble_stiffness(const FeSpace& s, const QuadRule& rule = default_rule()) {
  const int n = s.n_local();
  return assemble_form(s, s, *s.mesh, rule,
                       [&](const QuadPoint& q, const ShapeValues& a, const ShapeValues& b,
                           LocalMatrix& L) {
                         for (int i = 0; i < n; ++i)
                           for (int j = 0; j < n; ++j)
                             detail::add_diag(L, s.components, n, n, i, j,
                                              q.JxW * a.grad[i].dot(b.grad[j]));
                       });
}

/// Gram matrix of the full H1 inner product.
inline SparseMat assemble_h1_gram(const FeSpace& s) {
  return assemble_mass(s) + assemble_stiffness(s);
}

/// Piecewise viscosity on the cells of the velocity mesh. An empty per_cell
/// vector means the constant value is used everywhere.
struct Viscosity {
  double constant = 1.0;
  std::vector<double> per_cell;

  double on(int cell) const { return per_cell.empty() ? constant : per_cell[cell]; }
};

/// a(u, v) = int nu eps(u) : eps(v), eps the symmetric gradient.
inline SparseMat assemble_viscous(const FeSpace& s, const Viscosity& nu,
                                  const QuadRule& rule = default_rule()) {
  require(s.components == 2, "viscous form needs a vector space");
  require(nu.per_cell.empty() || static_cast<int>(nu.per_cell.size()) == s.mesh->n_tris(),
          "viscosity field does not match the velocity mesh");
  const int n = s.n_local();
  return assemble_form(
      s, s, *s.mesh, rule,
      [&](const QuadPoint& q, const ShapeValues& a, const ShapeValues& b, LocalMatrix& L) {
        const double w = q.JxW * nu.on(q.cell);
        // eps(phi e_c) : eps(psi e_d) = (delta_cd grad phi . grad psi + d_d phi d_c psi) / 2
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const double gg = a.grad[i].dot(b.grad[j]);
            for (int c = 0; c < 2; ++c)
              for (int d = 0; d < 2; ++d)
                L(c * n + i, d * n + j) +=
                    0.5 * w * ((c == d ? gg : 0.0) + a.grad[i][d] * b.grad[j][c]);
          }
      });
}

/// Skew-symmetric convection b(u_bar, u, v) =
/// (rho_f/2) int ((u_bar . grad u) . v - (u_bar . grad v) . u).
/// Rows are test functions v, columns trial functions u.
inline SparseMat assemble_convection(const DiscreteField& u_bar, const FeSpace& s, double rho_f,
                                     const QuadRule& rule = default_rule()) {
  require(s.components == 2, "convection needs a vector space");
  require(u_bar.space->mesh.get() == s.mesh.get(),
          "lagged velocity must live on the velocity mesh");
  const int n = s.n_local();
  const SparseMat k = assemble_form(
      s, s, *s.mesh, rule,
      [&](const QuadPoint& q, const ShapeValues& a, const ShapeValues& b, LocalMatrix& L) {
        const FieldValue ub = eval_on_cell(*u_bar.space, u_bar.coeffs, q.cell, q.bary);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            detail::add_diag(L, 2, n, n, i, j, q.JxW * ub.value.dot(b.grad[j]) * a.phi[i]);
      });
  const SparseMat kt = k.transpose();
  SparseMat nmat = (0.5 * rho_f) * (k - kt);
  nmat.prune(0.0);
  return nmat;
}

/// B with (B u)_q = (div u, q). Integrated on the velocity mesh; the pressure
/// space may live on its parent.
inline SparseMat assemble_divergence(const FeSpace& v, const FeSpace& q_space,
                                     const QuadRule& rule = default_rule()) {
  require(v.components == 2 && q_space.components == 1, "divergence needs (vector, scalar)");
  const int nq = q_space.n_local(), nv = v.n_local();
  return assemble_form(
      q_space, v, *v.mesh, rule,
      [&](const QuadPoint& q, const ShapeValues& psi, const ShapeValues& phi, LocalMatrix& L) {
        for (int i = 0; i < nq; ++i)
          for (int j = 0; j < nv; ++j)
            for (int c = 0; c < 2; ++c) L(i, c * nv + j) += q.JxW * psi.phi[i] * phi.grad[j][c];
      });
}

/// Integrals of the scalar basis functions: m . p = int p_h.
inline Vec basis_integrals(const FeSpace& s, const QuadRule& rule = default_rule()) {
  require(s.components == 1, "basis integrals need a scalar space");
  Vec m = Vec::Zero(s.n_dofs());
  const TriMesh& mesh = *s.mesh;
  for (int t = 0; t < mesh.n_tris(); ++t) {
    const auto& dofs = s.cell_dofs[t];
    for (int q = 0; q < rule.size(); ++q) {
      const ShapeValues sv = shape_functions(s.basis_family(), mesh, t, rule.points[q]);
      for (int i = 0; i < sv.n; ++i)
        if (dofs[i] >= 0) m[dofs[i]] += rule.weights[q] * mesh.area(t) * sv.phi[i];
    }
  }
  return m;
}

/// a_s(X, z) = beta (X, z)_B + gamma (grad X, grad z)_B.
inline SparseMat assemble_solid(const FeSpace& s, double beta, double gamma) {
  require(beta >= 0.0, "beta must be nonnegative");
  require(gamma > 0.0, "gamma must be positive");
  return beta * assemble_mass(s) + gamma * assemble_stiffness(s);
}

/// Multiplier pairing c(mu, z) between two spaces on the same solid mesh.
/// Rows follow the multiplier space.
inline SparseMat assemble_lambda_product(const FeSpace& lambda, const FeSpace& other,
                                         CouplingForm form,
                                         const QuadRule& rule = default_rule()) {
  require(lambda.mesh.get() == other.mesh.get(), "pairing needs spaces on one mesh");
  require(lambda.components == other.components, "pairing needs matching components");
  const int nl = lambda.n_local(), no = other.n_local();
  const bool h1 = form == CouplingForm::C2_H1;
  return assemble_form(
      lambda, other, *lambda.mesh, rule,
      [&](const QuadPoint& q, const ShapeValues& mu, const ShapeValues& z, LocalMatrix& L) {
        for (int i = 0; i < nl; ++i)
          for (int j = 0; j < no; ++j) {
            double v = mu.phi[i] * z.phi[j];
            if (h1) v += mu.grad[i].dot(z.grad[j]);
            detail::add_diag(L, lambda.components, nl, no, i, j, q.JxW * v);
          }
      });
}

/// E(X) = (kappa/2) ||grad X||^2_B, evaluated by direct quadrature.
inline double elastic_energy(const DiscreteField& x, double kappa,
                             const QuadRule& rule = default_rule()) {
  const FeSpace& s = *x.space;
  const TriMesh& m = *s.mesh;
  double e = 0.0;
  for (int t = 0; t < m.n_tris(); ++t)
    for (int q = 0; q < rule.size(); ++q) {
      const FieldValue fv = eval_on_cell(s, x.coeffs, t, rule.points[q]);
      e += rule.weights[q] * m.area(t) * fv.grad.squaredNorm();
    }
  return 0.5 * kappa * e;
}

/// Elastic force vector (P(F), grad z_i)_B with P(F) = kappa F, by direct
/// quadrature. It is the gradient of elastic_energy.
inline Vec elastic_force(const DiscreteField& x, double kappa,
                         const QuadRule& rule = default_rule()) {
  const FeSpace& s = *x.space;
  const TriMesh& m = *s.mesh;
  Vec r = Vec::Zero(s.n_dofs());
  for (int t = 0; t < m.n_tris(); ++t) {
    const auto& dofs = s.cell_dofs[t];
    for (int q = 0; q < rule.size(); ++q) {
      const FieldValue fv = eval_on_cell(s, x.coeffs, t, rule.points[q]);
      const ShapeValues sv = shape_functions(s.basis_family(), m, t, rule.points[q]);
      const Eigen::Matrix2d p = kappa * fv.grad;
      const double w = rule.weights[q] * m.area(t);
      for (int i = 0; i < sv.n; ++i)
        if (dofs[i] >= 0)
          for (int c = 0; c < s.components; ++c)
            r[s.dof(c, dofs[i])] += w * p.row(c).dot(sv.grad[i].transpose());
    }
  }
  return r;
}

/// Load vector (f, phi_i) for a vector-valued f.
inline Vec assemble_load(const FeSpace& s, const VectorFunction& f,
                         const QuadRule& rule = default_rule()) {
  Vec b = Vec::Zero(s.n_dofs());
  const TriMesh& m = *s.mesh;
  for (int t = 0; t < m.n_tris(); ++t) {
    const auto& dofs = s.cell_dofs[t];
    for (int q = 0; q < rule.size(); ++q) {
      const Point2 x = from_barycentric(m, t, rule.points[q]);
      const ShapeValues sv = shape_functions(s.basis_family(), m, t, rule.points[q]);
      const Eigen::Vector2d fx = f(x);
      const double w = rule.weights[q] * m.area(t);
      for (int i = 0; i < sv.n; ++i)
        if (dofs[i] >= 0)
          for (int c = 0; c < s.components; ++c) b[s.dof(c, dofs[i])] += w * fx[c] * sv.phi[i];
    }
  }
  return b;
}

}  // namespace fdlm
