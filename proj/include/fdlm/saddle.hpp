#pragma once

#include "fdlm/core.hpp"
#include "fdlm/coupling.hpp"
#include "fdlm/fespace.hpp"
#include "fdlm/forms.hpp"
#include "fdlm/sparse.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <memory>
#include <vector>

namespace fdlm {

/// Spaces and the step-independent matrices of one fluid/solid discretization.
struct Discretization {
  PhysParams params;
  SpacePtr velocity;    // V_h
  SpacePtr pressure;    // Q_h
  SpacePtr position;    // S_h
  SpacePtr multiplier;  // Lambda_h
  CouplingForm form = CouplingForm::C1_L2;

  SparseMat mass_u;      // (u, v) on Omega
  SparseMat h1_u;        // H1(Omega) Gram
  SparseMat viscous;     // a(u, v)
  SparseMat divergence;  // (div u, q)
  Vec pressure_mean;     // (1, q)
  SparseMat mass_x;      // (X, z)_B
  SparseMat stiff_x;     // (grad X, grad z)_B
  SparseMat pairing;     // C_s = c(mu, z) between Lambda_h and S_h
  std::shared_ptr<CouplingAssembler> coupling;

  static Discretization create(const PhysParams& params, SpacePtr velocity, SpacePtr pressure,
                               SpacePtr position, SpacePtr multiplier, CouplingForm form,
                               int coupling_quad_degree = 4,
                               const Viscosity* viscosity = nullptr) {
    params.validate();
    Discretization d;
    d.params = params;
    d.velocity = std::move(velocity);
    d.pressure = std::move(pressure);
    d.position = std::move(position);
    d.multiplier = std::move(multiplier);
    d.form = form;
    d.mass_u = assemble_mass(*d.velocity);
    d.h1_u = d.mass_u + assemble_stiffness(*d.velocity);
    d.viscous = assemble_viscous(*d.velocity, viscosity ? *viscosity : Viscosity{params.nu_f, {}});
    d.divergence = assemble_divergence(*d.velocity, *d.pressure);
    d.pressure_mean = basis_integrals(*d.pressure);
    d.mass_x = assemble_mass(*d.position);
    d.stiff_x = assemble_stiffness(*d.position);
    d.pairing = assemble_lambda_product(*d.multiplier, *d.position, form);
    d.coupling = std::make_shared<CouplingAssembler>(d.multiplier, d.velocity, form,
                                                     coupling_quad_degree);
    return d;
  }

  int n_u() const { return velocity->n_dofs(); }
  int n_x() const { return position->n_dofs(); }
  int n_l() const { return multiplier->n_dofs(); }
  int n_p() const { return pressure->n_dofs(); }
};

/// alpha, beta, gamma of a_f = alpha (u, v) + a + b and
/// a_s = beta (X, z)_B + gamma (grad X, grad z)_B.
struct SaddleCoefficients {
  double alpha;
  double beta;
  double gamma;
};

inline SaddleCoefficients backward_euler_coefficients(const PhysParams& p, double dt) {
  require(dt > 0.0, "time step must be positive");
  return {p.rho_f / dt, p.delta_rho / dt, p.kappa * dt};
}

/// Same mapping for the BDF2 stencil with the solid velocity w as unknown:
/// X^{n+1} = (2 dt w + 4 X^n - X^{n-1}) / 3.
inline SaddleCoefficients bdf2_coefficients(const PhysParams& p, double dt) {
  require(dt > 0.0, "time step must be positive");
  return {1.5 * p.rho_f / dt, 1.5 * p.delta_rho / dt, 2.0 * p.kappa * dt / 3.0};
}

/// Fields f, g, d of the stationary problem, as coefficient vectors in
/// V_h, S_h and S_h respectively.
struct SaddleRhs {
  Vec f;
  Vec g;
  Vec d;
};

/// f = (rho_f/dt) u^n, g = (delta_rho/dt^2)(2 X^n - X^{n-1}), d = -X^n / dt.
inline SaddleRhs backward_euler_rhs(const PhysParams& p, double dt, const Vec& u_n,
                                    const Vec& x_n, const Vec& x_nm1) {
  return {(p.rho_f / dt) * u_n, (p.delta_rho / (dt * dt)) * (2.0 * x_n - x_nm1), -x_n / dt};
}

/// Per-step saddle-point operator in the unknown order (u, X, lambda | p, r),
/// r the multiplier of the zero-mean pressure condition:
///
///   [ A_f   0     C_f^T  -B_f^T  0 ] [u]   [f]
///   [ 0     A_s  -C_s^T   0      0 ] [X]   [g]
///   [ C_f  -C_s   0       0      0 ] [l] = [d]
///   [-B_f   0     0       0      m ] [p]   [0]
///   [ 0     0     0       m^T    0 ] [r]   [0]
///
/// f, g, d here are load vectors (already tested against the basis).
/// Constrained velocity DOFs are eliminated: their rows and columns of A_f
/// are cleared with a unit diagonal and their columns of B_f, C_f removed.
struct BlockSystem {
  SparseMat A_f, A_s, B_f, C_f, C_s;
  Vec f, g, d;
  Vec m;
  std::vector<char> u_constrained;
  std::vector<char> x_constrained;  // symmetry constraints of the solid, may be empty
  std::vector<char> l_constrained;  // same for the multiplier; those rows read lambda_i = 0

  bool l_fixed(int i) const { return !l_constrained.empty() && l_constrained[i]; }

  int n_u() const { return static_cast<int>(A_f.rows()); }
  int n_x() const { return static_cast<int>(A_s.rows()); }
  int n_l() const { return static_cast<int>(C_s.rows()); }
  int n_p() const { return static_cast<int>(B_f.rows()); }
  int off_x() const { return n_u(); }
  int off_l() const { return n_u() + n_x(); }
  int off_p() const { return n_u() + n_x() + n_l(); }
  int off_r() const { return off_p() + n_p(); }
  int size() const { return off_r() + 1; }
};

namespace detail {

inline SparseMat keep_projector(const std::vector<char>& constrained) {
  const int n = static_cast<int>(constrained.size());
  SparseMat p(n, n);
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i)
    if (!constrained[i]) t.emplace_back(i, i, 1.0);
  p.setFromTriplets(t.begin(), t.end());
  return p;
}

}  // namespace detail

/// Row/column elimination of homogeneous velocity constraints.
inline void apply_velocity_constraints(const std::vector<char>& constrained, SparseMat& a_f,
                                       SparseMat& b_f, SparseMat& c_f, Vec& f) {
  const SparseMat keep = detail::keep_projector(constrained);
  std::vector<Triplet> t;
  for (int i = 0; i < static_cast<int>(constrained.size()); ++i)
    if (constrained[i]) t.emplace_back(i, i, 1.0);
  SparseMat unit(a_f.rows(), a_f.cols());
  unit.setFromTriplets(t.begin(), t.end());
  a_f = SparseMat(keep * a_f * keep) + unit;
  b_f = b_f * keep;
  c_f = c_f * keep;
  for (int i = 0; i < static_cast<int>(constrained.size()); ++i)
    if (constrained[i]) f[i] = 0.0;
  a_f.prune(0.0);
  b_f.prune(0.0);
  c_f.prune(0.0);
}

/// Symmetry constraints on X and lambda. Constrained X rows become unit rows;
/// constrained lambda rows and columns are removed from C_f and C_s and get a
/// unit diagonal in the (otherwise zero) multiplier block.
inline void apply_solid_constraints(const std::vector<char>& x_constrained,
                                    const std::vector<char>& l_constrained, SparseMat& a_s,
                                    SparseMat& c_f, SparseMat& c_s, Vec& g, Vec& d) {
  const SparseMat keep_x = detail::keep_projector(x_constrained);
  const SparseMat keep_l = detail::keep_projector(l_constrained);
  std::vector<Triplet> t;
  for (int i = 0; i < static_cast<int>(x_constrained.size()); ++i)
    if (x_constrained[i]) t.emplace_back(i, i, 1.0);
  SparseMat unit(a_s.rows(), a_s.cols());
  unit.setFromTriplets(t.begin(), t.end());
  a_s = SparseMat(keep_x * a_s * keep_x) + unit;
  c_f = keep_l * c_f;
  c_s = keep_l * c_s * keep_x;
  for (int i = 0; i < static_cast<int>(x_constrained.size()); ++i)
    if (x_constrained[i]) g[i] = 0.0;
  for (int i = 0; i < static_cast<int>(l_constrained.size()); ++i)
    if (l_constrained[i]) d[i] = 0.0;
  a_s.prune(0.0);
  c_f.prune(0.0);
  c_s.prune(0.0);
}

/// Assembles the block operator for given coefficients, lagged velocity
/// u_bar and solid configuration x_bar. Loads are tested vectors.
inline BlockSystem build_system(const Discretization& disc, const SaddleCoefficients& k,
                                const DiscreteField& u_bar, const DiscreteField& x_bar,
                                Vec f_load, Vec g_load, Vec d_load) {
  require(f_load.size() == disc.n_u() && g_load.size() == disc.n_x() &&
              d_load.size() == disc.n_l(),
          "right-hand side sizes do not match the discretization");
  BlockSystem s;
  s.A_f = k.alpha * disc.mass_u + disc.viscous;
  if (u_bar.coeffs.size() > 0 && u_bar.coeffs.lpNorm<Eigen::Infinity>() > 0.0)
    s.A_f += assemble_convection(u_bar, *disc.velocity, disc.params.rho_f);
  s.A_s = k.beta * disc.mass_x + k.gamma * disc.stiff_x;
  s.B_f = disc.divergence;
  s.C_f = assemble_Cf(*disc.coupling, x_bar);
  s.C_s = disc.pairing;
  s.f = std::move(f_load);
  s.g = std::move(g_load);
  s.d = std::move(d_load);
  s.m = disc.pressure_mean;
  s.u_constrained = disc.velocity->constrained;
  apply_velocity_constraints(s.u_constrained, s.A_f, s.B_f, s.C_f, s.f);
  if (disc.position->n_constrained() + disc.multiplier->n_constrained() > 0) {
    s.x_constrained = disc.position->constrained;
    s.l_constrained = disc.multiplier->constrained;
    apply_solid_constraints(s.x_constrained, s.l_constrained, s.A_s, s.C_f, s.C_s, s.g, s.d);
  }
  return s;
}

/// Field-level variant: f, g, d are coefficient vectors in V_h, S_h, S_h and
/// are tested with (f, v), (g, z)_B and c(mu, d).
inline BlockSystem build_system(const Discretization& disc, const SaddleCoefficients& k,
                                const DiscreteField& u_bar, const DiscreteField& x_bar,
                                const SaddleRhs& rhs) {
  return build_system(disc, k, u_bar, x_bar, disc.mass_u * rhs.f, disc.mass_x * rhs.g,
                      disc.pairing * rhs.d);
}

/// Monolithic matrix of the block system.
inline SparseMat monolithic(const BlockSystem& s) {
  std::vector<Triplet> t;
  auto put = [&t](const SparseMat& a, int r0, int c0, double scale, bool transpose) {
    for (int k = 0; k < a.outerSize(); ++k)
      for (SparseMat::InnerIterator it(a, k); it; ++it) {
        const int r = transpose ? it.col() : it.row();
        const int c = transpose ? it.row() : it.col();
        t.emplace_back(r0 + r, c0 + c, scale * it.value());
      }
  };
  put(s.A_f, 0, 0, 1.0, false);
  put(s.C_f, 0, s.off_l(), 1.0, true);
  put(s.B_f, 0, s.off_p(), -1.0, true);
  put(s.A_s, s.off_x(), s.off_x(), 1.0, false);
  put(s.C_s, s.off_x(), s.off_l(), -1.0, true);
  put(s.C_f, s.off_l(), 0, 1.0, false);
  put(s.C_s, s.off_l(), s.off_x(), -1.0, false);
  put(s.B_f, s.off_p(), 0, -1.0, false);
  for (int i = 0; i < s.n_l(); ++i)
    if (s.l_fixed(i)) t.emplace_back(s.off_l() + i, s.off_l() + i, 1.0);
  for (int i = 0; i < s.n_p(); ++i) {
    t.emplace_back(s.off_p() + i, s.off_r(), s.m[i]);
    t.emplace_back(s.off_r(), s.off_p() + i, s.m[i]);
  }
  return from_triplets(s.size(), s.size(), t);
}

inline Vec system_rhs(const BlockSystem& s) {
  Vec b = Vec::Zero(s.size());
  b.segment(0, s.n_u()) = s.f;
  b.segment(s.off_x(), s.n_x()) = s.g;
  b.segment(s.off_l(), s.n_l()) = s.d;
  return b;
}

/// Block matrix-vector product, independent of the monolithic assembly.
inline Vec apply_operator(const BlockSystem& s, const Vec& v) {
  require(v.size() == s.size(), "vector does not match the block system");
  const auto u = v.segment(0, s.n_u());
  const auto x = v.segment(s.off_x(), s.n_x());
  const auto l = v.segment(s.off_l(), s.n_l());
  const auto p = v.segment(s.off_p(), s.n_p());
  const double r = v[s.off_r()];
  Vec out(s.size());
  out.segment(0, s.n_u()) = s.A_f * u + s.C_f.transpose() * l - s.B_f.transpose() * p;
  out.segment(s.off_x(), s.n_x()) = s.A_s * x - s.C_s.transpose() * l;
  out.segment(s.off_l(), s.n_l()) = s.C_f * u - s.C_s * x;
  for (int i = 0; i < s.n_l(); ++i)
    if (s.l_fixed(i)) out[s.off_l() + i] += l[i];
  out.segment(s.off_p(), s.n_p()) = -(s.B_f * u) + r * s.m;
  out[s.off_r()] = s.m.dot(p);
  return out;
}

struct SaddleSolution {
  Vec u, x, lambda, p;
  double mean_multiplier = 0.0;
  // Recomputed after the solve. Relative values divide by the natural scale
  // |A| |x| + |b| of each block row.
  double algebraic_residual = 0.0;
  double divergence_residual = 0.0;
  double constraint_residual = 0.0;
  double divergence_residual_abs = 0.0;
  double constraint_residual_abs = 0.0;
  double pressure_mean = 0.0;
};

inline Vec pack(const BlockSystem& s, const Vec& u, const Vec& x, const Vec& l, const Vec& p,
                double r = 0.0) {
  Vec v(s.size());
  v << u, x, l, p, r;
  return v;
}

namespace detail {

inline double rel(double num, double scale) { return scale > 0.0 ? num / scale : num; }

}  // namespace detail

/// Residual norms of a candidate solution.
inline void compute_residuals(const BlockSystem& s, SaddleSolution& sol) {
  const Vec v = pack(s, sol.u, sol.x, sol.lambda, sol.p, sol.mean_multiplier);
  const Vec b = system_rhs(s);
  const Vec res = apply_operator(s, v) - b;
  const SparseMat k = monolithic(s);
  const double scale = abs_product(k, v).lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
  sol.algebraic_residual = detail::rel(res.lpNorm<Eigen::Infinity>(), scale);

  sol.divergence_residual_abs = (s.B_f * sol.u).lpNorm<Eigen::Infinity>();
  sol.divergence_residual = detail::rel(sol.divergence_residual_abs,
                                        abs_product(s.B_f, sol.u).lpNorm<Eigen::Infinity>());
  const Vec cres = s.C_f * sol.u - s.C_s * sol.x - s.d;
  sol.constraint_residual_abs = cres.lpNorm<Eigen::Infinity>();
  const double cscale = (abs_product(s.C_f, sol.u) + abs_product(s.C_s, sol.x) +
                         s.d.cwiseAbs())
                            .lpNorm<Eigen::Infinity>();
  sol.constraint_residual = detail::rel(sol.constraint_residual_abs, cscale);
  sol.pressure_mean = s.m.dot(sol.p);
}

/// Direct sparse LU of the monolithic matrix.
inline SaddleSolution solve(const BlockSystem& s) {
  using ColMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  const ColMat k = monolithic(s);
  Eigen::SparseLU<ColMat, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(k);
  lu.factorize(k);
  if (lu.info() != Eigen::Success)
    throw SingularSystem("saddle-point factorization failed: " + lu.lastErrorMessage());
  const Vec b = system_rhs(s);
  const Vec v = lu.solve(b);
  if (lu.info() != Eigen::Success || !v.allFinite())
    throw SingularSystem("saddle-point solve failed");
  SaddleSolution sol;
  sol.u = v.segment(0, s.n_u());
  sol.x = v.segment(s.off_x(), s.n_x());
  sol.lambda = v.segment(s.off_l(), s.n_l());
  sol.p = v.segment(s.off_p(), s.n_p());
  sol.mean_multiplier = v[s.off_r()];
  compute_residuals(s, sol);
  if (!(sol.algebraic_residual <= 1e-6))
    throw SingularSystem("saddle-point system is numerically singular (relative residual " +
                         std::to_string(sol.algebraic_residual) + ")");
  return sol;
}

}  // namespace fdlm
