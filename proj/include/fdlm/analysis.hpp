#pragma once

#include "fdlm/benchmark.hpp"
#include "fdlm/core.hpp"
#include "fdlm/coupling.hpp"
#include "fdlm/fespace.hpp"
#include "fdlm/forms.hpp"
#include "fdlm/mesh.hpp"
#include "fdlm/saddle.hpp"
#include "fdlm/timestep.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

namespace fdlm {

/// Largest matrix order handed to the dense eigen-solvers.
inline constexpr int kMaxDenseDofs = 6000;

struct InfSupReport {
  double value = 0.0;
  std::vector<double> mesh_sizes;
  std::string configuration;
  double eig_residual = 0.0;
  int dimension = 0;
};

/// An analysis problem is too large for the dense eigen-solvers.
class DenseLimitExceeded : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

namespace detail {

inline void guard_dense(long n, const std::string& what) {
  if (n > kMaxDenseDofs)
    throw DenseLimitExceeded(what + ": " + std::to_string(n) + " unknowns exceed the dense analysis limit of " +
                             std::to_string(kMaxDenseDofs));
}

struct GenEig {
  Vec values;
  DenseMat vectors;
  double residual = 0.0;
};

/// A v = l B v with A symmetric and B symmetric positive definite. The
/// residual is the worst normwise backward error |Av - lBv| / ((|A| + |l||B|)|v|)
/// (Frobenius norms) of the two extremal pairs, which stays meaningful for
/// zero eigenvalues.
inline GenEig generalized_eig(const DenseMat& a, const DenseMat& b) {
  const DenseMat as = 0.5 * (a + a.transpose());
  const DenseMat bs = 0.5 * (b + b.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMat> es(as, bs);
  if (es.info() != Eigen::Success) throw Error("generalized eigenvalue solve did not converge");
  GenEig r{es.eigenvalues(), es.eigenvectors(), 0.0};
  const Eigen::Index n = r.values.size();
  const double na = as.norm(), nb = bs.norm();
  for (Eigen::Index k : {Eigen::Index{0}, n - 1}) {
    if (n == 0) break;
    const Vec v = r.vectors.col(k);
    const double scale = (na + std::abs(r.values[k]) * nb) * v.norm();
    const double res = (as * v - r.values[k] * (bs * v)).norm();
    r.residual = std::max(r.residual, scale > 0.0 ? res / scale : 0.0);
  }
  return r;
}

/// K^{-1} R for a sparse symmetric positive definite K.
inline DenseMat spd_solve(const SparseMat& k, const DenseMat& rhs) {
  using ColMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  Eigen::SimplicialLDLT<ColMat> ldlt(ColMat(k.transpose()));
  if (ldlt.info() != Eigen::Success) throw SingularSystem("Gram matrix is not positive definite");
  return ldlt.solve(rhs);
}

/// Scalar space with the same mesh and family.
inline SpacePtr scalar_companion(const FeSpace& s) {
  return std::make_shared<const FeSpace>(make_space(s.mesh, s.family, 1));
}

/// Continuous P2 on the uniform refinement of a mesh. Used as the discrete
/// stand-in for H1(B) when a sup over all of H1(B) is needed.
inline SpacePtr enriched_space(const std::shared_ptr<const TriMesh>& mesh) {
  auto fine = std::make_shared<const TriMesh>(refine_uniform(mesh));
  return std::make_shared<const FeSpace>(make_space(fine, Family::P2, 1));
}

/// L2 pairing between a scalar space and a scalar space on its refinement.
inline SparseMat cross_mass(const FeSpace& coarse, const FeSpace& fine) {
  const int n1 = coarse.n_local(), n2 = fine.n_local();
  return assemble_form(coarse, fine, *fine.mesh, triangle_rule(4),
                       [&](const QuadPoint& q, const ShapeValues& a, const ShapeValues& b,
                           LocalMatrix& L) {
                         for (int i = 0; i < n1; ++i)
                           for (int j = 0; j < n2; ++j) L(i, j) += q.JxW * a.phi[i] * b.phi[j];
                       });
}

/// Orthonormal basis of the complement of one vector.
inline DenseMat orthogonal_complement(const Vec& m) {
  const Eigen::Index n = m.size();
  const DenseMat mm = m;
  Eigen::HouseholderQR<DenseMat> qr(mm);
  const DenseMat q = qr.householderQ() * DenseMat::Identity(n, n);
  return q.rightCols(n - 1);
}

inline std::vector<int> free_dofs(const FeSpace& s) {
  std::vector<int> f;
  for (int i = 0; i < s.n_dofs(); ++i)
    if (!s.constrained[i]) f.push_back(i);
  return f;
}

inline DenseMat restrict_cols(const DenseMat& a, const std::vector<int>& cols) {
  DenseMat r(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) r.col(j) = a.col(cols[j]);
  return r;
}

inline DenseMat restrict_both(const DenseMat& a, const std::vector<int>& idx) {
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  DenseMat r(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) r(i, j) = a(idx[i], idx[j]);
  return r;
}

inline double mesh_size_of(const FeSpace& s) {
  return s.mesh->parent ? s.mesh->parent->max_diameter() : s.mesh->max_diameter();
}

}  // namespace detail

/// Lambda-side inf-sup constant: zeta^2 is the smallest eigenvalue of
/// C K_S^{-1} C^T w = zeta^2 M_Lambda w, with C the pairing between Lambda_h and
/// S_h and K_S the H1(B) Gram of S_h. M_Lambda is the H1(B) Gram for the H1
/// form; for the L2 form it is the discrete dual norm of H1(B), taken over a
/// richer space (P2 on the refined solid mesh) than S_h.
///
/// All solid-side forms act componentwise, so the constant is computed on the
/// scalar companions of the two spaces.
inline InfSupReport estimate_zeta(const FeSpace& lambda, const FeSpace& position,
                                  CouplingForm form) {
  require(lambda.mesh.get() == position.mesh.get(), "zeta needs spaces on one solid mesh");
  require(lambda.components == position.components, "zeta needs matching components");
  require(polynomial_degree(lambda.family) <= polynomial_degree(position.family),
          "multiplier degree exceeds position degree: dim(S_h) >= dim(Lambda_h) fails");
  const SpacePtr ls = detail::scalar_companion(lambda);
  const SpacePtr ss = detail::scalar_companion(position);
  const SpacePtr rs = form == CouplingForm::C1_L2 ? detail::enriched_space(position.mesh) : nullptr;
  detail::guard_dense(rs ? rs->n_dofs() : ss->n_dofs(), "zeta estimate");

  const DenseMat c(assemble_lambda_product(*ls, *ss, form));
  const DenseMat a = c * detail::spd_solve(assemble_h1_gram(*ss), c.transpose());
  DenseMat m;
  if (form == CouplingForm::C2_H1) {
    m = DenseMat(assemble_h1_gram(*ls));
  } else {
    const DenseMat cr(detail::cross_mass(*ls, *rs));
    m = cr * detail::spd_solve(assemble_h1_gram(*rs), cr.transpose());
  }
  const detail::GenEig eig = detail::generalized_eig(a, m);
  InfSupReport r;
  r.value = std::sqrt(std::max(0.0, eig.values.minCoeff()));
  r.mesh_sizes = {position.mesh->max_diameter()};
  r.configuration = std::string("Lambda=") + to_string(lambda.family) +
                    " S=" + to_string(position.family) + " form=" + to_string(form);
  r.eig_residual = eig.residual;
  r.dimension = static_cast<int>(a.rows());
  return r;
}

/// H1(B) stability constant C_0 of the L2(B) projection onto S_h, i.e. the
/// largest ratio ||P_0 z||_1 / ||z||_1 over the richer space of estimate_zeta.
inline InfSupReport estimate_projection_constant(const FeSpace& position) {
  const SpacePtr ss = detail::scalar_companion(position);
  const SpacePtr rs = detail::enriched_space(position.mesh);
  detail::guard_dense(rs->n_dofs(), "projection constant");
  const DenseMat cr(detail::cross_mass(*ss, *rs));
  const DenseMat p = detail::spd_solve(assemble_mass(*ss), cr);
  const DenseMat t = p.transpose() * DenseMat(assemble_h1_gram(*ss)) * p;
  const detail::GenEig eig = detail::generalized_eig(t, DenseMat(assemble_h1_gram(*rs)));
  InfSupReport r;
  r.value = std::sqrt(std::max(0.0, eig.values.maxCoeff()));
  r.mesh_sizes = {position.mesh->max_diameter()};
  r.configuration = std::string("S=") + to_string(position.family);
  r.eig_residual = eig.residual;
  r.dimension = static_cast<int>(t.rows());
  return r;
}

/// Divergence inf-sup constant of a velocity/pressure pair in the H1 x L2
/// norms, with the constant pressure mode removed.
inline InfSupReport estimate_stokes_infsup(const FeSpace& v, const FeSpace& q) {
  require(v.components == 2 && q.components == 1, "Stokes pair needs (vector, scalar) spaces");
  const std::vector<int> free = detail::free_dofs(v);
  detail::guard_dense(static_cast<long>(free.size()) + q.n_dofs(), "Stokes inf-sup estimate");
  InfSupReport r;
  r.mesh_sizes = {detail::mesh_size_of(v)};
  r.configuration = std::string("V=") + to_string(v.family) + " Q=" + to_string(q.family);
  r.dimension = q.n_dofs() - 1;
  if (free.empty() || q.n_dofs() < 2) return r;

  const DenseMat h = detail::restrict_both(DenseMat(assemble_h1_gram(v)), free);
  const DenseMat b = detail::restrict_cols(DenseMat(assemble_divergence(v, q)), free);
  const DenseMat s = b * h.llt().solve(b.transpose());
  const DenseMat z = detail::orthogonal_complement(basis_integrals(q));
  const DenseMat mq(assemble_mass(q));
  const detail::GenEig eig =
      detail::generalized_eig(z.transpose() * s * z, z.transpose() * mq * z);
  r.value = std::sqrt(std::max(0.0, eig.values.minCoeff()));
  r.eig_residual = eig.residual;
  return r;
}

struct KernelCoercivity {
  double alpha1 = 0.0;
  int kernel_dimension = 0;
  double eig_residual = 0.0;
};

/// Smallest Rayleigh quotient of diag(A_f, A_s) over the discrete kernel
/// {(v, z): B_f v = 0, C_f v - C_s z = 0} in the H1(Omega) x H1(B) norm.
/// A_f is symmetrized (the convection part is skew and drops out).
inline KernelCoercivity kernel_coercivity(const BlockSystem& s, const SparseMat& h1_u,
                                          const SparseMat& h1_x) {
  std::vector<int> free, free_x;
  for (int i = 0; i < s.n_u(); ++i)
    if (!s.u_constrained[i]) free.push_back(i);
  for (int i = 0; i < s.n_x(); ++i)
    if (s.x_constrained.empty() || !s.x_constrained[i]) free_x.push_back(i);
  const int nf = static_cast<int>(free.size()), nx = static_cast<int>(free_x.size());
  detail::guard_dense(nf + nx, "kernel coercivity");

  DenseMat con = DenseMat::Zero(s.n_p() + s.n_l(), nf + nx);
  con.topLeftCorner(s.n_p(), nf) = detail::restrict_cols(DenseMat(s.B_f), free);
  con.bottomLeftCorner(s.n_l(), nf) = detail::restrict_cols(DenseMat(s.C_f), free);
  con.bottomRightCorner(s.n_l(), nx) = -detail::restrict_cols(DenseMat(s.C_s), free_x);

  // Null space from a rank-revealing QR of the transpose.
  Eigen::ColPivHouseholderQR<DenseMat> qr(con.transpose());
  qr.setThreshold(1e-12);
  const Eigen::Index n = nf + nx, rank = qr.rank();
  const DenseMat q = qr.householderQ() * DenseMat::Identity(n, n);
  const DenseMat kern = q.rightCols(n - rank);

  DenseMat a = DenseMat::Zero(n, n), g = DenseMat::Zero(n, n);
  const DenseMat af(s.A_f);
  a.topLeftCorner(nf, nf) = detail::restrict_both(0.5 * (af + af.transpose()), free);
  a.bottomRightCorner(nx, nx) = detail::restrict_both(DenseMat(s.A_s), free_x);
  g.topLeftCorner(nf, nf) = detail::restrict_both(DenseMat(h1_u), free);
  g.bottomRightCorner(nx, nx) = detail::restrict_both(DenseMat(h1_x), free_x);

  KernelCoercivity r;
  r.kernel_dimension = static_cast<int>(kern.cols());
  if (kern.cols() == 0) return r;
  const detail::GenEig eig =
      detail::generalized_eig(kern.transpose() * a * kern, kern.transpose() * g * kern);
  r.alpha1 = eig.values.minCoeff();
  r.eig_residual = eig.residual;
  return r;
}

/// Observed order between two levels: log(e1/e2) / log(p1/p2).
inline double convergence_rate(double e1, double e2, double p1, double p2) {
  return std::log(e1 / e2) / std::log(p1 / p2);
}

/// Errors per refinement level with rates between adjacent rows.
struct RateTable {
  std::string param_name = "h";
  std::vector<std::string> columns;
  std::vector<double> params;
  std::vector<std::vector<double>> errors;

  int rows() const { return static_cast<int>(params.size()); }

  void add_row(double param, std::vector<double> e) {
    require(e.size() == columns.size(), "rate table row has the wrong number of errors");
    params.push_back(param);
    errors.push_back(std::move(e));
  }

  int column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    require(it != columns.end(), "unknown rate table column '" + name + "'");
    return static_cast<int>(it - columns.begin());
  }

  /// Rate between row-1 and row; NaN for the first row.
  double rate(int row, int col) const {
    if (row <= 0) return std::numeric_limits<double>::quiet_NaN();
    return convergence_rate(errors[row - 1][col], errors[row][col], params[row - 1], params[row]);
  }

  double rate(int row, const std::string& name) const { return rate(row, column(name)); }

  void write_csv(std::ostream& os) const {
    os << param_name;
    for (const auto& c : columns) os << ',' << c << ",rate_" << c;
    os << '\n';
    char buf[64];
    for (int r = 0; r < rows(); ++r) {
      std::snprintf(buf, sizeof buf, "%.16e", params[r]);
      os << buf;
      for (size_t c = 0; c < columns.size(); ++c) {
        std::snprintf(buf, sizeof buf, "%.16e", errors[r][c]);
        os << ',' << buf << ',';
        if (r > 0) {
          std::snprintf(buf, sizeof buf, "%.16e", rate(r, static_cast<int>(c)));
          os << buf;
        }
      }
      os << '\n';
    }
  }

  void write_text(std::ostream& os) const {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-12s", param_name.c_str());
    os << buf;
    for (const auto& c : columns) {
      std::snprintf(buf, sizeof buf, " | %-12s %6s", c.c_str(), "rate");
      os << buf;
    }
    os << '\n';
    for (int r = 0; r < rows(); ++r) {
      std::snprintf(buf, sizeof buf, "%-12.6g", params[r]);
      os << buf;
      for (size_t c = 0; c < columns.size(); ++c) {
        if (r > 0)
          std::snprintf(buf, sizeof buf, " | %-12.3e %6.2f", errors[r][c], rate(r, static_cast<int>(c)));
        else
          std::snprintf(buf, sizeof buf, " | %-12.3e %6s", errors[r][c], "");
        os << buf;
      }
      os << '\n';
    }
  }
};

// ---------------------------------------------------------------------------
// Spatial convergence on a manufactured stationary problem.

enum class ManufacturedMode { Solve, InterpolantOnly, ZeroSolution };

struct SpatialOptions {
  int coarsest_cells = 4;  // must be a multiple of 4
  int levels = 4;
  VelocityElement velocity = VelocityElement::P1isoP2;
  PressureElement pressure = PressureElement::BPenhanced;
  int solid_degree = 1;
  int multiplier_degree = 1;
  SaddleCoefficients coefficients{1.0, 1.0, 1.0};
  double nu = 1.0;
  ManufacturedMode mode = ManufacturedMode::Solve;

  void validate() const {
    require(coarsest_cells >= 4 && coarsest_cells % 4 == 0, "coarsest_cells must be a multiple of 4");
    require(levels >= 1 && levels <= 6, "levels must be between 1 and 6");
    require(nu > 0.0 && coefficients.gamma > 0.0 && coefficients.alpha >= 0.0 &&
                coefficients.beta >= 0.0,
            "manufactured coefficients out of range");
  }
};

/// Smooth solution of the stationary problem on the unit square with a
/// rectangular solid [0.2, 0.7] x [0.3, 0.55] and X_bar the identity. The
/// velocity is the curl of (sin(pi x) sin(pi y))^2, so it is solenoidal and
/// vanishes on the boundary.
struct ManufacturedSolution {
  double amplitude = 1.0;

  Eigen::Vector2d u(const Point2& x) const {
    const double pi = std::numbers::pi;
    const double s = std::sin(pi * x.x()) * std::sin(pi * x.y());
    const double sx = pi * std::cos(pi * x.x()) * std::sin(pi * x.y());
    const double sy = pi * std::sin(pi * x.x()) * std::cos(pi * x.y());
    return amplitude * Eigen::Vector2d(2.0 * s * sy, -2.0 * s * sx);
  }

  Eigen::Matrix2d grad_u(const Point2& x) const {
    const double pi = std::numbers::pi;
    const double s = std::sin(pi * x.x()) * std::sin(pi * x.y());
    const double sx = pi * std::cos(pi * x.x()) * std::sin(pi * x.y());
    const double sy = pi * std::sin(pi * x.x()) * std::cos(pi * x.y());
    const double sxy = pi * pi * std::cos(pi * x.x()) * std::cos(pi * x.y());
    const double sxx = -pi * pi * s, syy = -pi * pi * s;
    Eigen::Matrix2d g;
    g << 2.0 * (sx * sy + s * sxy), 2.0 * (sy * sy + s * syy),
        -2.0 * (sx * sx + s * sxx), -2.0 * (sx * sy + s * sxy);
    return amplitude * g;
  }

  double p(const Point2& x) const {
    const double pi = std::numbers::pi;
    return amplitude * std::cos(pi * x.x()) * std::cos(pi * x.y());
  }

  Eigen::Vector2d x(const Point2& s) const {
    const double pi = std::numbers::pi;
    return amplitude * (s + 0.05 * Eigen::Vector2d(std::sin(pi * s.x()) * std::sin(pi * s.y()),
                                                   s.x() * s.y()));
  }

  Eigen::Matrix2d grad_x(const Point2& s) const {
    const double pi = std::numbers::pi;
    Eigen::Matrix2d g;
    g << 1.0 + 0.05 * pi * std::cos(pi * s.x()) * std::sin(pi * s.y()),
        0.05 * pi * std::sin(pi * s.x()) * std::cos(pi * s.y()), 0.05 * s.y(), 1.0 + 0.05 * s.x();
    return amplitude * g;
  }

  Eigen::Vector2d lambda(const Point2& s) const {
    return amplitude * Eigen::Vector2d(std::cos(s.x() + s.y()), s.x() * s.x() - s.y());
  }
};

struct FieldError {
  double l2 = 0.0;
  double h1 = 0.0;  // full H1 norm of the error
};

/// Error of a discrete field against an exact function, by quadrature on the
/// field's mesh. For scalar spaces only the first component is used.
template <class Value, class Grad>
FieldError field_error(const FeSpace& s, const Vec& coeffs, Value&& value, Grad&& grad,
                       const QuadRule& rule = triangle_rule(6)) {
  const TriMesh& m = *s.mesh;
  double l2 = 0.0, semi = 0.0;
  for (int t = 0; t < m.n_tris(); ++t)
    for (int q = 0; q < rule.size(); ++q) {
      const Bary& b = rule.points[q];
      const Point2 x = from_barycentric(m, t, b);
      const FieldValue fv = eval_on_cell(s, coeffs, t, b);
      const double w = rule.weights[q] * m.area(t);
      const Eigen::Vector2d ev = value(x);
      const Eigen::Matrix2d eg = grad(x);
      for (int c = 0; c < s.components; ++c) {
        l2 += w * std::pow(fv.value[c] - ev[c], 2);
        semi += w * (fv.grad.row(c) - eg.row(c)).squaredNorm();
      }
    }
  return {std::sqrt(l2), std::sqrt(l2 + semi)};
}

namespace detail {

inline Vec manufactured_fluid_load(const Discretization& d, const ManufacturedSolution& ex,
                                   const SaddleCoefficients& k, double nu) {
  const FeSpace& v = *d.velocity;
  const TriMesh& m = *v.mesh;
  const QuadRule& rule = triangle_rule(6);
  Vec f = Vec::Zero(v.n_dofs());
  for (int t = 0; t < m.n_tris(); ++t) {
    const auto& dofs = v.cell_dofs[t];
    for (int q = 0; q < rule.size(); ++q) {
      const Point2 x = from_barycentric(m, t, rule.points[q]);
      const ShapeValues sv = shape_functions(v.basis_family(), m, t, rule.points[q]);
      const Eigen::Vector2d u = ex.u(x);
      const Eigen::Matrix2d gu = ex.grad_u(x);
      const Eigen::Matrix2d eps = 0.5 * (gu + gu.transpose());
      const double p = ex.p(x);
      const double w = rule.weights[q] * m.area(t);
      for (int i = 0; i < sv.n; ++i) {
        if (dofs[i] < 0) continue;
        for (int c = 0; c < 2; ++c) {
          const double val = k.alpha * u[c] * sv.phi[i] + nu * eps.row(c).dot(sv.grad[i]) -
                             p * sv.grad[i][c];
          f[v.dof(c, dofs[i])] += w * val;
        }
      }
    }
  }
  return f;
}

// Rows of the solid equation (kind 0) or of the constraint (kind 1) tested
// against `test` on the solid mesh.
inline Vec manufactured_solid_load(const FeSpace& test, const ManufacturedSolution& ex,
                                   const SaddleCoefficients& k, int kind) {
  const TriMesh& m = *test.mesh;
  const QuadRule& rule = triangle_rule(6);
  Vec g = Vec::Zero(test.n_dofs());
  for (int t = 0; t < m.n_tris(); ++t) {
    const auto& dofs = test.cell_dofs[t];
    for (int q = 0; q < rule.size(); ++q) {
      const Point2 s = from_barycentric(m, t, rule.points[q]);
      const ShapeValues sv = shape_functions(test.basis_family(), m, t, rule.points[q]);
      const double w = rule.weights[q] * m.area(t);
      const Eigen::Vector2d x = ex.x(s), l = ex.lambda(s);
      const Eigen::Matrix2d gx = ex.grad_x(s);
      // X_bar is the identity, so u(X_bar(s)) = u(s).
      const Eigen::Vector2d slip = ex.u(s) - x;
      for (int i = 0; i < sv.n; ++i) {
        if (dofs[i] < 0) continue;
        for (int c = 0; c < 2; ++c) {
          const double val = kind == 0 ? k.beta * x[c] * sv.phi[i] +
                                             k.gamma * gx.row(c).dot(sv.grad[i]) -
                                             l[c] * sv.phi[i]
                                       : slip[c] * sv.phi[i];
          g[test.dof(c, dofs[i])] += w * val;
        }
      }
    }
  }
  return g;
}

}  // namespace detail

/// Convergence of the stationary saddle-point problem under uniform
/// refinement. Columns: u_L2, u_H1, p_L2, X_L2, X_H1; parameter h = 1/n.
inline RateTable spatial_convergence(const SpatialOptions& opt) {
  opt.validate();
  ManufacturedSolution ex;
  ex.amplitude = opt.mode == ManufacturedMode::ZeroSolution ? 0.0 : 1.0;
  RateTable table;
  table.columns = {"u_L2", "u_H1", "p_L2", "X_L2", "X_H1"};
  for (int level = 0; level < opt.levels; ++level) {
    const int n = opt.coarsest_cells << level;
    auto fluid = std::make_shared<const TriMesh>(
        build_square_mesh(n, {0.0, 1.0}, RectangleTags::all(BoundaryTag::OuterWall)));
    auto solid = std::make_shared<const TriMesh>(
        build_rectangle_mesh(n / 2, n / 4, {0.2, 0.7}, {0.3, 0.55}, RectangleTags::all(BoundaryTag::Free)));
    auto v = std::make_shared<const FeSpace>(make_velocity_space(fluid, opt.velocity));
    auto q = std::make_shared<const FeSpace>(make_pressure_space(fluid, opt.pressure));
    SolidSpaces ss = make_solid_spaces(solid, opt.solid_degree, opt.multiplier_degree);
    PhysParams params;
    params.nu_f = opt.nu;
    const Discretization d = Discretization::create(
        params, v, q, std::make_shared<const FeSpace>(std::move(ss.position)),
        std::make_shared<const FeSpace>(std::move(ss.multiplier)), CouplingForm::C1_L2);
    const DiscreteField x_bar(d.position, interpolate(*d.position, [](const Point2& s) { return Eigen::Vector2d(s); }));

    Vec u_h, p_h, x_h;
    if (opt.mode == ManufacturedMode::InterpolantOnly) {
      u_h = interpolate(*d.velocity, [&](const Point2& x) { return ex.u(x); });
      p_h = interpolate_scalar(*d.pressure, [&](const Point2& x) { return ex.p(x); });
      x_h = interpolate(*d.position, [&](const Point2& s) { return ex.x(s); });
    } else {
      const SaddleCoefficients& k = opt.coefficients;
      Vec f = detail::manufactured_fluid_load(d, ex, k, opt.nu) +
              assemble_coupling_load(*d.coupling, x_bar, [&](const Point2& s) { return ex.lambda(s); });
      Vec g = detail::manufactured_solid_load(*d.position, ex, k, 0);
      Vec dl = detail::manufactured_solid_load(*d.multiplier, ex, k, 1);
      const BlockSystem sys = build_system(d, k, DiscreteField(d.velocity), x_bar, std::move(f),
                                           std::move(g), std::move(dl));
      const SaddleSolution sol = solve(sys);
      u_h = sol.u;
      p_h = sol.p;
      x_h = sol.x;
    }
    const FieldError eu = field_error(*d.velocity, u_h, [&](const Point2& x) { return ex.u(x); },
                                      [&](const Point2& x) { return ex.grad_u(x); });
    const FieldError ep = field_error(
        *d.pressure, p_h, [&](const Point2& x) { return Eigen::Vector2d(ex.p(x), 0.0); },
        [](const Point2&) { return Eigen::Matrix2d::Zero().eval(); });
    const FieldError exx = field_error(*d.position, x_h, [&](const Point2& s) { return ex.x(s); },
                                       [&](const Point2& s) { return ex.grad_x(s); });
    table.add_row(1.0 / n, {eu.l2, eu.h1, ep.l2, exx.l2, exx.h1});
  }
  return table;
}

// ---------------------------------------------------------------------------
// Temporal convergence on the ring benchmark.

struct TemporalOptions {
  PhysParams params;
  MeshSpec mesh;
  RingGeometry ring;
  double T = 1.0;
  std::vector<double> dts = {0.05, 0.025, 0.0125, 0.00625};
  std::vector<Scheme> schemes = {Scheme::BE_semi, Scheme::BDF2};
  int reference_factor = 8;
  Scheme reference_scheme = Scheme::BDF2;
  bool bdf2_extrapolate = false;  // applies to the reference run as well

  void validate() const {
    params.validate();
    mesh.validate();
    require(T > 0.0, "T must be positive");
    require(!dts.empty() && !schemes.empty(), "temporal study needs time steps and schemes");
    for (double dt : dts) require(dt > 0.0 && dt <= T, "time steps must lie in (0, T]");
    require(reference_factor >= 1, "reference_factor must be at least 1");
  }
};

/// Equal densities, nu = 0.1, kappa = 10, T = 1; fluid 16 cells on (0,1) and
/// solid mesh size 1/16.
inline TemporalOptions equal_density_options() {
  TemporalOptions o;
  o.params.rho_f = 1.0;
  o.params.delta_rho = 0.0;
  o.params.nu_f = 0.1;
  o.params.kappa = 10.0;
  o.mesh.fluid_cells = 16;
  o.mesh.solid_h = 1.0 / 16.0;
  return o;
}

struct SolveMonitor {
  double max_algebraic = 0.0;
  double max_divergence = 0.0;
  double max_constraint = 0.0;
  long solves = 0;

  void record(const StepStats& s) {
    max_algebraic = std::max(max_algebraic, s.algebraic_residual);
    max_divergence = std::max(max_divergence, s.divergence_residual);
    max_constraint = std::max(max_constraint, s.constraint_residual);
    solves += s.iterations;
  }
};

struct TemporalResult {
  RateTable table;
  SolveMonitor monitor;
};

/// L2(Omega) error of u and L2(B) error of X at time T against a reference
/// run with dt_ref = min(dts) / reference_factor. Columns <scheme>_u_L2 and
/// <scheme>_X_L2 per scheme. `progress(label)` is called before every run.
template <class Progress>
TemporalResult temporal_convergence(const TemporalOptions& opt, Progress&& progress) {
  opt.validate();
  const Discretization d = make_ring_discretization(opt.params, opt.mesh, opt.ring);
  TemporalResult out;
  auto run = [&](Scheme scheme, double dt) {
    SchemeConfig cfg;
    cfg.scheme = scheme;
    cfg.dt = dt;
    cfg.T = opt.T;
    cfg.bdf2_extrapolate = opt.bdf2_extrapolate;
    require(std::abs(cfg.n_steps() * dt - opt.T) <= 1e-9 * opt.T, "T must be a multiple of every dt");
    return run_steps(ring_initial_state(d, cfg, opt.ring), d, cfg,
                     [&](const SystemState&, const SystemState& next) { out.monitor.record(next.last); });
  };
  const double dt_ref = *std::min_element(opt.dts.begin(), opt.dts.end()) / opt.reference_factor;
  progress(std::string("reference ") + to_string(opt.reference_scheme));
  const SystemState ref = run(opt.reference_scheme, dt_ref);

  out.table.param_name = "dt";
  for (Scheme s : opt.schemes) {
    out.table.columns.push_back(std::string(to_string(s)) + "_u_L2");
    out.table.columns.push_back(std::string(to_string(s)) + "_X_L2");
  }
  for (double dt : opt.dts) {
    std::vector<double> row;
    for (Scheme s : opt.schemes) {
      char label[64];
      std::snprintf(label, sizeof label, "%s dt=%g", to_string(s), dt);
      progress(std::string(label));
      const SystemState st = run(s, dt);
      const Vec eu = st.u.coeffs - ref.u.coeffs;
      const Vec ex = st.x.coeffs - ref.x.coeffs;
      row.push_back(std::sqrt(eu.dot(d.mass_u * eu)));
      row.push_back(std::sqrt(ex.dot(d.mass_x * ex)));
    }
    out.table.add_row(dt, std::move(row));
  }
  return out;
}

inline TemporalResult temporal_convergence(const TemporalOptions& opt) {
  return temporal_convergence(opt, [](const std::string&) {});
}

}  // namespace fdlm
