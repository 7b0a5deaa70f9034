#pragma once

#include "fdlm/core.hpp"
#include "fdlm/fespace.hpp"
#include "fdlm/forms.hpp"
#include "fdlm/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace fdlm {

enum class Scheme { BE_implicit, BE_semi, BDF2 };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::BE_implicit: return "BE_implicit";
    case Scheme::BE_semi: return "BE_semi";
    case Scheme::BDF2: return "BDF2";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "BE_implicit") return Scheme::BE_implicit;
  if (s == "BE_semi") return Scheme::BE_semi;
  if (s == "BDF2") return Scheme::BDF2;
  throw InvalidArgument("unknown scheme '" + s + "'");
}

struct FixedPoint {
  double tol = 1e-10;
  int max_iter = 50;
};

struct SchemeConfig {
  Scheme scheme = Scheme::BE_semi;
  double dt = 0.05;
  double T = 1.0;
  FixedPoint fixed_point;
  // BDF2 only: evaluate convection and coupling at 2u^n - u^{n-1} and
  // 2X^n - X^{n-1} instead of u^n and X^n. Off by default.
  bool bdf2_extrapolate = false;

  void validate() const {
    require(dt > 0.0, "dt must be positive");
    require(T >= dt * (1.0 - 1e-12), "T must be at least dt");
    require(fixed_point.tol > 0.0, "fixed-point tolerance must be positive");
    require(fixed_point.max_iter >= 1, "fixed-point iteration limit must be at least 1");
  }

  int n_steps() const { return static_cast<int>(std::llround(T / dt)); }
};

/// Residuals of the last solve(s) of a step.
struct StepStats {
  double algebraic_residual = 0.0;
  double divergence_residual = 0.0;
  double constraint_residual = 0.0;
  int iterations = 0;
};

/// Time level n of the coupled system. `w` is the solid velocity: the BDF2
/// variable, or (X^n - X^{n-1}) / dt for the backward Euler schemes.
/// `u_prev` and `w_prev` are only meaningful once `has_two_levels` is set.
struct SystemState {
  int n = 0;
  double t = 0.0;
  DiscreteField u, p, x, lambda;
  Vec x_prev;
  Vec u_prev;
  Vec w;
  Vec w_prev;
  bool has_two_levels = false;
  StepStats last;
};

/// X_prev = X0 - dt X1 and w^0 = X1.
inline SystemState initialize(const Discretization& disc, const DiscreteField& u0,
                              const DiscreteField& x0, const DiscreteField& x1,
                              const SchemeConfig& cfg) {
  cfg.validate();
  require(u0.space.get() == disc.velocity.get(), "u0 must live in the velocity space");
  require(x0.space.get() == disc.position.get() && x1.space.get() == disc.position.get(),
          "X0 and X1 must live in the position space");
  for (int i = 0; i < disc.n_u(); ++i)
    require(!disc.velocity->constrained[i] || u0.coeffs[i] == 0.0,
            "u0 must vanish on constrained velocity DOFs");
  SystemState s;
  s.u = u0;
  s.p = DiscreteField(disc.pressure);
  s.x = x0;
  s.lambda = DiscreteField(disc.multiplier);
  s.x_prev = x0.coeffs - cfg.dt * x1.coeffs;
  s.w = x1.coeffs;
  s.u_prev = u0.coeffs;
  s.w_prev = x1.coeffs;
  return s;
}

namespace detail {

inline StepStats stats_of(const SaddleSolution& sol, int iterations) {
  return {sol.algebraic_residual, sol.divergence_residual, sol.constraint_residual, iterations};
}

}  // namespace detail

/// Semi-implicit backward Euler: convection and coupling frozen at u^n, X^n.
inline SystemState step_semi_implicit(const SystemState& s, const Discretization& disc,
                                      const SchemeConfig& cfg) {
  const double dt = cfg.dt;
  const auto k = backward_euler_coefficients(disc.params, dt);
  const auto rhs = backward_euler_rhs(disc.params, dt, s.u.coeffs, s.x.coeffs, s.x_prev);
  const BlockSystem sys = build_system(disc, k, s.u, s.x, rhs);
  const SaddleSolution sol = solve(sys);

  SystemState next;
  next.n = s.n + 1;
  next.t = s.t + dt;
  next.u = DiscreteField(disc.velocity, sol.u);
  next.p = DiscreteField(disc.pressure, sol.p);
  next.x = DiscreteField(disc.position, dt * sol.x);
  next.lambda = DiscreteField(disc.multiplier, sol.lambda);
  next.x_prev = s.x.coeffs;
  next.u_prev = s.u.coeffs;
  next.w = (next.x.coeffs - s.x.coeffs) / dt;
  next.w_prev = s.w;
  next.has_two_levels = true;
  next.last = detail::stats_of(sol, 1);
  return next;
}

/// BDF2 with the solid velocity w as unknown; coupling frozen at X^n and
/// convection at u^n, or at their linear extrapolations when
/// cfg.bdf2_extrapolate is set. A state with a single level is advanced by one
/// semi-implicit backward Euler step.
inline SystemState step_bdf2(const SystemState& s, const Discretization& disc,
                             const SchemeConfig& cfg) {
  if (!s.has_two_levels) return step_semi_implicit(s, disc, cfg);
  const double dt = cfg.dt;
  const PhysParams& ph = disc.params;
  const auto k = bdf2_coefficients(ph, dt);
  const Vec f = disc.mass_u * ((ph.rho_f / (2.0 * dt)) * (4.0 * s.u.coeffs - s.u_prev));
  const Vec x_hist = 4.0 * s.x.coeffs - s.x_prev;
  const Vec g = disc.mass_x * ((ph.delta_rho / (2.0 * dt)) * (4.0 * s.w - s.w_prev)) -
                (ph.kappa / 3.0) * (disc.stiff_x * x_hist);
  const BlockSystem sys =
      cfg.bdf2_extrapolate
          ? build_system(disc, k, DiscreteField(disc.velocity, 2.0 * s.u.coeffs - s.u_prev),
                         DiscreteField(disc.position, 2.0 * s.x.coeffs - s.x_prev), f, g,
                         Vec::Zero(disc.n_l()))
          : build_system(disc, k, s.u, s.x, f, g, Vec::Zero(disc.n_l()));
  const SaddleSolution sol = solve(sys);

  SystemState next;
  next.n = s.n + 1;
  next.t = s.t + dt;
  next.u = DiscreteField(disc.velocity, sol.u);
  next.p = DiscreteField(disc.pressure, sol.p);
  next.x = DiscreteField(disc.position, (2.0 * dt * sol.x + x_hist) / 3.0);
  next.lambda = DiscreteField(disc.multiplier, sol.lambda);
  next.x_prev = s.x.coeffs;
  next.u_prev = s.u.coeffs;
  next.w = sol.x;
  next.w_prev = s.w;
  next.has_two_levels = true;
  next.last = detail::stats_of(sol, 1);
  return next;
}

/// H1 norm of a coefficient vector given its H1 Gram matrix.
inline double h1_norm(const SparseMat& gram, const Vec& v) {
  return std::sqrt(std::max(0.0, v.dot(gram * v)));
}

/// Fully implicit backward Euler solved by Picard iteration: each iterate is a
/// linear saddle solve with coupling at the previous position iterate and
/// convection lagged to the previous velocity iterate.
inline SystemState step_implicit_be(const SystemState& s, const Discretization& disc,
                                    const SchemeConfig& cfg) {
  const double dt = cfg.dt;
  const auto k = backward_euler_coefficients(disc.params, dt);
  const auto rhs = backward_euler_rhs(disc.params, dt, s.u.coeffs, s.x.coeffs, s.x_prev);
  const SparseMat h1_x = disc.mass_x + disc.stiff_x;

  DiscreteField u_it = s.u;
  DiscreteField x_it = s.x;
  double change = 0.0;
  for (int it = 1; it <= cfg.fixed_point.max_iter; ++it) {
    const BlockSystem sys = build_system(disc, k, u_it, x_it, rhs);
    const SaddleSolution sol = solve(sys);
    const Vec x_new = dt * sol.x;
    change = h1_norm(h1_x, x_new - x_it.coeffs) + h1_norm(disc.h1_u, sol.u - u_it.coeffs);
    const double scale = h1_norm(h1_x, x_new) + h1_norm(disc.h1_u, sol.u);
    u_it.coeffs = sol.u;
    x_it.coeffs = x_new;
    if (change <= cfg.fixed_point.tol * std::max(scale, 1e-300)) {
      SystemState next;
      next.n = s.n + 1;
      next.t = s.t + dt;
      next.u = u_it;
      next.p = DiscreteField(disc.pressure, sol.p);
      next.x = x_it;
      next.lambda = DiscreteField(disc.multiplier, sol.lambda);
      next.x_prev = s.x.coeffs;
      next.u_prev = s.u.coeffs;
      next.w = (x_it.coeffs - s.x.coeffs) / dt;
      next.w_prev = s.w;
      next.has_two_levels = true;
      next.last = detail::stats_of(sol, it);
      return next;
    }
    if (!std::isfinite(change)) break;
  }
  throw NoConvergence(cfg.fixed_point.max_iter, change);
}

inline SystemState advance(const SystemState& s, const Discretization& disc,
                           const SchemeConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::BE_semi: return step_semi_implicit(s, disc, cfg);
    case Scheme::BDF2: return step_bdf2(s, disc, cfg);
    case Scheme::BE_implicit: return step_implicit_be(s, disc, cfg);
  }
  throw InvalidArgument("unknown scheme");
}

/// Advances `s` by cfg.n_steps() steps, calling observer(previous, next) after
/// every step.
template <class Observer>
SystemState run_steps(SystemState s, const Discretization& disc, const SchemeConfig& cfg,
                      Observer&& observer) {
  const int steps = cfg.n_steps();
  for (int k = 0; k < steps; ++k) {
    SystemState next = advance(s, disc, cfg);
    observer(s, next);
    s = std::move(next);
  }
  return s;
}

inline SystemState run_steps(SystemState s, const Discretization& disc, const SchemeConfig& cfg) {
  return run_steps(std::move(s), disc, cfg, [](const SystemState&, const SystemState&) {});
}

struct Energy {
  double kinetic_fluid = 0.0;
  double kinetic_solid = 0.0;
  double elastic = 0.0;
  double total = 0.0;
};

/// Pi = (rho_f/2)||u||^2 + (delta_rho/2)||w||^2_B + (kappa/2)||grad X||^2_B.
inline Energy energy(const SystemState& s, const Discretization& disc) {
  const PhysParams& ph = disc.params;
  Energy e;
  e.kinetic_fluid = 0.5 * ph.rho_f * s.u.coeffs.dot(disc.mass_u * s.u.coeffs);
  e.kinetic_solid = 0.5 * ph.delta_rho * s.w.dot(disc.mass_x * s.w);
  e.elastic = 0.5 * ph.kappa * s.x.coeffs.dot(disc.stiff_x * s.x.coeffs);
  e.total = e.kinetic_fluid + e.kinetic_solid + e.elastic;
  return e;
}

/// Left-hand side of the backward Euler stability estimate between two
/// consecutive states: the energy change, the three increment terms and the
/// viscous dissipation. Nonpositive up to solver error (zero for the
/// semi-implicit scheme, where it is an identity).
inline double backward_euler_estimate(const SystemState& s0, const SystemState& s1,
                                      const Discretization& disc, double dt) {
  const PhysParams& ph = disc.params;
  const Energy e0 = energy(s0, disc), e1 = energy(s1, disc);
  auto sq = [](const SparseMat& m, const Vec& v) { return v.dot(m * v); };
  const Vec du = s1.u.coeffs - s0.u.coeffs, dw = s1.w - s0.w, dx = s1.x.coeffs - s0.x.coeffs;
  const double increments = ph.rho_f * sq(disc.mass_u, du) + ph.delta_rho * sq(disc.mass_x, dw) +
                            ph.kappa * sq(disc.stiff_x, dx);
  const double dissipation = s1.u.coeffs.dot(disc.viscous * s1.u.coeffs);
  return (e1.total - e0.total) / dt + increments / (2.0 * dt) + dissipation;
}

namespace detail {

/// ||a||^2 + ||2a - b||^2 - ||b||^2 - ||2b - c||^2 + ||a - 2b + c||^2 in the
/// norm induced by `m`.
inline double shifted_difference(const SparseMat& m, const Vec& a, const Vec& b, const Vec& c) {
  auto sq = [&m](const Vec& v) { return v.dot(m * v); };
  return sq(a) + sq(2.0 * a - b) - sq(b) - sq(2.0 * b - c) + sq(a - 2.0 * b + c);
}

}  // namespace detail

/// Left-hand side of the BDF2 stability estimate for the step s1 -> s2
/// (s0 is the level before s1); nonpositive up to solver error.
inline double bdf2_estimate(const SystemState& s0, const SystemState& s1, const SystemState& s2,
                            const Discretization& disc, double dt) {
  const PhysParams& ph = disc.params;
  const double fluid = detail::shifted_difference(disc.mass_u, s2.u.coeffs, s1.u.coeffs,
                                                  s0.u.coeffs);
  const double solid = detail::shifted_difference(disc.mass_x, s2.w, s1.w, s0.w);
  const double elastic = detail::shifted_difference(disc.stiff_x, s2.x.coeffs, s1.x.coeffs,
                                                    s0.x.coeffs);
  const double dissipation = s2.u.coeffs.dot(disc.viscous * s2.u.coeffs);
  return ph.rho_f / (4.0 * dt) * fluid + dissipation + ph.delta_rho / (4.0 * dt) * solid +
         ph.kappa / (4.0 * dt) * elastic;
}

/// Restart dump: step index, time and every field of the state.
inline void write_state(std::ostream& os, const SystemState& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", s.t);
  os << "state step " << s.n << " t " << buf << " levels " << (s.has_two_levels ? 2 : 1) << '\n';
  write_field(os, "u", s.u.coeffs);
  write_field(os, "p", s.p.coeffs);
  write_field(os, "X", s.x.coeffs);
  write_field(os, "lambda", s.lambda.coeffs);
  write_field(os, "X_prev", s.x_prev);
  write_field(os, "u_prev", s.u_prev);
  write_field(os, "w", s.w);
  write_field(os, "w_prev", s.w_prev);
}

inline SystemState read_state(std::istream& is, const Discretization& disc) {
  std::string kw, k1, k2, k3;
  SystemState s;
  int levels = 1;
  if (!(is >> kw >> k1 >> s.n >> k2 >> s.t >> k3 >> levels) || kw != "state" || k1 != "step" ||
      k2 != "t" || k3 != "levels")
    throw IoError("malformed state header");
  s.has_two_levels = levels == 2;
  s.u = DiscreteField(disc.velocity, read_field(is));
  s.p = DiscreteField(disc.pressure, read_field(is));
  s.x = DiscreteField(disc.position, read_field(is));
  s.lambda = DiscreteField(disc.multiplier, read_field(is));
  s.x_prev = read_field(is);
  s.u_prev = read_field(is);
  s.w = read_field(is);
  s.w_prev = read_field(is);
  return s;
}

}  // namespace fdlm
