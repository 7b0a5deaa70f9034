#include "fdlm/analysis.hpp"
#include "fdlm/benchmark.hpp"
#include "fdlm/timestep.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace fdlm;

namespace {

PhysParams ring_params(double delta_rho = 0.5) {
  PhysParams p;
  p.rho_f = 1.0;
  p.delta_rho = delta_rho;
  p.nu_f = 0.1;
  p.kappa = 10.0;
  return p;
}

Discretization small_ring(const PhysParams& p) {
  MeshSpec spec;
  spec.fluid_cells = 8;
  spec.solid_h = 0.125;
  return make_ring_discretization(p, spec);
}

SchemeConfig config(Scheme s, double dt, double T) {
  SchemeConfig c;
  c.scheme = s;
  c.dt = dt;
  c.T = T;
  return c;
}

}  // namespace

TEST(Scheme, NamesRoundTrip) {
  for (Scheme s : {Scheme::BE_implicit, Scheme::BE_semi, Scheme::BDF2})
    EXPECT_EQ(scheme_from_string(to_string(s)), s);
  EXPECT_THROW(scheme_from_string("CN"), InvalidArgument);
  EXPECT_EQ(config(Scheme::BDF2, 0.1, 2.0).n_steps(), 20);
  EXPECT_THROW(config(Scheme::BDF2, 0.0, 1.0).validate(), InvalidArgument);
  EXPECT_THROW(config(Scheme::BDF2, 0.5, 0.1).validate(), InvalidArgument);
}

TEST(Timestep, InitialEnergyIsElastic) {
  const Discretization d = small_ring(ring_params());
  const SystemState s = ring_initial_state(d, config(Scheme::BE_semi, 0.1, 1.0));
  const Energy e = energy(s, d);
  EXPECT_EQ(e.kinetic_fluid, 0.0);
  EXPECT_EQ(e.kinetic_solid, 0.0);
  EXPECT_GT(e.elastic, 0.0);
  EXPECT_DOUBLE_EQ(e.total, e.elastic);
}

// The semi-implicit step moves the solid with the fluid velocity evaluated at
// the old position: C_s (X^{n+1} - X^n) / dt = C_f(X^n) u^{n+1}.
TEST(Timestep, SemiImplicitStepTransportsSolid) {
  const Discretization d = small_ring(ring_params());
  const double dt = 0.05;
  const SystemState s0 = ring_initial_state(d, config(Scheme::BE_semi, dt, 1.0));
  const SystemState s1 = advance(s0, d, config(Scheme::BE_semi, dt, 1.0));
  const SystemState s2 = advance(s1, d, config(Scheme::BE_semi, dt, 1.0));
  const SparseMat cf = assemble_Cf(*d.coupling, s1.x);
  Vec lhs = d.pairing * (s2.x.coeffs - s1.x.coeffs) / dt;
  Vec rhs = cf * s2.u.coeffs;
  // Rows of multipliers fixed by symmetry are not part of the constraint.
  for (int i = 0; i < d.n_l(); ++i)
    if (d.multiplier->constrained[i]) lhs[i] = rhs[i] = 0.0;
  EXPECT_LE((lhs - rhs).lpNorm<Eigen::Infinity>(), 1e-10 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()));
  EXPECT_LE(s2.last.divergence_residual, 1e-10);
  EXPECT_LE(s2.last.constraint_residual, 1e-10);
}

TEST(Timestep, BackwardEulerDissipates) {
  const Discretization d = small_ring(ring_params());
  const SchemeConfig cfg = config(Scheme::BE_semi, 0.1, 1.0);
  const SystemState s0 = ring_initial_state(d, cfg);
  const double pi0 = energy(s0, d).total;
  run_steps(s0, d, cfg, [&](const SystemState& a, const SystemState& b) {
    EXPECT_LE(energy(b, d).total, energy(a, d).total + 1e-8 * pi0) << "step " << b.n;
    EXPECT_LE(backward_euler_estimate(a, b, d, cfg.dt), 1e-8 * pi0) << "step " << b.n;
  });
}

TEST(Timestep, Bdf2EstimateHolds) {
  const Discretization d = small_ring(ring_params());
  const SchemeConfig cfg = config(Scheme::BDF2, 0.1, 1.0);
  std::vector<SystemState> hist{ring_initial_state(d, cfg)};
  const double pi0 = energy(hist[0], d).total;
  run_steps(hist[0], d, cfg, [&](const SystemState&, const SystemState& b) { hist.push_back(b); });
  ASSERT_EQ(hist.size(), 11u);
  for (size_t k = 2; k < hist.size(); ++k)
    EXPECT_LE(bdf2_estimate(hist[k - 2], hist[k - 1], hist[k], d, cfg.dt), 1e-8 * pi0) << "step " << k;
}

// A solid collapsed to a point carries no elastic energy and the fluid is at
// rest, so every scheme keeps the state and Picard stops after one solve. The
// symmetry constraints leave the origin as the only admissible point.
TEST(Timestep, CollapsedSolidAtRestStaysAtRest) {
  const Discretization d = small_ring(ring_params());
  const DiscreteField u0(d.velocity);
  const DiscreteField x0(d.position, interpolate(*d.position, [](const Point2&) {
                           return Eigen::Vector2d(0.0, 0.0);
                         }));
  const DiscreteField x1(d.position);
  for (Scheme sc : {Scheme::BE_implicit, Scheme::BE_semi, Scheme::BDF2}) {
    const SchemeConfig cfg = config(sc, 0.1, 0.3);
    const SystemState end = run_steps(initialize(d, u0, x0, x1, cfg), d, cfg,
                                      [&](const SystemState&, const SystemState& b) {
                                        EXPECT_EQ(b.last.iterations, 1) << to_string(sc);
                                      });
    EXPECT_LE(end.u.coeffs.lpNorm<Eigen::Infinity>(), 1e-13) << to_string(sc);
    EXPECT_LE((end.x.coeffs - x0.coeffs).lpNorm<Eigen::Infinity>(), 1e-13) << to_string(sc);
  }
}

TEST(Timestep, RestartReproducesContinuousRun) {
  const Discretization d = small_ring(ring_params());
  const SchemeConfig cfg = config(Scheme::BDF2, 0.1, 0.5);
  const SystemState s0 = ring_initial_state(d, cfg);
  const SystemState straight = run_steps(s0, d, cfg);

  SchemeConfig first = cfg;
  first.T = 0.2;
  std::stringstream dump;
  write_state(dump, run_steps(s0, d, first));
  SchemeConfig rest = cfg;
  rest.T = 0.3;
  const SystemState resumed = run_steps(read_state(dump, d), d, rest);
  EXPECT_EQ(resumed.n, straight.n);
  EXPECT_NEAR(resumed.t, straight.t, 1e-14);
  EXPECT_EQ(resumed.u.coeffs, straight.u.coeffs);
  EXPECT_EQ(resumed.x.coeffs, straight.x.coeffs);
}

TEST(Timestep, TruncatedStateIsRejected) {
  const Discretization d = small_ring(ring_params());
  std::stringstream dump("state step 3 t 0.3 levels 2\nfield u ndofs 2\n1\n");
  EXPECT_THROW(read_state(dump, d), IoError);
}

// The implicit and semi-implicit steps differ only through the position at
// which the coupling is evaluated. That is an O(dt) change of the constraint,
// so the new positions differ by O(dt^2) up to the kinks of the piecewise
// linear velocity, which the solid points cross; check for clearly better
// than first order.
TEST(Timestep, ImplicitAndSemiImplicitAgreeToSecondOrderPerStep) {
  const Discretization d = small_ring(ring_params());
  // A moving state so the convection term is active.
  const SchemeConfig warm = config(Scheme::BE_semi, 0.01, 0.1);
  const SystemState s = run_steps(ring_initial_state(d, warm), d, warm);
  std::vector<double> diff;
  for (double dt : {0.02, 0.01, 0.005}) {
    const SystemState a = advance(s, d, config(Scheme::BE_semi, dt, 1.0));
    const SystemState b = advance(s, d, config(Scheme::BE_implicit, dt, 1.0));
    diff.push_back(h1_norm(d.mass_x + d.stiff_x, a.x.coeffs - b.x.coeffs));
  }
  EXPECT_GT(std::log2(diff[0] / diff[1]), 1.5);
  EXPECT_GT(std::log2(diff[1] / diff[2]), 1.5);
}

TEST(Timestep, PicardFailureIsReported) {
  const Discretization d = small_ring(ring_params());
  SchemeConfig cfg = config(Scheme::BE_implicit, 0.1, 0.1);
  cfg.fixed_point.max_iter = 1;
  cfg.fixed_point.tol = 1e-15;
  const SystemState s0 = ring_initial_state(d, cfg);
  EXPECT_THROW(advance(s0, d, cfg), NoConvergence);
}

// With convection and geometry extrapolated, BDF2 converges at second order
// against a fine reference on a mildly stretched ring.
TEST(Timestep, ExtrapolatedBdf2IsSecondOrder) {
  TemporalOptions o = equal_density_options();
  o.mesh.fluid_cells = 4;
  o.mesh.solid_h = 0.25;
  o.ring.stretch = 1.05;
  o.T = 0.08;
  o.dts = {0.01, 0.005, 0.0025};
  o.schemes = {Scheme::BDF2};
  o.reference_factor = 8;
  o.bdf2_extrapolate = true;
  const TemporalResult r = temporal_convergence(o);
  EXPECT_GE(r.table.rate(2, "BDF2_u_L2"), 1.7);
  EXPECT_GE(r.table.rate(2, "BDF2_X_L2"), 1.7);
  EXPECT_LE(r.monitor.max_divergence, 1e-10);
}
