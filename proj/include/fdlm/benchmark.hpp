#pragma once

#include "fdlm/core.hpp"
#include "fdlm/fespace.hpp"
#include "fdlm/forms.hpp"
#include "fdlm/mesh.hpp"
#include "fdlm/saddle.hpp"
#include "fdlm/timestep.hpp"

#include <memory>

namespace fdlm {

/// Elastic ring in a square container, computed on the quarter (0,1)^2 with
/// symmetry conditions on x = 0 and y = 0. The reference ring is the quarter
/// annulus r_in < |s| < r_out; the initial position stretches it by `stretch`
/// vertically and shrinks it by the same factor horizontally.
struct RingGeometry {
  double r_in = 0.3;
  double r_out = 0.5;
  double stretch = 1.4;
};

struct MeshSpec {
  int fluid_cells = 8;   // cells per side of the coarse (pressure) mesh on (0,1)
  double solid_h = 0.125;
  VelocityElement velocity = VelocityElement::P1isoP2;
  PressureElement pressure = PressureElement::BPenhanced;
  int solid_degree = 1;
  int multiplier_degree = 1;
  CouplingForm form = CouplingForm::C1_L2;
  int coupling_quad_degree = 4;

  void validate() const {
    require(fluid_cells >= 1, "fluid_cells must be at least 1");
    require(solid_h > 0.0, "solid mesh size must be positive");
    require(solid_degree == 1 || solid_degree == 2, "solid position degree must be 1 or 2");
    require(multiplier_degree >= 1 && multiplier_degree <= solid_degree,
            "multiplier degree must be between 1 and the position degree");
    require(coupling_quad_degree >= 1, "coupling quadrature degree must be at least 1");
  }
};

inline Discretization make_ring_discretization(const PhysParams& params, const MeshSpec& spec,
                                               const RingGeometry& ring = {}) {
  spec.validate();
  require(ring.r_in > 0.0 && ring.r_out > ring.r_in, "ring radii must satisfy 0 < r_in < r_out");
  require(ring.stretch > 0.0, "stretch must be positive");
  require(ring.r_out * std::max(ring.stretch, 1.0 / ring.stretch) < 1.0,
          "stretched ring does not fit in the container");
  auto fluid = std::make_shared<const TriMesh>(
      build_square_mesh(spec.fluid_cells, {0.0, 1.0}, RectangleTags::quarter()));
  auto solid = std::make_shared<const TriMesh>(
      build_quarter_annulus_for_meshsize(spec.solid_h, ring.r_in, ring.r_out));
  auto velocity = std::make_shared<const FeSpace>(make_velocity_space(fluid, spec.velocity));
  auto pressure = std::make_shared<const FeSpace>(make_pressure_space(fluid, spec.pressure));
  SolidSpaces ss = make_solid_spaces(solid, spec.solid_degree, spec.multiplier_degree);
  return Discretization::create(params, velocity, pressure,
                                std::make_shared<const FeSpace>(std::move(ss.position)),
                                std::make_shared<const FeSpace>(std::move(ss.multiplier)),
                                spec.form, spec.coupling_quad_degree);
}

struct InitialData {
  DiscreteField u0, x0, x1;
};

/// Fluid at rest, solid stretched and at rest.
inline InitialData ring_initial_data(const Discretization& disc, const RingGeometry& ring = {}) {
  const double k = ring.stretch;
  InitialData d;
  d.u0 = DiscreteField(disc.velocity);
  d.x0 = DiscreteField(disc.position, interpolate(*disc.position, [k](const Point2& s) {
                         return Eigen::Vector2d(s.x() / k, k * s.y());
                       }));
  d.x1 = DiscreteField(disc.position);
  return d;
}

inline SystemState ring_initial_state(const Discretization& disc, const SchemeConfig& cfg,
                                      const RingGeometry& ring = {}) {
  const InitialData d = ring_initial_data(disc, ring);
  return initialize(disc, d.u0, d.x0, d.x1, cfg);
}

}  // namespace fdlm
