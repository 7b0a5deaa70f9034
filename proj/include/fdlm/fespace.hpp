#pragma once

#include "fdlm/core.hpp"
#include "fdlm/locator.hpp"
#include "fdlm/mesh.hpp"
#include "fdlm/quadrature.hpp"

#include <array>
#include <cstdio>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fdlm {

/// Element families. P1isoP2 is continuous P1 on the once-refined mesh;
/// P1plusP0 is continuous P1 enriched by elementwise constants.
enum class Family { P0, P1, P2, P1isoP2, P1plusP0 };

enum class VelocityElement { TaylorHoodP2, P1isoP2 };
enum class PressureElement { P1, BPenhanced };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::P0: return "P0";
    case Family::P1: return "P1";
    case Family::P2: return "P2";
    case Family::P1isoP2: return "P1isoP2";
    case Family::P1plusP0: return "P1plusP0";
  }
  return "?";
}

inline int local_dof_count(Family f) {
  switch (f) {
    case Family::P0: return 1;
    case Family::P1:
    case Family::P1isoP2: return 3;
    case Family::P2: return 6;
    case Family::P1plusP0: return 4;
  }
  return 0;
}

inline int polynomial_degree(Family f) {
  switch (f) {
    case Family::P0: return 0;
    case Family::P2: return 2;
    default: return 1;
  }
}

/// Basis values and physical gradients of the local shape functions.
struct ShapeValues {
  int n = 0;
  std::array<double, 6> phi{};
  std::array<Point2, 6> grad{};
};

/// Gradients of the barycentric coordinates of triangle t (constant).
inline std::array<Point2, 3> barycentric_gradients(const TriMesh& m, int t) {
  const Point2& a = m.vertex(t, 0);
  const Point2& b = m.vertex(t, 1);
  const Point2& c = m.vertex(t, 2);
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  const Point2 g1((c.y() - a.y()) / det, -(c.x() - a.x()) / det);
  const Point2 g2(-(b.y() - a.y()) / det, (b.x() - a.x()) / det);
  return {-(g1 + g2), g1, g2};
}

/// Local basis on triangle t. P2 ordering: vertices 0..2, then the midpoints
/// of local edges (0,1), (1,2), (2,0).
inline ShapeValues shape_functions(Family f, const TriMesh& m, int t, const Bary& b) {
  ShapeValues s;
  s.n = local_dof_count(f);
  if (f == Family::P0) {
    s.phi[0] = 1.0;
    s.grad[0] = Point2::Zero();
    return s;
  }
  const auto g = barycentric_gradients(m, t);
  if (f == Family::P2) {
    for (int i = 0; i < 3; ++i) {
      s.phi[i] = b[i] * (2.0 * b[i] - 1.0);
      s.grad[i] = (4.0 * b[i] - 1.0) * g[i];
      const int j = (i + 1) % 3;
      s.phi[3 + i] = 4.0 * b[i] * b[j];
      s.grad[3 + i] = 4.0 * (b[i] * g[j] + b[j] * g[i]);
    }
    return s;
  }
  for (int i = 0; i < 3; ++i) {
    s.phi[i] = b[i];
    s.grad[i] = g[i];
  }
  if (f == Family::P1plusP0) {
    s.phi[3] = 1.0;
    s.grad[3] = Point2::Zero();
  }
  return s;
}

/// Finite element space: mesh, family, DOF map and constrained DOFs.
///
/// Vector-valued spaces use blocked numbering: component c of scalar DOF i has
/// global index c * n_scalar + i. Constrained DOFs carry homogeneous values.
struct FeSpace {
  std::shared_ptr<const TriMesh> mesh;  // mesh carrying the element basis
  Family family = Family::P1;
  int components = 1;
  int n_scalar = 0;
  std::vector<std::array<int, 6>> cell_dofs;  // -1 marks an absent local function
  std::vector<Point2> support;                // nodal point of each scalar DOF
  std::vector<char> constrained;              // per global DOF

  int n_local() const { return local_dof_count(family); }
  int n_dofs() const { return components * n_scalar; }
  int dof(int comp, int scalar) const { return comp * n_scalar + scalar; }

  int n_constrained() const {
    int c = 0;
    for (char v : constrained) c += v != 0;
    return c;
  }

  /// Family whose local basis is evaluated on `mesh`.
  Family basis_family() const { return family == Family::P1isoP2 ? Family::P1 : family; }
};

using SpacePtr = std::shared_ptr<const FeSpace>;

/// Plain Lagrange-type space on a mesh, no constraints.
inline FeSpace make_space(std::shared_ptr<const TriMesh> mesh, Family family,
                          int components) {
  require(mesh != nullptr, "space needs a mesh");
  require(components == 1 || components == 2, "components must be 1 or 2");
  const TriMesh& m = *mesh;
  FeSpace s;
  s.family = family;
  s.components = components;
  s.cell_dofs.assign(m.tris.size(), {-1, -1, -1, -1, -1, -1});
  switch (family) {
    case Family::P0:
      s.n_scalar = m.n_tris();
      for (int t = 0; t < m.n_tris(); ++t) {
        s.cell_dofs[t][0] = t;
        s.support.push_back(m.centroid(t));
      }
      break;
    case Family::P1:
    case Family::P1isoP2:
    case Family::P1plusP0:
      s.n_scalar = m.n_nodes();
      s.support = m.nodes;
      for (int t = 0; t < m.n_tris(); ++t)
        for (int k = 0; k < 3; ++k) s.cell_dofs[t][k] = m.tris[t][k];
      if (family == Family::P1plusP0) {
        // Continuous P1 already holds the global constant: element 0 keeps no
        // P0 function so that the sum is a direct sum.
        for (int t = 1; t < m.n_tris(); ++t) {
          s.cell_dofs[t][3] = m.n_nodes() + t - 1;
          s.support.push_back(m.centroid(t));
        }
        s.n_scalar = m.n_nodes() + m.n_tris() - 1;
      }
      break;
    case Family::P2: {
      const EdgeTable et = m.edge_table();
      s.n_scalar = m.n_nodes() + static_cast<int>(et.edges.size());
      s.support = m.nodes;
      for (const auto& e : et.edges) s.support.push_back(0.5 * (m.nodes[e[0]] + m.nodes[e[1]]));
      for (int t = 0; t < m.n_tris(); ++t)
        for (int k = 0; k < 3; ++k) {
          s.cell_dofs[t][k] = m.tris[t][k];
          s.cell_dofs[t][3 + k] = m.n_nodes() + et.tri_edges[t][k];
        }
      break;
    }
  }
  s.constrained.assign(s.n_dofs(), 0);
  s.mesh = std::move(mesh);
  return s;
}

namespace detail {

inline void constrain_boundary(FeSpace& s, const TriMesh& m) {
  const bool p2 = s.family == Family::P2;
  EdgeTable et;
  if (p2) et = m.edge_table();
  for (const auto& be : m.boundary_edges) {
    bool comp[2] = {false, false};
    switch (be.tag) {
      case BoundaryTag::OuterWall: comp[0] = comp[1] = true; break;
      case BoundaryTag::SymmetryX: comp[0] = true; break;
      case BoundaryTag::SymmetryY: comp[1] = true; break;
      case BoundaryTag::Free: break;
    }
    std::vector<int> scalars = {be.nodes[0], be.nodes[1]};
    if (p2) scalars.push_back(m.n_nodes() + et.find(be.nodes[0], be.nodes[1]));
    for (int c = 0; c < s.components; ++c)
      if (comp[c])
        for (int i : scalars) s.constrained[s.dof(c, i)] = 1;
  }
}

}  // namespace detail

/// Vector velocity space with homogeneous constraints from the boundary tags:
/// OuterWall fixes both components, symmetry lines fix the normal component.
inline FeSpace make_velocity_space(std::shared_ptr<const TriMesh> fluid_mesh,
                                   VelocityElement variant) {
  require(fluid_mesh != nullptr, "velocity space needs a mesh");
  FeSpace s;
  if (variant == VelocityElement::P1isoP2) {
    auto fine = std::make_shared<const TriMesh>(refine_uniform(fluid_mesh));
    s = make_space(fine, Family::P1, 2);
    s.family = Family::P1isoP2;
  } else {
    s = make_space(fluid_mesh, Family::P2, 2);
  }
  detail::constrain_boundary(s, *s.mesh);
  return s;
}

/// Scalar pressure space on the coarse fluid mesh. The zero-mean condition is
/// imposed by the saddle-point solver.
inline FeSpace make_pressure_space(std::shared_ptr<const TriMesh> fluid_mesh,
                                   PressureElement variant) {
  return make_space(std::move(fluid_mesh),
                    variant == PressureElement::BPenhanced ? Family::P1plusP0 : Family::P1, 1);
}

struct SolidSpaces {
  FeSpace position;    // S_h
  FeSpace multiplier;  // Lambda_h
};

/// Position and multiplier spaces on the solid reference mesh. The multiplier
/// degree may not exceed the position degree. Symmetry-tagged solid edges fix
/// the normal component of both, as the mirrored full solid would; free edges
/// carry no constraint.
inline SolidSpaces make_solid_spaces(std::shared_ptr<const TriMesh> solid_mesh, int deg_s,
                                     int deg_lambda) {
  require(deg_s == 1 || deg_s == 2, "solid position degree must be 1 or 2");
  require(deg_lambda == 1 || deg_lambda == 2, "multiplier degree must be 1 or 2");
  require(deg_lambda <= deg_s,
          "multiplier degree exceeds position degree: dim(S_h) >= dim(Lambda_h) fails");
  auto fam = [](int d) { return d == 1 ? Family::P1 : Family::P2; };
  SolidSpaces r{make_space(solid_mesh, fam(deg_s), 2), make_space(solid_mesh, fam(deg_lambda), 2)};
  for (const auto& be : solid_mesh->boundary_edges)
    require(be.tag != BoundaryTag::OuterWall, "solid mesh edges cannot be tagged OuterWall");
  detail::constrain_boundary(r.position, *solid_mesh);
  detail::constrain_boundary(r.multiplier, *solid_mesh);
  return r;
}

/// Evaluates one space on the elements of an integration mesh, which is
/// either the space's own mesh or a uniform refinement of it.
class SpaceOnCell {
 public:
  SpaceOnCell(const FeSpace& space, const TriMesh& integration_mesh)
      : space_(space), integ_(integration_mesh) {
    if (space.mesh.get() == &integration_mesh) {
      same_ = true;
    } else {
      require(integration_mesh.parent.get() == space.mesh.get(),
              "space mesh is neither the integration mesh nor its parent");
      same_ = false;
    }
  }

  void reinit(int integration_cell) {
    cell_ = same_ ? integration_cell : integ_.parent_tri[integration_cell];
  }

  int cell() const { return cell_; }
  const std::array<int, 6>& dofs() const { return space_.cell_dofs[cell_]; }

  /// `b` are barycentric coordinates in the integration cell, `x` the point.
  ShapeValues at(const Bary& b, const Point2& x) const {
    if (same_) return shape_functions(space_.basis_family(), *space_.mesh, cell_, b);
    return shape_functions(space_.basis_family(), *space_.mesh, cell_,
                           barycentric(*space_.mesh, cell_, x));
  }

 private:
  const FeSpace& space_;
  const TriMesh& integ_;
  bool same_ = true;
  int cell_ = 0;
};

/// Coefficient vector over a space.
struct DiscreteField {
  SpacePtr space;
  Vec coeffs;

  DiscreteField() = default;
  DiscreteField(SpacePtr s) : space(std::move(s)), coeffs(Vec::Zero(space->n_dofs())) {}
  DiscreteField(SpacePtr s, Vec c) : space(std::move(s)), coeffs(std::move(c)) {
    require(coeffs.size() == space->n_dofs(), "field length does not match space");
  }
};

/// Value (one entry per component) and gradient (row per component).
struct FieldValue {
  Eigen::Vector2d value = Eigen::Vector2d::Zero();
  Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
};

inline FieldValue eval_on_cell(const FeSpace& space, const Vec& coeffs, int cell,
                               const Bary& b) {
  const ShapeValues sv = shape_functions(space.basis_family(), *space.mesh, cell, b);
  FieldValue out;
  const auto& dofs = space.cell_dofs[cell];
  for (int i = 0; i < sv.n; ++i) {
    if (dofs[i] < 0) continue;
    for (int c = 0; c < space.components; ++c) {
      const double v = coeffs[space.dof(c, dofs[i])];
      out.value[c] += v * sv.phi[i];
      out.grad.row(c) += v * sv.grad[i].transpose();
    }
  }
  return out;
}

/// Point evaluation through a locator built over the field's mesh. Returns
/// nullopt when the point is outside the mesh.
inline std::optional<FieldValue> eval_field(const DiscreteField& f, const MeshLocator& loc,
                                            const Point2& p) {
  require(&loc.mesh() == f.space->mesh.get(), "locator is not built over the field mesh");
  const auto where = loc.locate(p);
  if (!where) return std::nullopt;
  return eval_on_cell(*f.space, f.coeffs, where->tri, where->bary);
}

using VectorFunction = std::function<Eigen::Vector2d(const Point2&)>;
using ScalarFunction = std::function<double(const Point2&)>;

/// Nodal interpolation. For P1plusP0 the P0 part is left at zero.
inline Vec interpolate(const FeSpace& s, const VectorFunction& fn) {
  Vec c = Vec::Zero(s.n_dofs());
  const int n_nodal = s.family == Family::P1plusP0 ? s.mesh->n_nodes() : s.n_scalar;
  for (int i = 0; i < n_nodal; ++i) {
    const Eigen::Vector2d v = fn(s.support[i]);
    for (int comp = 0; comp < s.components; ++comp) c[s.dof(comp, i)] = v[comp];
  }
  return c;
}

inline Vec interpolate_scalar(const FeSpace& s, const ScalarFunction& fn) {
  return interpolate(s, [&](const Point2& x) { return Eigen::Vector2d(fn(x), 0.0); });
}

/// `field <name> ndofs <N>` followed by one coefficient per line.
inline void write_field(std::ostream& os, const std::string& name, const Vec& coeffs) {
  char buf[40];
  os << "field " << name << " ndofs " << coeffs.size() << "\n";
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", coeffs[i]);
    os << buf;
  }
}

inline Vec read_field(std::istream& is, std::string* name = nullptr) {
  std::string kw1, nm, kw2;
  long n = -1;
  if (!(is >> kw1 >> nm >> kw2 >> n) || kw1 != "field" || kw2 != "ndofs" || n < 0)
    throw IoError("field dump: bad header");
  Vec c(n);
  for (long i = 0; i < n; ++i)
    if (!(is >> c[i])) throw IoError("field dump: truncated at entry " + std::to_string(i));
  if (name) *name = nm;
  return c;
}

}  // namespace fdlm
