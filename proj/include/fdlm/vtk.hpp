#pragma once

#include "fdlm/core.hpp"
#include "fdlm/fespace.hpp"
#include "fdlm/locator.hpp"
#include "fdlm/saddle.hpp"
#include "fdlm/timestep.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace fdlm {

// Legacy ASCII VTK, one unstructured grid per file: the fluid mesh with
// velocity and pressure at its vertices, and the solid mesh at its current
// position X with the reference coordinates and the solid velocity.

namespace detail {

inline void vtk_num(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  os << buf;
}

inline void vtk_grid(std::ostream& os, const std::string& title, const std::vector<Point2>& pts,
                     const std::vector<std::array<int, 3>>& tris) {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << pts.size() << " double\n";
  for (const Point2& p : pts) {
    vtk_num(os, p.x());
    os << ' ';
    vtk_num(os, p.y());
    os << " 0\n";
  }
  os << "CELLS " << tris.size() << ' ' << 4 * tris.size() << '\n';
  for (const auto& t : tris) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << tris.size() << '\n';
  for (size_t i = 0; i < tris.size(); ++i) os << "5\n";
  os << "POINT_DATA " << pts.size() << '\n';
}

inline void vtk_vectors(std::ostream& os, const std::string& name, const std::vector<Point2>& v) {
  os << "VECTORS " << name << " double\n";
  for (const Point2& p : v) {
    vtk_num(os, p.x());
    os << ' ';
    vtk_num(os, p.y());
    os << " 0\n";
  }
}

inline void vtk_scalars(std::ostream& os, const std::string& name, const std::vector<double>& v) {
  os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double x : v) {
    vtk_num(os, x);
    os << '\n';
  }
}

// Vertex values of a vector field; vertex DOFs come first for P1 and P2.
inline std::vector<Point2> vertex_vectors(const FeSpace& s, const Vec& c) {
  std::vector<Point2> out(s.mesh->n_nodes());
  for (int i = 0; i < s.mesh->n_nodes(); ++i) out[i] = Point2(c[s.dof(0, i)], c[s.dof(1, i)]);
  return out;
}

}  // namespace detail

inline void write_vtk_fluid(std::ostream& os, const SystemState& st, const Discretization& d) {
  const FeSpace& v = *d.velocity;
  const TriMesh& m = *v.mesh;
  const FeSpace& q = *d.pressure;
  std::vector<double> pressure(m.n_nodes(), 0.0);
  std::vector<char> done(m.n_nodes(), 0);
  for (int t = 0; t < m.n_tris(); ++t) {
    const int qt = m.parent && q.mesh.get() == m.parent.get() ? m.parent_tri[t] : t;
    for (int k = 0; k < 3; ++k) {
      const int n = m.tris[t][k];
      if (done[n]) continue;
      done[n] = 1;
      pressure[n] = eval_on_cell(q, st.p.coeffs, qt, barycentric(*q.mesh, qt, m.nodes[n])).value[0];
    }
  }
  detail::vtk_grid(os, "fluid step " + std::to_string(st.n), m.nodes, m.tris);
  detail::vtk_vectors(os, "velocity", detail::vertex_vectors(v, st.u.coeffs));
  detail::vtk_scalars(os, "pressure", pressure);
}

inline void write_vtk_solid(std::ostream& os, const SystemState& st, const Discretization& d) {
  const FeSpace& s = *d.position;
  const TriMesh& m = *s.mesh;
  detail::vtk_grid(os, "solid step " + std::to_string(st.n), detail::vertex_vectors(s, st.x.coeffs),
                   m.tris);
  detail::vtk_vectors(os, "reference", m.nodes);
  const Vec w = st.w.size() == s.n_dofs() ? st.w : Vec::Zero(s.n_dofs());
  detail::vtk_vectors(os, "solid_velocity", detail::vertex_vectors(s, w));
}

/// Writes fluid_NNNN.vtk and solid_NNNN.vtk into `dir`.
inline void write_vtk_snapshot(const SystemState& st, const Discretization& d, const std::string& dir) {
  char name[32];
  std::snprintf(name, sizeof name, "%04d.vtk", st.n);
  for (const bool fluid : {true, false}) {
    const std::string path = dir + (fluid ? "/fluid_" : "/solid_") + name;
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    if (fluid) write_vtk_fluid(os, st, d);
    else write_vtk_solid(os, st, d);
    if (!os) throw IoError("write to '" + path + "' failed");
  }
}

/// Minimal reader for files produced above, used to check them.
struct VtkGrid {
  std::vector<Point2> points;
  std::vector<std::array<int, 3>> tris;
  std::map<std::string, std::vector<double>> point_data;  // flattened components
};

inline VtkGrid read_vtk(std::istream& is) {
  VtkGrid g;
  std::string tok;
  auto fail = [](const std::string& what) { throw IoError("vtk parse: " + what); };
  while (is >> tok) {
    if (tok == "POINTS") {
      size_t n = 0;
      is >> n >> tok;
      g.points.resize(n);
      for (auto& p : g.points) {
        double z;
        if (!(is >> p.x() >> p.y() >> z)) fail("truncated POINTS");
      }
    } else if (tok == "CELLS") {
      size_t n = 0, total = 0;
      is >> n >> total;
      g.tris.resize(n);
      for (auto& t : g.tris) {
        int k;
        if (!(is >> k >> t[0] >> t[1] >> t[2]) || k != 3) fail("bad CELLS entry");
      }
    } else if (tok == "CELL_TYPES") {
      size_t n = 0;
      is >> n;
      for (size_t i = 0; i < n; ++i) is >> tok;
    } else if (tok == "VECTORS" || tok == "SCALARS") {
      const bool vec = tok == "VECTORS";
      std::string name, type;
      is >> name >> type;
      if (!vec) is >> tok >> tok >> tok;  // components, LOOKUP_TABLE default
      std::vector<double>& out = g.point_data[name];
      out.resize(g.points.size() * (vec ? 2 : 1));
      for (size_t i = 0; i < g.points.size(); ++i) {
        double z;
        if (vec) {
          if (!(is >> out[2 * i] >> out[2 * i + 1] >> z)) fail("truncated " + name);
        } else if (!(is >> out[i])) {
          fail("truncated " + name);
        }
      }
    }
  }
  return g;
}

}  // namespace fdlm
