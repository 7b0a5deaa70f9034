#pragma once

#include "fdlm/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fdlm {

/// Boundary condition family attached to a boundary edge.
///
/// SymmetryX marks a symmetry line normal to the x axis (the line x = const),
/// on which the x component of the velocity vanishes; SymmetryY is the
/// analogue for y.
enum class BoundaryTag { OuterWall, SymmetryX, SymmetryY, Free };

inline const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::OuterWall: return "OuterWall";
    case BoundaryTag::SymmetryX: return "SymmetryX";
    case BoundaryTag::SymmetryY: return "SymmetryY";
    case BoundaryTag::Free: return "Free";
  }
  return "?";
}

inline BoundaryTag boundary_tag_from_string(const std::string& s) {
  if (s == "OuterWall") return BoundaryTag::OuterWall;
  if (s == "SymmetryX") return BoundaryTag::SymmetryX;
  if (s == "SymmetryY") return BoundaryTag::SymmetryY;
  if (s == "Free") return BoundaryTag::Free;
  throw InvalidArgument("unknown boundary tag '" + s + "'");
}

struct BoundaryEdge {
  std::array<int, 2> nodes;
  BoundaryTag tag;
};

/// Undirected edges of a triangulation. Local edge k of a triangle joins its
/// vertices k and (k+1)%3.
struct EdgeTable {
  std::vector<std::array<int, 2>> edges;      // sorted node pair
  std::vector<std::array<int, 3>> tri_edges;  // global edge of local edge k
  std::map<std::pair<int, int>, int> index;

  int find(int a, int b) const {
    auto it = index.find({std::min(a, b), std::max(a, b)});
    return it == index.end() ? -1 : it->second;
  }
};

struct TriMesh {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> tris;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;

  // Set on meshes produced by refine_uniform: children 4k..4k+3 have parent k.
  std::shared_ptr<const TriMesh> parent;
  std::vector<int> parent_tri;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_tris() const { return static_cast<int>(tris.size()); }

  const Point2& vertex(int t, int k) const { return nodes[tris[t][k]]; }

  double signed_area(int t) const {
    const Point2& a = vertex(t, 0);
    const Point2& b = vertex(t, 1);
    const Point2& c = vertex(t, 2);
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) -
                  (c.x() - a.x()) * (b.y() - a.y()));
  }

  double area(int t) const { return std::abs(signed_area(t)); }

  double total_area() const {
    double s = 0.0;
    for (int t = 0; t < n_tris(); ++t) s += signed_area(t);
    return s;
  }

  Point2 centroid(int t) const {
    return (vertex(t, 0) + vertex(t, 1) + vertex(t, 2)) / 3.0;
  }

  double diameter(int t) const {
    return std::max({(vertex(t, 0) - vertex(t, 1)).norm(),
                     (vertex(t, 1) - vertex(t, 2)).norm(),
                     (vertex(t, 2) - vertex(t, 0)).norm()});
  }

  double max_diameter() const {
    double h = 0.0;
    for (int t = 0; t < n_tris(); ++t) h = std::max(h, diameter(t));
    return h;
  }

  EdgeTable edge_table() const {
    EdgeTable et;
    et.tri_edges.resize(tris.size());
    for (int t = 0; t < n_tris(); ++t) {
      for (int k = 0; k < 3; ++k) {
        const int a = tris[t][k];
        const int b = tris[t][(k + 1) % 3];
        const auto key = std::make_pair(std::min(a, b), std::max(a, b));
        auto [it, inserted] =
            et.index.emplace(key, static_cast<int>(et.edges.size()));
        if (inserted) et.edges.push_back({key.first, key.second});
        et.tri_edges[t][k] = it->second;
      }
    }
    return et;
  }

  /// Throws InvalidArgument if any structural invariant is violated.
  void validate() const {
    for (int t = 0; t < n_tris(); ++t) {
      for (int k = 0; k < 3; ++k)
        require(tris[t][k] >= 0 && tris[t][k] < n_nodes(),
                "triangle " + std::to_string(t) + " has out-of-range node");
      require(signed_area(t) > 0.0,
              "triangle " + std::to_string(t) + " is not positively oriented");
    }
    const EdgeTable et = edge_table();
    std::vector<int> count(et.edges.size(), 0);
    for (const auto& te : et.tri_edges)
      for (int e : te) ++count[e];
    for (const auto& be : boundary_edges) {
      const int e = et.find(be.nodes[0], be.nodes[1]);
      require(e >= 0, "boundary edge is not an edge of the mesh");
      require(count[e] == 1, "boundary edge is shared by two triangles");
    }
  }
};

/// Tags for the four sides of an axis-aligned rectangle.
struct RectangleTags {
  BoundaryTag left = BoundaryTag::OuterWall;
  BoundaryTag right = BoundaryTag::OuterWall;
  BoundaryTag bottom = BoundaryTag::OuterWall;
  BoundaryTag top = BoundaryTag::OuterWall;

  static RectangleTags all(BoundaryTag t) { return {t, t, t, t}; }

  /// First quadrant of a symmetric container: x = 0 and y = 0 are mirrors.
  static RectangleTags quarter() {
    return {BoundaryTag::SymmetryX, BoundaryTag::OuterWall,
            BoundaryTag::SymmetryY, BoundaryTag::OuterWall};
  }
};

struct Interval {
  double lo;
  double hi;
};

namespace detail {

// Criss-cross (alternating diagonal) split of a structured quad grid whose
// node (i, j) has index j * (nx + 1) + i.
inline void criss_cross_tris(int nx, int ny, std::vector<std::array<int, 3>>& tris) {
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  tris.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int p00 = id(i, j), p10 = id(i + 1, j);
      const int p01 = id(i, j + 1), p11 = id(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        tris.push_back({p00, p10, p11});
        tris.push_back({p00, p11, p01});
      } else {
        tris.push_back({p00, p10, p01});
        tris.push_back({p10, p11, p01});
      }
    }
  }
}

inline void grid_boundary(int nx, int ny, const RectangleTags& tags,
                          std::vector<BoundaryEdge>& edges) {
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int i = 0; i < nx; ++i) edges.push_back({{id(i, 0), id(i + 1, 0)}, tags.bottom});
  for (int j = 0; j < ny; ++j) edges.push_back({{id(nx, j), id(nx, j + 1)}, tags.right});
  for (int i = nx; i > 0; --i) edges.push_back({{id(i, ny), id(i - 1, ny)}, tags.top});
  for (int j = ny; j > 0; --j) edges.push_back({{id(0, j), id(0, j - 1)}, tags.left});
}

}  // namespace detail

inline TriMesh build_rectangle_mesh(int nx, int ny, Interval xr, Interval yr,
                                    const RectangleTags& tags = {}) {
  require(nx >= 1 && ny >= 1, "rectangle mesh needs at least one cell per side");
  require(xr.hi > xr.lo && yr.hi > yr.lo, "empty rectangle extent");
  TriMesh m;
  m.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    // Exact endpoints so that boundary nodes sit on the walls bit-for-bit.
    const double y = j == ny ? yr.hi : yr.lo + (yr.hi - yr.lo) * j / ny;
    for (int i = 0; i <= nx; ++i) {
      const double x = i == nx ? xr.hi : xr.lo + (xr.hi - xr.lo) * i / nx;
      m.nodes.emplace_back(x, y);
    }
  }
  detail::criss_cross_tris(nx, ny, m.tris);
  detail::grid_boundary(nx, ny, tags, m.boundary_edges);
  return m;
}

inline TriMesh build_square_mesh(int n_cells, Interval extent,
                                 const RectangleTags& tags = {}) {
  return build_rectangle_mesh(n_cells, n_cells, extent, extent, tags);
}

/// Structured polar grid of the quarter ring r_in <= |x| <= r_out in the first
/// quadrant. Arcs are faceted. The straight edges carry symmetry tags.
inline TriMesh build_quarter_annulus_mesh(int n_radial, int n_angular, double r_in,
                                          double r_out) {
  require(n_radial >= 1 && n_angular >= 1, "annulus mesh needs at least one cell");
  require(r_in > 0.0 && r_in < r_out, "annulus radii must satisfy 0 < r_in < r_out");
  TriMesh m;
  const double half_pi = 0.5 * std::numbers::pi;
  for (int j = 0; j <= n_angular; ++j) {
    const double theta = half_pi * j / n_angular;
    // Pin the symmetry lines exactly.
    const double c = j == n_angular ? 0.0 : std::cos(theta);
    const double s = j == 0 ? 0.0 : (j == n_angular ? 1.0 : std::sin(theta));
    for (int i = 0; i <= n_radial; ++i) {
      const double r = i == n_radial ? r_out : r_in + (r_out - r_in) * i / n_radial;
      m.nodes.emplace_back(r * c, r * s);
    }
  }
  detail::criss_cross_tris(n_radial, n_angular, m.tris);
  // In (r, theta) space: bottom = theta 0 (y = 0 line), top = theta pi/2
  // (x = 0 line), left = inner arc, right = outer arc.
  RectangleTags tags{BoundaryTag::Free, BoundaryTag::Free, BoundaryTag::SymmetryY,
                     BoundaryTag::SymmetryX};
  detail::grid_boundary(n_radial, n_angular, tags, m.boundary_edges);
  return m;
}

/// Coarsest structured quarter ring whose element diameters are all <= h.
inline TriMesh build_quarter_annulus_for_meshsize(double h, double r_in, double r_out) {
  require(h > 0.0, "mesh size must be positive");
  const double s = h / std::sqrt(2.0);
  int nr = std::max(1, static_cast<int>(std::ceil((r_out - r_in) / s - 1e-12)));
  int nt = std::max(1, static_cast<int>(std::ceil(0.5 * std::numbers::pi * r_out / s - 1e-12)));
  for (;;) {
    TriMesh m = build_quarter_annulus_mesh(nr, nt, r_in, r_out);
    if (m.max_diameter() <= h * (1.0 + 1e-12)) return m;
    ++nt;
    if (nt % 2 == 0) ++nr;
  }
}

/// Splits every triangle into four through its edge midpoints.
inline TriMesh refine_uniform(std::shared_ptr<const TriMesh> coarse) {
  require(coarse != nullptr, "refine_uniform needs a mesh");
  const TriMesh& c = *coarse;
  const EdgeTable et = c.edge_table();
  TriMesh f;
  f.nodes = c.nodes;
  const int nv = c.n_nodes();
  for (const auto& e : et.edges) f.nodes.push_back(0.5 * (c.nodes[e[0]] + c.nodes[e[1]]));
  f.tris.reserve(4 * c.tris.size());
  f.parent_tri.reserve(4 * c.tris.size());
  for (int t = 0; t < c.n_tris(); ++t) {
    const auto& v = c.tris[t];
    const int m01 = nv + et.tri_edges[t][0];
    const int m12 = nv + et.tri_edges[t][1];
    const int m20 = nv + et.tri_edges[t][2];
    f.tris.push_back({v[0], m01, m20});
    f.tris.push_back({m01, v[1], m12});
    f.tris.push_back({m20, m12, v[2]});
    f.tris.push_back({m01, m12, m20});
    for (int k = 0; k < 4; ++k) f.parent_tri.push_back(t);
  }
  for (const auto& be : c.boundary_edges) {
    const int mid = nv + et.find(be.nodes[0], be.nodes[1]);
    f.boundary_edges.push_back({{be.nodes[0], mid}, be.tag});
    f.boundary_edges.push_back({{mid, be.nodes[1]}, be.tag});
  }
  f.parent = std::move(coarse);
  return f;
}

inline TriMesh refine_uniform(const TriMesh& coarse) {
  return refine_uniform(std::make_shared<const TriMesh>(coarse));
}

/// Text dump: `nodes <N> tris <T>`, N lines `x y`, T lines `i j k`, then an
/// optional `edges <E>` section with lines `i j tag`.
inline void write_mesh(std::ostream& os, const TriMesh& m) {
  char buf[96];
  os << "nodes " << m.n_nodes() << " tris " << m.n_tris() << "\n";
  for (const auto& p : m.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
    os << buf;
  }
  for (const auto& t : m.tris) os << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "edges " << m.boundary_edges.size() << "\n";
  for (const auto& be : m.boundary_edges)
    os << be.nodes[0] << " " << be.nodes[1] << " " << to_string(be.tag) << "\n";
}

inline TriMesh read_mesh(std::istream& is) {
  TriMesh m;
  std::string kw1, kw2;
  long n = -1, t = -1;
  if (!(is >> kw1 >> n >> kw2 >> t) || kw1 != "nodes" || kw2 != "tris" || n < 0 || t < 0)
    throw IoError("mesh dump: bad header");
  std::string line;
  std::getline(is, line);
  m.nodes.resize(n);
  for (long i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw IoError("mesh dump: truncated node list");
    std::istringstream ls(line);
    double x, y;
    if (!(ls >> x >> y)) throw IoError("mesh dump: bad node line " + std::to_string(i));
    m.nodes[i] = Point2(x, y);
  }
  m.tris.resize(t);
  for (long i = 0; i < t; ++i) {
    if (!std::getline(is, line)) throw IoError("mesh dump: truncated triangle list");
    std::istringstream ls(line);
    if (!(ls >> m.tris[i][0] >> m.tris[i][1] >> m.tris[i][2]))
      throw IoError("mesh dump: bad triangle line " + std::to_string(i));
  }
  std::string kw;
  long ne = 0;
  if (is >> kw) {
    if (kw != "edges" || !(is >> ne)) throw IoError("mesh dump: bad edges section");
    for (long i = 0; i < ne; ++i) {
      BoundaryEdge be;
      std::string tag;
      if (!(is >> be.nodes[0] >> be.nodes[1] >> tag))
        throw IoError("mesh dump: bad edge line " + std::to_string(i));
      be.tag = boundary_tag_from_string(tag);
      m.boundary_edges.push_back(be);
    }
  }
  m.validate();
  return m;
}

}  // namespace fdlm
