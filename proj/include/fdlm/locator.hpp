#pragma once

#include "fdlm/mesh.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

namespace fdlm {

using Bary = std::array<double, 3>;

/// Barycentric coordinates of p with respect to triangle t.
inline Bary barycentric(const TriMesh& m, int t, const Point2& p) {
  const Point2& a = m.vertex(t, 0);
  const Point2& b = m.vertex(t, 1);
  const Point2& c = m.vertex(t, 2);
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  const double l1 = ((p.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (p.y() - a.y())) / det;
  const double l2 = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / det;
  return {1.0 - l1 - l2, l1, l2};
}

inline Point2 from_barycentric(const TriMesh& m, int t, const Bary& b) {
  return b[0] * m.vertex(t, 0) + b[1] * m.vertex(t, 1) + b[2] * m.vertex(t, 2);
}

struct Location {
  int tri;
  Bary bary;
};

/// Uniform background grid over a mesh's bounding box. Bin size is the largest
/// triangle diameter; each bin lists the triangles whose bounding box meets it.
class MeshLocator {
 public:
  static constexpr double kEdgeTolerance = 1e-12;

  explicit MeshLocator(std::shared_ptr<const TriMesh> mesh) : mesh_(std::move(mesh)) {
    require(mesh_ != nullptr && mesh_->n_tris() > 0, "locator needs a non-empty mesh");
    const TriMesh& m = *mesh_;
    lo_ = hi_ = m.nodes.front();
    for (const auto& p : m.nodes) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    bin_ = m.max_diameter();
    nx_ = std::max(1, static_cast<int>(std::ceil((hi_.x() - lo_.x()) / bin_)));
    ny_ = std::max(1, static_cast<int>(std::ceil((hi_.y() - lo_.y()) / bin_)));
    bins_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (int t = 0; t < m.n_tris(); ++t) {
      Point2 tlo = m.vertex(t, 0), thi = m.vertex(t, 0);
      for (int k = 1; k < 3; ++k) {
        tlo = tlo.cwiseMin(m.vertex(t, k));
        thi = thi.cwiseMax(m.vertex(t, k));
      }
      const auto [i0, j0] = cell_of(tlo, -1e-9);
      const auto [i1, j1] = cell_of(thi, 1e-9);
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) bins_[j * nx_ + i].push_back(t);
    }
  }

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }

  /// Owning triangle and barycentric weights, or nullopt when the point lies
  /// outside every triangle. Ties on shared edges go to the lowest index.
  std::optional<Location> locate(const Point2& p) const {
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) return std::nullopt;
    const double slack = kEdgeTolerance * (1.0 + bin_);
    if (p.x() < lo_.x() - slack || p.y() < lo_.y() - slack || p.x() > hi_.x() + slack ||
        p.y() > hi_.y() + slack)
      return std::nullopt;
    const auto [i, j] = cell_of(p, 0.0);
    std::optional<Location> best;
    for (int t : bins_[j * nx_ + i]) {
      if (best && t >= best->tri) continue;
      const Bary b = barycentric(*mesh_, t, p);
      if (b[0] >= -kEdgeTolerance && b[1] >= -kEdgeTolerance && b[2] >= -kEdgeTolerance)
        best = Location{t, b};
    }
    return best;
  }

 private:
  std::pair<int, int> cell_of(const Point2& p, double pad) const {
    auto clampi = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
    const int i = static_cast<int>(std::floor((p.x() + pad - lo_.x()) / bin_));
    const int j = static_cast<int>(std::floor((p.y() + pad - lo_.y()) / bin_));
    return {clampi(i, nx_), clampi(j, ny_)};
  }

  std::shared_ptr<const TriMesh> mesh_;
  Point2 lo_, hi_;
  double bin_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> bins_;
};

}  // namespace fdlm
