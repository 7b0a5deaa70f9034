#pragma once

#include "fdlm/core.hpp"
#include "fdlm/locator.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace fdlm {

/// Triangle quadrature in barycentric coordinates. Weights sum to one, so the
/// physical weight of point q on triangle T is weights[q] * |T|.
struct QuadRule {
  std::vector<Bary> points;
  std::vector<double> weights;
  int degree = 0;

  int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

inline void add_orbit3(QuadRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.points.push_back({b, a, a});
  r.points.push_back({a, b, a});
  r.points.push_back({a, a, b});
  for (int k = 0; k < 3; ++k) r.weights.push_back(w);
}

/// Gauss-Legendre nodes/weights on [0, 1].
inline void gauss_legendre01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace detail

/// Collapsed (Duffy) tensor Gauss rule with n x n points, exact to degree 2n-2.
inline QuadRule collapsed_gauss_rule(int n) {
  require(n >= 1, "collapsed Gauss rule needs n >= 1");
  std::vector<double> x, w;
  detail::gauss_legendre01(n, x, w);
  QuadRule r;
  r.degree = 2 * n - 2;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = x[i];
      const double v = x[j] * (1.0 - u);
      r.points.push_back({1.0 - u - v, u, v});
      // Reference triangle has area 1/2; normalise to unit total weight.
      r.weights.push_back(2.0 * w[i] * w[j] * (1.0 - u));
    }
  }
  return r;
}

/// Smallest built-in rule exact for polynomials of total degree <= degree.
inline QuadRule triangle_rule(int degree) {
  QuadRule r;
  if (degree <= 1) {
    r.degree = 1;
    r.points.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
    r.weights.push_back(1.0);
  } else if (degree == 2) {
    r.degree = 2;
    detail::add_orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
  } else if (degree <= 4) {
    // Six-point Strang-Fix/Dunavant rule.
    r.degree = 4;
    detail::add_orbit3(r, 0.44594849091596488631832925388305,
                       0.22338158967801146569500700843312);
    detail::add_orbit3(r, 0.091576213509770743459571463402202,
                       0.10995174365532186763832632490021);
  } else if (degree == 5) {
    r.degree = 5;
    const double s15 = std::sqrt(15.0);
    r.points.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
    r.weights.push_back(9.0 / 40.0);
    detail::add_orbit3(r, (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
    detail::add_orbit3(r, (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
  } else {
    return collapsed_gauss_rule((degree + 3) / 2);
  }
  return r;
}

}  // namespace fdlm
