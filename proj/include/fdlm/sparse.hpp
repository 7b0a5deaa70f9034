#pragma once

#include "fdlm/core.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace fdlm {

inline SparseMat from_triplets(int rows, int cols, const std::vector<Triplet>& t) {
  SparseMat m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

/// Largest absolute entry.
inline double max_abs(const SparseMat& a) {
  double m = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMat::InnerIterator it(a, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

/// max |A - A^T| over all entries.
inline double symmetry_defect(const SparseMat& a) {
  const SparseMat at = a.transpose();
  const SparseMat d = a - at;
  return max_abs(d);
}

/// Block-diagonal copy of a scalar matrix, one block per component, matching
/// the blocked vector numbering of FeSpace.
inline SparseMat expand_components(const SparseMat& s, int components) {
  std::vector<Triplet> t;
  t.reserve(s.nonZeros() * components);
  for (int c = 0; c < components; ++c)
    for (int k = 0; k < s.outerSize(); ++k)
      for (SparseMat::InnerIterator it(s, k); it; ++it)
        t.emplace_back(c * s.rows() + it.row(), c * s.cols() + it.col(), it.value());
  return from_triplets(components * s.rows(), components * s.cols(), t);
}

/// Row-wise |A| |x|, the natural scale of A x for relative residuals.
inline Vec abs_product(const SparseMat& a, const Vec& x) {
  Vec out = Vec::Zero(a.rows());
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMat::InnerIterator it(a, k); it; ++it)
      out[it.row()] += std::abs(it.value()) * std::abs(x[it.col()]);
  return out;
}

inline void write_matrix_market(std::ostream& os, const SparseMat& a) {
  char buf[96];
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << " " << a.cols() << " " << a.nonZeros() << "\n";
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMat::InnerIterator it(a, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row() + 1),
                    static_cast<long>(it.col() + 1), it.value());
      os << buf;
    }
}

inline void write_matrix_market(const std::string& path, const SparseMat& a) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_matrix_market(os, a);
  if (!os) throw IoError("write failed for '" + path + "'");
}

}  // namespace fdlm
