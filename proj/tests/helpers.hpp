#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "rcwalk/lattice.hpp"

namespace testutil {

using rcwalk::Edge;
using rcwalk::LatticePoint;

// Two-point field whose edges inside [-radius, radius]^2 are pinned: closed
// (kappa) where the predicate says so, open otherwise.
inline rcwalk::ConductanceField pinned_field(double kappa, std::int64_t radius,
                                             const std::function<bool(const Edge&)>& closed,
                                             std::uint64_t seed = 1) {
  rcwalk::ConductanceField base(rcwalk::TwoPoint{0.5, kappa}, 2, seed);
  rcwalk::EdgeOverrides pins;
  for (std::int64_t x = -radius; x <= radius; ++x)
    for (std::int64_t y = -radius; y <= radius; ++y)
      for (int axis = 0; axis < 2; ++axis) {
        Edge e{LatticePoint{x, y}, axis};
        pins[e] = closed(e) ? kappa : 1.0;
      }
  return base.with_overrides(pins);
}

inline bool touches(const Edge& e, const LatticePoint& z) { return e.base == z || e.head() == z; }

inline bool same_edge(const Edge& e, const LatticePoint& a, const LatticePoint& b) {
  return e == rcwalk::canonical_edge(a, b);
}

// Direct scan of max_{k<n-1} Y_k < Y_{n-1} < Y_n < min_{n<k<=last} Y_k.
inline std::vector<std::int64_t> brute_super_regenerations(const std::vector<std::int64_t>& y) {
  std::vector<std::int64_t> out;
  for (std::size_t n = 1; n < y.size(); ++n) {
    bool ok = y[n - 1] < y[n];
    for (std::size_t k = 0; ok && k + 1 < n; ++k) ok = y[k] < y[n - 1];
    for (std::size_t k = n + 1; ok && k < y.size(); ++k) ok = y[n] < y[k];
    if (ok) out.push_back(static_cast<std::int64_t>(n));
  }
  return out;
}

inline std::vector<std::int64_t> brute_fresh(const std::vector<std::int64_t>& e1) {
  std::vector<std::int64_t> out;
  for (std::size_t n = 1; n < e1.size(); ++n) {
    bool ok = true;
    for (std::size_t k = 0; k < n; ++k) ok = ok && e1[n] > e1[k];
    if (ok) out.push_back(static_cast<std::int64_t>(n));
  }
  return out;
}

// Fresh epochs never revisited within the observed path.
inline std::vector<std::int64_t> brute_regenerations(const std::vector<std::int64_t>& e1) {
  std::vector<std::int64_t> out;
  for (auto n : brute_fresh(e1)) {
    bool ok = true;
    for (std::size_t k = static_cast<std::size_t>(n) + 1; k < e1.size(); ++k) ok = ok && e1[k] > e1[n];
    if (ok) out.push_back(n);
  }
  return out;
}

// Gaussian elimination with partial pivoting; A is row-major n x n.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

}  // namespace testutil
