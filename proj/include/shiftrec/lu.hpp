#pragma once

#include <cmath>
#include <cstddef>

#include "shiftrec/dense_matrix.hpp"
#include "shiftrec/qr.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

/// Dense solve with partial pivoting.  A pivot below kRankTol * ||M||_F
/// raises SingularError; for the augmented collinearity systems that signal
/// carries meaning (the collinear residual does not exist) and callers catch
/// it rather than treating it as corruption.
inline DenseMatrix solve_square_multi(const DenseMatrix& m,
                                      const DenseMatrix& rhs) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw DimensionMismatch("solve_square: square input");
  if (rhs.rows() != n) throw DimensionMismatch("solve_square: rhs rows");
  const double pivot_floor = kRankTol * frobenius_norm(m);

  DenseMatrix a = m;
  DenseMatrix x = rhs;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double cand = std::abs(a(i, k));
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (best < pivot_floor || best == 0.0)
      throw SingularError("solve_square: numerically singular at step " +
                          std::to_string(k));
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const Complex f = a(i, k) / a(k, k);
      if (f == Complex(0.0, 0.0)) continue;
      a(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t i = n; i-- > 0;) {
      Complex s = x(i, j);
      for (std::size_t l = i + 1; l < n; ++l) s -= a(i, l) * x(l, j);
      x(i, j) = s / a(i, i);
    }
  }
  return x;
}

inline Vector solve_square(const DenseMatrix& m, const Vector& b) {
  DenseMatrix rhs(b.size(), 1);
  rhs.set_column(0, b);
  return solve_square_multi(m, rhs).column(0);
}

}  // namespace shiftrec
