#pragma once

#include <cmath>
#include <cstddef>

#include "shiftrec/dense_matrix.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

/// Relative tolerance under which a QR (or LU) pivot marks rank deficiency.
inline constexpr double kRankTol = 1e-14;

struct QRFactors {
  DenseMatrix Q;  // orthonormal columns
  DenseMatrix R;  // upper triangular, real non-negative diagonal
};

namespace detail {

// Complex elementary reflector: computes v (v[0] = 1) and tau so that
// (I - tau v v^*) x = beta e_1 with beta real.
struct Reflector {
  Vector v;
  Complex tau;
  double beta;
};

inline Reflector make_reflector(const Vector& x) {
  Reflector r;
  r.v = x;
  const std::size_t m = x.size();
  double tail = 0.0;
  for (std::size_t i = 1; i < m; ++i) tail += std::norm(x[i]);
  const Complex alpha = x[0];
  if (tail == 0.0 && alpha.imag() == 0.0) {
    r.tau = Complex(0.0, 0.0);
    r.beta = alpha.real();
    r.v[0] = Complex(1.0, 0.0);
    return r;
  }
  double beta = std::sqrt(std::norm(alpha) + tail);
  if (alpha.real() > 0.0) beta = -beta;
  r.tau = Complex((beta - alpha.real()) / beta, alpha.imag() / beta);
  const Complex denom = alpha - beta;
  r.v[0] = Complex(1.0, 0.0);
  for (std::size_t i = 1; i < m; ++i) r.v[i] = x[i] / denom;
  r.beta = beta;
  return r;
}

// Apply (I - tau v v^*) to the columns [col_lo, cols) of a, rows [row_lo, ..).
inline void apply_reflector_left(DenseMatrix& a, const Vector& v, Complex tau,
                                 std::size_t row_lo, std::size_t col_lo) {
  if (tau == Complex(0.0, 0.0)) return;
  const std::size_t m = a.rows();
  for (std::size_t j = col_lo; j < a.cols(); ++j) {
    Complex s(0.0, 0.0);
    for (std::size_t i = row_lo; i < m; ++i)
      s += std::conj(v[i - row_lo]) * a(i, j);
    s *= tau;
    for (std::size_t i = row_lo; i < m; ++i) a(i, j) -= s * v[i - row_lo];
  }
}

}  // namespace detail

/// Householder thin QR of an m x p matrix (m >= p).  Deterministic sign
/// convention: diag(R) is real and non-negative, so factors are reproducible
/// across runs.  Throws RankDeficientError when a diagonal of R falls below
/// kRankTol * ||M||_F.
inline QRFactors thin_qr(const DenseMatrix& m) {
  const std::size_t rows = m.rows(), cols = m.cols();
  if (rows < cols) throw DimensionMismatch("thin_qr: rows < cols");
  const double scale = frobenius_norm(m);

  DenseMatrix work = m;
  std::vector<detail::Reflector> refl;
  refl.reserve(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    Vector x(rows - j);
    for (std::size_t i = j; i < rows; ++i) x[i - j] = work(i, j);
    detail::Reflector r = detail::make_reflector(x);
    detail::apply_reflector_left(work, r.v, r.tau, j, j + 1);
    work(j, j) = r.beta;
    for (std::size_t i = j + 1; i < rows; ++i) work(i, j) = Complex(0.0, 0.0);
    refl.push_back(std::move(r));
  }

  DenseMatrix r_fact(cols, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i <= j; ++i) r_fact(i, j) = work(i, j);

  for (std::size_t j = 0; j < cols; ++j)
    if (std::abs(r_fact(j, j)) < kRankTol * scale)
      throw RankDeficientError("thin_qr: rank deficient at column " +
                               std::to_string(j));

  // Q = H_1^* ... H_p^* [I; 0], applied back to front.
  DenseMatrix q(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) q(j, j) = Complex(1.0, 0.0);
  for (std::size_t j = cols; j-- > 0;)
    detail::apply_reflector_left(q, refl[j].v, std::conj(refl[j].tau), j, 0);

  // Make diag(R) non-negative (beta may be negative by construction).
  for (std::size_t j = 0; j < cols; ++j) {
    if (r_fact(j, j).real() < 0.0) {
      for (std::size_t l = j; l < cols; ++l) r_fact(j, l) = -r_fact(j, l);
      for (std::size_t i = 0; i < rows; ++i) q(i, j) = -q(i, j);
    }
    r_fact(j, j) = Complex(std::abs(r_fact(j, j)), 0.0);
  }
  return QRFactors{std::move(q), std::move(r_fact)};
}

/// Back substitution for upper-triangular R.
inline Vector solve_upper_triangular(const DenseMatrix& r, const Vector& b) {
  const std::size_t n = r.rows();
  if (r.cols() != n) throw DimensionMismatch("solve_upper_triangular: square");
  if (b.size() != n) throw DimensionMismatch("solve_upper_triangular: rhs");
  Vector x(b);
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) x[i] -= r(i, j) * x[j];
    if (std::abs(r(i, i)) == 0.0)
      throw SingularError("solve_upper_triangular: zero diagonal");
    x[i] /= r(i, i);
  }
  return x;
}

/// Solve X R = B for X (columns of B swept left to right).
inline DenseMatrix right_solve_upper(const DenseMatrix& b,
                                     const DenseMatrix& r) {
  const std::size_t p = r.rows();
  if (r.cols() != p || b.cols() != p)
    throw DimensionMismatch("right_solve_upper: dims");
  DenseMatrix x(b.rows(), p);
  for (std::size_t j = 0; j < p; ++j) {
    if (std::abs(r(j, j)) == 0.0)
      throw SingularError("right_solve_upper: zero diagonal");
    for (std::size_t i = 0; i < b.rows(); ++i) {
      Complex s = b(i, j);
      for (std::size_t l = 0; l < j; ++l) s -= x(i, l) * r(l, j);
      x(i, j) = s / r(j, j);
    }
  }
  return x;
}

/// Minimum-norm-residual solution of min ||M x - b||, rows >= cols, via
/// Householder QR.  Rank deficiency propagates from thin_qr.
inline Vector least_squares(const DenseMatrix& m, const Vector& b) {
  if (m.rows() < m.cols()) throw DimensionMismatch("least_squares: shape");
  if (b.size() != m.rows()) throw DimensionMismatch("least_squares: rhs");
  QRFactors qr = thin_qr(m);
  return solve_upper_triangular(qr.R, adjoint_times(qr.Q, b));
}

}  // namespace shiftrec
