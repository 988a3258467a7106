#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

#include "shiftrec/dense_matrix.hpp"
#include "shiftrec/operator_handle.hpp"
#include "shiftrec/qr.hpp"
#include "shiftrec/subspace_angles.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

/// Subdiagonal threshold (relative to the unorthogonalized vector norm)
/// below which the Arnoldi process declares a happy breakdown.
inline constexpr double kBreakdownTol = 1e-14;

/// Pair (U, C) with A U = C and C^* C = I.  C's span is what the projector
/// I - C C^* removes; U maps coefficients back to solution updates.
struct RecycleSpace {
  DenseMatrix U;
  DenseMatrix C;

  std::size_t k() const { return U.cols(); }

  /// Normalize a raw basis against an operator: C R = qr(A Utilde),
  /// U = Utilde R^{-1}.  Costs k counted operator applications.
  static RecycleSpace from_basis(const ShiftedOperator& op,
                                 const DenseMatrix& u_tilde) {
    DenseMatrix au = op.apply_block(u_tilde);
    const double scale = frobenius_norm(au);
    QRFactors qr = thin_qr(au);
    if (frobenius_norm(au - qr.Q * qr.R) > 1e-10 * scale)
      throw LinalgError("RecycleSpace: QR recomposition check failed");
    return RecycleSpace{right_solve_upper(u_tilde, qr.R), std::move(qr.Q)};
  }

  /// Re-base a space valid for A onto A + sigma I without touching the
  /// operator: (A + sigma I) U = C + sigma U exactly, then re-orthonormalize.
  RecycleSpace rebased(Complex sigma) const {
    if (sigma == Complex(0.0, 0.0)) return *this;
    DenseMatrix shifted = C + sigma * U;
    QRFactors qr = thin_qr(shifted);
    return RecycleSpace{right_solve_upper(U, qr.R), std::move(qr.Q)};
  }
};

/// Krylov data for one cycle of the (possibly deflated) Arnoldi process on
/// P A = (I - C C^*) A.
///
///   A V_s = C B + V H        (s = steps; V has H.rows() columns)
///
/// Without breakdown H is (s+1) x s upper Hessenberg and V is n x (s+1).
/// On a happy breakdown the trailing row of H (and column of V) is dropped,
/// so H is s x s and the spanned space is A-invariant.
struct ArnoldiDecomposition {
  DenseMatrix V;
  DenseMatrix H;
  DenseMatrix B;  // k x s, C^* A V_s; k = 0 when no recycle space
  double beta0 = 0.0;
  bool breakdown = false;
  std::size_t steps = 0;

  std::size_t k() const { return B.rows(); }
};

/// Arnoldi on the projected operator: modified Gram-Schmidt against C, then
/// against prior Krylov vectors, with one reorthogonalization pass whenever
/// the norm drops below 1/sqrt(2) of its pre-orthogonalization value.
/// Requires r0 already orthogonal to C (within 1e-8 relative).
///
/// A positive stop_norm enables the progressive Givens residual monitor:
/// the cycle is truncated as soon as the minimal-residual norm over the
/// space built so far falls below it, so converged solves never pay for the
/// full cycle length.
inline ArnoldiDecomposition build_deflated_arnoldi(const ShiftedOperator& op,
                                                   const RecycleSpace* recycle,
                                                   const Vector& r0,
                                                   std::size_t m,
                                                   double stop_norm = 0.0) {
  const std::size_t n = op.size();
  const std::size_t k = recycle ? recycle->k() : 0;
  if (m < 1) throw DimensionMismatch("arnoldi: m >= 1 required");
  const double beta0 = norm2(r0);
  if (beta0 == 0.0) throw DimensionMismatch("arnoldi: zero start vector");
  if (k > 0) {
    const Vector proj = adjoint_times(recycle->C, r0);
    if (norm2(proj) > 1e-8 * beta0)
      throw DimensionMismatch("arnoldi: start vector not orthogonal to C");
  }

  std::vector<Vector> v;
  v.reserve(m + 1);
  v.push_back(scaled(r0, Complex(1.0 / beta0, 0.0)));

  DenseMatrix h(m + 1, m);
  DenseMatrix b(k, m);
  bool breakdown = false;
  std::size_t steps = 0;

  // Progressive Givens factorization of H, monitoring only: rotated_rhs
  // carries the least-squares residual norm of the cycle so far.
  std::vector<double> givens_c(m);
  std::vector<Complex> givens_s(m);
  Vector rotated_rhs = zeros(m + 1);
  rotated_rhs[0] = Complex(beta0, 0.0);

  for (std::size_t j = 0; j < m; ++j) {
    Vector w = op.apply(v[j]);
    const double prenorm = norm2(w);

    auto sweep = [&](bool accumulate) {
      if (k > 0) {
        for (std::size_t i = 0; i < k; ++i) {
          const Complex coeff = dot(recycle->C.column(i), w);
          axpy(-coeff, recycle->C.column(i), w);
          if (accumulate) b(i, j) += coeff;
        }
      }
      for (std::size_t i = 0; i <= j; ++i) {
        const Complex coeff = dot(v[i], w);
        axpy(-coeff, v[i], w);
        if (accumulate) h(i, j) += coeff;
      }
    };
    sweep(true);
    double hnext = norm2(w);
    if (hnext < prenorm / std::sqrt(2.0)) {  // Kahan-Parlett
      sweep(true);
      hnext = norm2(w);
    }

    steps = j + 1;
    if (hnext <= kBreakdownTol * prenorm || prenorm == 0.0) {
      breakdown = true;
      break;
    }
    h(j + 1, j) = hnext;
    v.push_back(scaled(w, Complex(1.0 / hnext, 0.0)));

    if (stop_norm > 0.0) {
      Vector col(j + 2);
      for (std::size_t i = 0; i <= j + 1; ++i) col[i] = h(i, j);
      for (std::size_t i = 0; i < j; ++i) {
        const Complex t1 = col[i], t2 = col[i + 1];
        col[i] = givens_c[i] * t1 + givens_s[i] * t2;
        col[i + 1] = -std::conj(givens_s[i]) * t1 + givens_c[i] * t2;
      }
      detail::make_givens(col[j], col[j + 1], givens_c[j], givens_s[j]);
      rotated_rhs[j + 1] = -std::conj(givens_s[j]) * rotated_rhs[j];
      rotated_rhs[j] = givens_c[j] * rotated_rhs[j];
      if (std::abs(rotated_rhs[j + 1]) <= stop_norm) break;
    }
  }

  ArnoldiDecomposition d;
  d.beta0 = beta0;
  d.breakdown = breakdown;
  d.steps = steps;
  const std::size_t hrows = breakdown ? steps : steps + 1;
  d.V = DenseMatrix(n, hrows);
  for (std::size_t j = 0; j < hrows; ++j) d.V.set_column(j, v[j]);
  d.H = DenseMatrix(hrows, steps);
  for (std::size_t col = 0; col < steps; ++col)
    for (std::size_t row = 0; row < std::min(hrows, col + 2); ++row)
      d.H(row, col) = h(row, col);
  d.B = DenseMatrix(k, steps);
  for (std::size_t col = 0; col < steps; ++col)
    for (std::size_t row = 0; row < k; ++row) d.B(row, col) = b(row, col);
  return d;
}

/// H + [sigma I; 0]: the Hessenberg matrix of A + sigma I on the same basis.
inline DenseMatrix shifted_hessenberg(const DenseMatrix& h, Complex sigma) {
  DenseMatrix out = h;
  for (std::size_t j = 0; j < h.cols(); ++j) out(j, j) += sigma;
  return out;
}

/// The augmented-space matrix G = [[I_k, B], [0, H]], so that
/// A [U V_s] = [C V] G.
inline DenseMatrix assemble_augmented(const ArnoldiDecomposition& d) {
  const std::size_t k = d.k();
  DenseMatrix g(k + d.H.rows(), k + d.steps);
  for (std::size_t i = 0; i < k; ++i) g(i, i) = Complex(1.0, 0.0);
  for (std::size_t j = 0; j < d.steps; ++j) {
    for (std::size_t i = 0; i < k; ++i) g(i, k + j) = d.B(i, j);
    for (std::size_t i = 0; i < d.H.rows(); ++i) g(k + i, k + j) = d.H(i, j);
  }
  return g;
}

/// Largest principal angle between K_m(P A, v) and K_m(P (A + sigma I), v).
/// Test instrumentation for the projected shift-invariance property; the
/// angle vanishes exactly when v is orthogonal to the span of C.
inline double check_shift_invariance(const SparseMatrix& a,
                                     const DenseMatrix& c, const Vector& v,
                                     std::size_t m, Complex sigma) {
  MatvecCounter counter;
  ShiftedOperator base(a, counter);
  std::optional<RecycleSpace> rec;
  const RecycleSpace* rec_ptr = nullptr;
  if (c.cols() > 0) {
    // U is irrelevant for basis construction; only C enters the projector.
    rec = RecycleSpace{DenseMatrix(c.rows(), c.cols()), c};
    rec_ptr = &*rec;
  }
  ArnoldiDecomposition d0 = build_deflated_arnoldi(base, rec_ptr, v, m);
  ArnoldiDecomposition d1 =
      build_deflated_arnoldi(base.rebased(sigma), rec_ptr, v, m);
  const std::size_t cols = std::min(d0.steps, d1.steps);
  return largest_principal_angle(d0.V.columns(0, cols),
                                 d1.V.columns(0, cols));
}

}  // namespace shiftrec
