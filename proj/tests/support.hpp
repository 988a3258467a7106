#pragma once

// Shared helpers and independent oracles for the test suites.  Oracles here
// deliberately avoid the library's factorization code paths: linear systems
// are solved by plain Gauss-Jordan elimination written below, eigenvalues by
// characteristic polynomial + Durand-Kerner iteration.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "shiftrec/dense_matrix.hpp"
#include "shiftrec/problems.hpp"
#include "shiftrec/sparse_matrix.hpp"
#include "shiftrec/types.hpp"

namespace testsupport {

using shiftrec::Complex;
using shiftrec::DenseMatrix;
using shiftrec::SparseMatrix;
using shiftrec::SplitMix64;
using shiftrec::Triplet;
using shiftrec::Vector;

inline DenseMatrix random_dense(SplitMix64& rng, std::size_t rows,
                                std::size_t cols, bool complex_entries = true) {
  DenseMatrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i)
      m(i, j) = complex_entries ? rng.next_complex()
                                : Complex(rng.next_symmetric(), 0.0);
  return m;
}

inline Vector random_vector(SplitMix64& rng, std::size_t n,
                            bool complex_entries = true) {
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = complex_entries ? rng.next_complex()
                           : Complex(rng.next_symmetric(), 0.0);
  return v;
}

inline SparseMatrix random_sparse(SplitMix64& rng, std::size_t n,
                                  double extra_density = 0.2,
                                  bool complex_entries = true) {
  std::vector<Triplet> t;
  // Nonzero diagonal keeps random instances comfortably nonsingular.
  for (std::size_t i = 0; i < n; ++i)
    t.push_back({i, i, Complex(2.0 + rng.next_real(), 0.0)});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (rng.next_real() < extra_density)
        t.push_back({i, j, complex_entries
                               ? 0.5 * rng.next_complex()
                               : Complex(0.5 * rng.next_symmetric(), 0.0)});
    }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

/// Dense random matrix with field of values in the right half-plane:
/// identity plus a perturbation of norm < 1.
inline SparseMatrix random_positive_real(SplitMix64& rng, std::size_t n,
                                         double radius = 0.45) {
  DenseMatrix r = random_dense(rng, n, n);
  const double scale = radius / shiftrec::frobenius_norm(r);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Complex v = scale * r(i, j);
      if (i == j) v += Complex(1.0, 0.0);
      t.push_back({i, j, v});
    }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

/// Independent dense solve: Gauss-Jordan with partial pivoting, no shared
/// code with the library kernels.
inline Vector naive_solve(DenseMatrix a, Vector b) {
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    const Complex d = a(k, k);
    for (std::size_t j = 0; j < n; ++j) a(k, j) /= d;
    b[k] /= d;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      const Complex f = a(i, k);
      if (f == Complex(0.0, 0.0)) continue;
      for (std::size_t j = 0; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  return b;
}

/// Least squares through the normal equations (well-conditioned inputs only).
inline Vector normal_equations_solve(const DenseMatrix& m, const Vector& b) {
  return naive_solve(shiftrec::adjoint_times(m, m),
                     shiftrec::adjoint_times(m, b));
}

/// Characteristic polynomial coefficients by the Faddeev-LeVerrier
/// recursion: p(x) = x^n + c[0] x^{n-1} + ... + c[n-1].
inline std::vector<Complex> char_poly(const DenseMatrix& a) {
  const std::size_t n = a.rows();
  std::vector<Complex> c(n);
  DenseMatrix mk = a;
  for (std::size_t k = 1; k <= n; ++k) {
    Complex tr(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) tr += mk(i, i);
    c[k - 1] = -tr / static_cast<double>(k);
    if (k == n) break;
    DenseMatrix shifted = mk;
    for (std::size_t i = 0; i < n; ++i) shifted(i, i) += c[k - 1];
    mk = a * shifted;
  }
  return c;
}

/// Durand-Kerner root finder for a monic polynomial.
inline std::vector<Complex> poly_roots(const std::vector<Complex>& coeff) {
  const std::size_t n = coeff.size();
  auto eval = [&](Complex x) {
    Complex p(1.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) p = p * x + coeff[i];
    return p;
  };
  std::vector<Complex> z(n);
  Complex seed(0.4, 0.9);
  z[0] = seed;
  for (std::size_t i = 1; i < n; ++i) z[i] = z[i - 1] * seed;
  for (int iter = 0; iter < 1000; ++iter) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Complex denom(1.0, 0.0);
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) denom *= (z[i] - z[j]);
      const Complex delta = eval(z[i]) / denom;
      z[i] -= delta;
      worst = std::max(worst, std::abs(delta));
    }
    if (worst < 1e-14) break;
  }
  return z;
}

/// Eigenvalues by an entirely separate route from the QR iteration.
inline std::vector<Complex> eigenvalues_by_char_poly(const DenseMatrix& a) {
  return poly_roots(char_poly(a));
}

/// Greedy matching of two eigenvalue multisets; returns the largest
/// pairwise distance of the matching.
inline double spectrum_distance(std::vector<Complex> a,
                                std::vector<Complex> b) {
  double worst = 0.0;
  for (const Complex& x : a) {
    std::size_t best = 0;
    double bestd = 1e300;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double d = std::abs(x - b[i]);
      if (d < bestd) {
        bestd = d;
        best = i;
      }
    }
    worst = std::max(worst, bestd);
    b.erase(b.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return worst;
}

inline Vector dense_residual(const DenseMatrix& a, const Vector& x,
                             const Vector& b, Complex sigma = Complex(0, 0)) {
  Vector ax = a * x;
  if (sigma != Complex(0.0, 0.0)) shiftrec::axpy(sigma, x, ax);
  return shiftrec::vsub(b, ax);
}

/// Explicit shifted residual b - (A + sigma I) x through the raw sparse
/// product (never through the counted operator).
inline Vector sparse_residual(const SparseMatrix& a, const Vector& x,
                              const Vector& b, Complex sigma = Complex(0, 0)) {
  Vector ax = a.apply(x);
  if (sigma != Complex(0.0, 0.0)) shiftrec::axpy(sigma, x, ax);
  return shiftrec::vsub(b, ax);
}

}  // namespace testsupport
