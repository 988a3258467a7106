#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <limits>

#include "shiftrec/dense_matrix.hpp"
#include "shiftrec/qr.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

struct EigResult {
  Vector values;        // sorted by |lambda| ascending
  DenseMatrix vectors;  // column i pairs with values[i], unit norm
};

namespace detail {

// Complex Givens rotation: c real, s complex, c^2 + |s|^2 = 1 and
// [c s; -conj(s) c] [a; b] = [r; 0].
inline void make_givens(Complex a, Complex b, double& c, Complex& s) {
  const double aa = std::abs(a), ab = std::abs(b);
  if (ab == 0.0) {
    c = 1.0;
    s = Complex(0.0, 0.0);
    return;
  }
  if (aa == 0.0) {
    c = 0.0;
    s = Complex(1.0, 0.0) * (std::conj(b) / ab);
    return;
  }
  const double t = std::sqrt(aa * aa + ab * ab);
  c = aa / t;
  s = (a / aa) * std::conj(b) / t;
}

}  // namespace detail

/// Dense eigensolver for small general complex matrices: Householder
/// reduction to Hessenberg form, then single-shift QR iteration with
/// deflation, accumulating the Schur basis.  Eigenvectors come from back
/// substitution on the triangular Schur factor.  Sizes here never exceed
/// k + m + 1, so a dense O(n^3) routine is the right tool.
inline EigResult eig_small(const DenseMatrix& m, std::size_t max_order = 512) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw DimensionMismatch("eig_small: square input");
  if (n > max_order) throw DimensionMismatch("eig_small: order above cap");
  if (n == 0) return EigResult{};

  const double mscale = frobenius_norm(m);
  DenseMatrix h = m;
  DenseMatrix z = DenseMatrix::identity(n);

  // Reduce to upper Hessenberg by unitary similarity.
  for (std::size_t j = 0; j + 2 < n; ++j) {
    Vector x(n - j - 1);
    for (std::size_t i = j + 1; i < n; ++i) x[i - j - 1] = h(i, j);
    detail::Reflector r = detail::make_reflector(x);
    if (r.tau == Complex(0.0, 0.0)) continue;
    detail::apply_reflector_left(h, r.v, r.tau, j + 1, j);
    // Right application: h <- h (I - conj(tau) v v^*), and same on z.
    for (DenseMatrix* target : {&h, &z}) {
      DenseMatrix& a = *target;
      for (std::size_t i = 0; i < n; ++i) {
        Complex sdot(0.0, 0.0);
        for (std::size_t l = j + 1; l < n; ++l)
          sdot += a(i, l) * r.v[l - j - 1];
        sdot *= std::conj(r.tau);
        for (std::size_t l = j + 1; l < n; ++l)
          a(i, l) -= sdot * std::conj(r.v[l - j - 1]);
      }
    }
    for (std::size_t i = j + 2; i < n; ++i) h(i, j) = Complex(0.0, 0.0);
  }

  const double eps = std::numeric_limits<double>::epsilon();
  std::size_t hi = n - 1;
  std::size_t iter = 0;
  const std::size_t iter_cap = 80;

  while (true) {
    // Deflate trailing 1x1 blocks.
    while (hi > 0) {
      const double off = std::abs(h(hi, hi - 1));
      const double local =
          std::abs(h(hi - 1, hi - 1)) + std::abs(h(hi, hi));
      if (off <= eps * std::max(local, mscale)) {
        h(hi, hi - 1) = Complex(0.0, 0.0);
        --hi;
        iter = 0;
      } else {
        break;
      }
    }
    if (hi == 0) break;

    // Active block [lo, hi].
    std::size_t lo = hi;
    while (lo > 0) {
      const double off = std::abs(h(lo, lo - 1));
      const double local = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
      if (off <= eps * std::max(local, mscale)) {
        h(lo, lo - 1) = Complex(0.0, 0.0);
        break;
      }
      --lo;
    }

    if (++iter > iter_cap)
      throw EigFailedError("eig_small: QR iteration did not converge");

    // Wilkinson shift from the trailing 2x2; exceptional shift when stuck.
    Complex mu;
    if (iter % 12 == 0) {
      mu = h(hi, hi) + 0.75 * std::abs(h(hi, hi - 1));
    } else {
      const Complex a = h(hi - 1, hi - 1), b = h(hi - 1, hi);
      const Complex c = h(hi, hi - 1), d = h(hi, hi);
      const Complex tr = a + d;
      const Complex disc = std::sqrt(tr * tr - 4.0 * (a * d - b * c));
      const Complex mu1 = 0.5 * (tr + disc), mu2 = 0.5 * (tr - disc);
      mu = (std::abs(mu1 - d) < std::abs(mu2 - d)) ? mu1 : mu2;
    }

    // Explicit-shift QR sweep on the block, similarity applied to all of h.
    for (std::size_t i = lo; i <= hi; ++i) h(i, i) -= mu;
    std::vector<double> cs(hi);
    std::vector<Complex> sn(hi);
    for (std::size_t i = lo; i < hi; ++i) {
      detail::make_givens(h(i, i), h(i + 1, i), cs[i], sn[i]);
      for (std::size_t j = i; j < n; ++j) {
        const Complex t1 = h(i, j), t2 = h(i + 1, j);
        h(i, j) = cs[i] * t1 + sn[i] * t2;
        h(i + 1, j) = -std::conj(sn[i]) * t1 + cs[i] * t2;
      }
    }
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t row_end = std::min(i + 2, hi);
      for (std::size_t r = 0; r <= row_end; ++r) {
        const Complex t1 = h(r, i), t2 = h(r, i + 1);
        h(r, i) = cs[i] * t1 + std::conj(sn[i]) * t2;
        h(r, i + 1) = -sn[i] * t1 + cs[i] * t2;
      }
      for (std::size_t r = 0; r < n; ++r) {
        const Complex t1 = z(r, i), t2 = z(r, i + 1);
        z(r, i) = cs[i] * t1 + std::conj(sn[i]) * t2;
        z(r, i + 1) = -sn[i] * t1 + cs[i] * t2;
      }
    }
    for (std::size_t i = lo; i <= hi; ++i) h(i, i) += mu;
  }

  // Eigenvectors of the triangular factor by back substitution, lifted by z.
  const double tiny = 1e-300;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Complex la = h(a, a), lb = h(b, b);
    const double ma = std::abs(la), mb = std::abs(lb);
    if (ma != mb) return ma < mb;
    if (la.real() != lb.real()) return la.real() < lb.real();
    return la.imag() < lb.imag();
  });

  EigResult out;
  out.values.resize(n);
  out.vectors = DenseMatrix(n, n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const std::size_t i = order[idx];
    const Complex lambda = h(i, i);
    Vector y = zeros(n);
    y[i] = Complex(1.0, 0.0);
    for (std::size_t r = i; r-- > 0;) {
      Complex s(0.0, 0.0);
      for (std::size_t l = r + 1; l <= i; ++l) s += h(r, l) * y[l];
      Complex den = h(r, r) - lambda;
      if (std::abs(den) < eps * mscale)
        den = Complex(eps * mscale + tiny, 0.0);
      y[r] = -s / den;
    }
    Vector v = z * y;
    const double nv = norm2(v);
    if (nv > 0.0) scal(Complex(1.0 / nv, 0.0), v);
    out.values[idx] = lambda;
    out.vectors.set_column(idx, v);
  }
  return out;
}

}  // namespace shiftrec
