#pragma once

#include <cstdint>

#include "shiftrec/dense_matrix.hpp"
#include "shiftrec/sparse_matrix.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

/// Running total of sparse operator applications.  Every application of the
/// base matrix counts exactly one, shifted or not; block products of width k
/// count k.  This is the cost metric every benchmark comparison uses.
struct MatvecCounter {
  long long count = 0;
};

/// A view of (A + base_shift * I) that routes all applications through a
/// shared counter.  Recursion over shifted families only ever re-bases the
/// shift; the underlying matrix is never copied.
class ShiftedOperator {
 public:
  ShiftedOperator(const SparseMatrix& a, MatvecCounter& counter,
                  Complex base_shift = Complex(0.0, 0.0))
      : a_(&a), counter_(&counter), base_shift_(base_shift) {}

  std::size_t size() const { return a_->rows(); }
  Complex base_shift() const { return base_shift_; }
  const SparseMatrix& matrix() const { return *a_; }
  MatvecCounter& counter() const { return *counter_; }

  /// (A + (base_shift + extra) I) v.  One counted application.
  Vector apply(const Vector& v, Complex extra = Complex(0.0, 0.0)) const {
    ++counter_->count;
    Vector y = a_->apply(v);
    const Complex s = base_shift_ + extra;
    if (s != Complex(0.0, 0.0)) axpy(s, v, y);
    return y;
  }

  /// Block product; counts one application per column.
  DenseMatrix apply_block(const DenseMatrix& m,
                          Complex extra = Complex(0.0, 0.0)) const {
    DenseMatrix out(m.rows(), m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j)
      out.set_column(j, apply(m.column(j), extra));
    return out;
  }

  Vector residual(const Vector& b, const Vector& x,
                  Complex extra = Complex(0.0, 0.0)) const {
    return vsub(b, apply(x, extra));
  }

  /// Same matrix and counter, shift moved by extra.
  ShiftedOperator rebased(Complex extra) const {
    return ShiftedOperator(*a_, *counter_, base_shift_ + extra);
  }

 private:
  const SparseMatrix* a_;
  MatvecCounter* counter_;
  Complex base_shift_;
};

}  // namespace shiftrec
