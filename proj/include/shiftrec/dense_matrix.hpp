#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

#include "shiftrec/types.hpp"

namespace shiftrec {

/// Column-major dense matrix of complex scalars.  Houses every small matrix
/// the solvers manipulate (Krylov bases, Hessenberg matrices, recycle bases,
/// coupling blocks) as a plain value type.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, Complex(0.0, 0.0)) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  Complex& operator()(std::size_t i, std::size_t j) {
    return data_[j * rows_ + i];
  }
  const Complex& operator()(std::size_t i, std::size_t j) const {
    return data_[j * rows_ + i];
  }

  std::span<Complex> column_span(std::size_t j) {
    return std::span<Complex>(data_.data() + j * rows_, rows_);
  }
  std::span<const Complex> column_span(std::size_t j) const {
    return std::span<const Complex>(data_.data() + j * rows_, rows_);
  }

  Vector column(std::size_t j) const {
    auto s = column_span(j);
    return Vector(s.begin(), s.end());
  }

  void set_column(std::size_t j, const Vector& v) {
    if (v.size() != rows_) throw DimensionMismatch("set_column: size mismatch");
    std::copy(v.begin(), v.end(), column_span(j).begin());
  }

  /// Matrix with columns [lo, hi) of this one.
  DenseMatrix columns(std::size_t lo, std::size_t hi) const {
    DenseMatrix out(rows_, hi - lo);
    for (std::size_t j = lo; j < hi; ++j) {
      auto src = column_span(j);
      std::copy(src.begin(), src.end(), out.column_span(j - lo).begin());
    }
    return out;
  }

  const std::vector<Complex>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

inline DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matmul: inner dims");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const Complex blj = b(l, j);
      if (blj == Complex(0.0, 0.0)) continue;
      for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) += a(i, l) * blj;
    }
  return c;
}

inline Vector operator*(const DenseMatrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw DimensionMismatch("matvec: inner dims");
  Vector y = zeros(a.rows());
  for (std::size_t l = 0; l < a.cols(); ++l) {
    const Complex xl = x[l];
    if (xl == Complex(0.0, 0.0)) continue;
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] += a(i, l) * xl;
  }
  return y;
}

/// a^* b without forming the adjoint.
inline DenseMatrix adjoint_times(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw DimensionMismatch("adjoint_times: rows");
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      Complex s(0.0, 0.0);
      for (std::size_t l = 0; l < a.rows(); ++l)
        s += std::conj(a(l, i)) * b(l, j);
      c(i, j) = s;
    }
  return c;
}

inline Vector adjoint_times(const DenseMatrix& a, const Vector& x) {
  if (a.rows() != x.size()) throw DimensionMismatch("adjoint_times: rows");
  Vector y = zeros(a.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    Complex s(0.0, 0.0);
    for (std::size_t l = 0; l < a.rows(); ++l) s += std::conj(a(l, i)) * x[l];
    y[i] = s;
  }
  return y;
}

inline DenseMatrix adjoint(const DenseMatrix& a) {
  DenseMatrix c(a.cols(), a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) c(j, i) = std::conj(a(i, j));
  return c;
}

inline DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch("add: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) += b(i, j);
  return c;
}

inline DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch("sub: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) -= b(i, j);
  return c;
}

inline DenseMatrix operator*(Complex alpha, const DenseMatrix& a) {
  DenseMatrix c = a;
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) *= alpha;
  return c;
}

inline double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) s += std::norm(a(i, j));
  return std::sqrt(s);
}

inline DenseMatrix hcat(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.rows() != b.rows()) throw DimensionMismatch("hcat: rows");
  DenseMatrix c(a.rows(), a.cols() + b.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    auto src = a.column_span(j);
    std::copy(src.begin(), src.end(), c.column_span(j).begin());
  }
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto src = b.column_span(j);
    std::copy(src.begin(), src.end(), c.column_span(a.cols() + j).begin());
  }
  return c;
}

inline DenseMatrix from_columns(const std::vector<Vector>& cols) {
  if (cols.empty()) return DenseMatrix();
  DenseMatrix m(cols.front().size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) m.set_column(j, cols[j]);
  return m;
}

}  // namespace shiftrec
