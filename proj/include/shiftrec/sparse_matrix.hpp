#pragma once

#include <algorithm>
#include <cstddef>
#include <tuple>
#include <vector>

#include "shiftrec/dense_matrix.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  Complex value;
};

/// Compressed-row sparse matrix.  Column indices are strictly increasing
/// within each row; duplicate triplets are summed on construction.  Products
/// use a fixed summation order (row order, then index order) so results are
/// bit-reproducible across runs.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets) {
    for (const Triplet& t : triplets)
      if (t.row >= rows || t.col >= cols)
        throw DimensionMismatch("from_triplets: entry out of bounds");
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) {
                return std::tie(a.row, a.col) < std::tie(b.row, b.col);
              });
    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.row_start_.assign(rows + 1, 0);
    for (std::size_t i = 0; i < triplets.size();) {
      std::size_t j = i + 1;
      Complex v = triplets[i].value;
      while (j < triplets.size() && triplets[j].row == triplets[i].row &&
             triplets[j].col == triplets[i].col) {
        v += triplets[j].value;  // Matrix Market convention: duplicates sum
        ++j;
      }
      m.col_index_.push_back(triplets[i].col);
      m.values_.push_back(v);
      ++m.row_start_[triplets[i].row + 1];
      i = j;
    }
    for (std::size_t r = 0; r < rows; ++r) m.row_start_[r + 1] += m.row_start_[r];
    return m;
  }

  static SparseMatrix identity(std::size_t n) {
    std::vector<Triplet> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = {i, i, Complex(1.0, 0.0)};
    return from_triplets(n, n, std::move(t));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  Vector apply(const Vector& v) const {
    if (v.size() != cols_) throw DimensionMismatch("sparse apply: dims");
    Vector y = zeros(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
      Complex s(0.0, 0.0);
      for (std::size_t p = row_start_[r]; p < row_start_[r + 1]; ++p)
        s += values_[p] * v[col_index_[p]];
      y[r] = s;
    }
    return y;
  }

  /// Visit stored entries in (row, col) order.
  template <typename F>
  void for_each_entry(F&& f) const {
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t p = row_start_[r]; p < row_start_[r + 1]; ++p)
        f(r, col_index_[p], values_[p]);
  }

  const std::vector<std::size_t>& row_start() const { return row_start_; }
  const std::vector<std::size_t>& col_index() const { return col_index_; }
  const std::vector<Complex>& values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> col_index_;
  std::vector<Complex> values_;
};

inline DenseMatrix to_dense(const SparseMatrix& a) {
  DenseMatrix d(a.rows(), a.cols());
  a.for_each_entry(
      [&](std::size_t r, std::size_t c, Complex v) { d(r, c) += v; });
  return d;
}

}  // namespace shiftrec
