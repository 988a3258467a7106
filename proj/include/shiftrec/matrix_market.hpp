#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "shiftrec/sparse_matrix.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

namespace detail {

inline std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(
      static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// Reads a Matrix Market coordinate file (real, integer or complex field;
/// general, symmetric, skew-symmetric or hermitian storage).  Symmetric
/// storage is expanded; duplicate entries are summed.  Pattern matrices and
/// array format are not supported.
inline SparseMatrix load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);

  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line)) throw ParseError("empty file", 1);
  ++lineno;
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (detail::lowercase(tag) != "%%matrixmarket" ||
      detail::lowercase(object) != "matrix")
    throw ParseError("not a Matrix Market matrix file", lineno);
  format = detail::lowercase(format);
  field = detail::lowercase(field);
  symmetry = detail::lowercase(symmetry);
  if (format != "coordinate")
    throw UnsupportedError("matrix market: only coordinate format supported");
  if (field == "pattern")
    throw UnsupportedError("matrix market: pattern field not supported");
  if (field != "real" && field != "integer" && field != "complex")
    throw ParseError("unknown field '" + field + "'", lineno);
  if (symmetry != "general" && symmetry != "symmetric" &&
      symmetry != "skew-symmetric" && symmetry != "hermitian")
    throw ParseError("unknown symmetry '" + symmetry + "'", lineno);

  // Size line (skipping comments and blanks).
  std::size_t rows = 0, cols = 0, nnz = 0;
  for (;;) {
    if (!std::getline(in, line)) throw ParseError("missing size line", lineno);
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream sizes(line);
    if (!(sizes >> rows >> cols >> nnz))
      throw ParseError("malformed size line", lineno);
    break;
  }

  std::vector<Triplet> triplets;
  triplets.reserve(symmetry == "general" ? nnz : 2 * nnz);
  std::size_t seen = 0;
  while (seen < nnz) {
    if (!std::getline(in, line))
      throw ParseError("unexpected end of file: expected " +
                           std::to_string(nnz) + " entries, got " +
                           std::to_string(seen),
                       lineno);
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream entry(line);
    std::size_t i = 0, j = 0;
    double re = 0.0, im = 0.0;
    if (!(entry >> i >> j >> re))
      throw ParseError("malformed entry", lineno);
    if (field == "complex" && !(entry >> im))
      throw ParseError("complex entry missing imaginary part", lineno);
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError("entry index out of range", lineno);
    ++seen;
    const Complex value(re, im);
    triplets.push_back({i - 1, j - 1, value});
    if (i != j) {
      if (symmetry == "symmetric")
        triplets.push_back({j - 1, i - 1, value});
      else if (symmetry == "hermitian")
        triplets.push_back({j - 1, i - 1, std::conj(value)});
      else if (symmetry == "skew-symmetric")
        triplets.push_back({j - 1, i - 1, -value});
    }
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(triplets));
}

/// Writes coordinate complex general with full (round-trippable) precision,
/// entries in row-major order.
inline void write_matrix_market(const std::string& path,
                                const SparseMatrix& a) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing", 0);
  out << "%%MatrixMarket matrix coordinate complex general\n";
  out << a.rows() << " " << a.cols() << " " << a.nnz() << "\n";
  char buf[128];
  a.for_each_entry([&](std::size_t i, std::size_t j, Complex v) {
    std::snprintf(buf, sizeof(buf), "%zu %zu %.17g %.17g\n", i + 1, j + 1,
                  v.real(), v.imag());
    out << buf;
  });
}

}  // namespace shiftrec
