#pragma once

#include <cstdint>
#include <cstddef>

#include "shiftrec/sparse_matrix.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

/// SplitMix64: the fixed, portable generator behind every seeded quantity.
/// Stream discipline: each consumer constructs its own generator from
/// (seed, purpose) via the seeded() helper, so adding a consumer never
/// shifts another one's stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_real() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [-1, 1).
  double next_symmetric() { return 2.0 * next_real() - 1.0; }

  Complex next_complex() {
    const double re = next_symmetric();
    return Complex(re, next_symmetric());
  }

  static SplitMix64 seeded(std::uint64_t seed, std::uint64_t purpose) {
    SplitMix64 mixer(seed ^ (0x517cc1b727220a95ULL * (purpose + 1)));
    mixer.next_u64();
    return mixer;
  }

 private:
  std::uint64_t state_;
};

/// Bidiagonal test matrix: diagonal (.1, 1, 2, ..., n-1), ones on the first
/// superdiagonal.  Triangular, so its spectrum is the diagonal.
inline SparseMatrix bidiagonal_b1(std::size_t n) {
  if (n < 2) throw DimensionMismatch("bidiagonal_b1: n >= 2");
  std::vector<Triplet> t;
  t.reserve(2 * n - 1);
  t.push_back({0, 0, Complex(0.1, 0.0)});
  for (std::size_t i = 1; i < n; ++i)
    t.push_back({i, i, Complex(static_cast<double>(i), 0.0)});
  for (std::size_t i = 0; i + 1 < n; ++i)
    t.push_back({i, i + 1, Complex(1.0, 0.0)});
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

/// B + E where E shares B's sparsity pattern exactly and ||E||_F = 1.
/// Deterministic in (B, seed).
inline SparseMatrix perturb_bidiagonal(const SparseMatrix& b,
                                       std::uint64_t seed) {
  SplitMix64 rng = SplitMix64::seeded(seed, 0xb1d1a60ULL);
  std::vector<Triplet> entries;
  entries.reserve(b.nnz());
  double fro = 0.0;
  b.for_each_entry([&](std::size_t r, std::size_t c, Complex) {
    const double v = rng.next_symmetric();
    fro += v * v;
    entries.push_back({r, c, Complex(v, 0.0)});
  });
  const double inv = 1.0 / std::sqrt(fro);
  std::vector<Triplet> combined;
  combined.reserve(2 * b.nnz());
  b.for_each_entry([&](std::size_t r, std::size_t c, Complex v) {
    combined.push_back({r, c, v});
  });
  for (Triplet& t : entries) {
    t.value *= inv;
    combined.push_back(t);
  }
  return SparseMatrix::from_triplets(b.rows(), b.cols(), std::move(combined));
}

/// QCD-style assembly A = I - kappa D.  Positive-real for 0 <= kappa below
/// the critical value supplied with the operator (not enforced here).
inline SparseMatrix qcd_assemble(const SparseMatrix& d, Complex kappa) {
  if (d.rows() != d.cols()) throw DimensionMismatch("qcd_assemble: square");
  std::vector<Triplet> t;
  t.reserve(d.nnz() + d.rows());
  d.for_each_entry([&](std::size_t r, std::size_t c, Complex v) {
    t.push_back({r, c, -kappa * v});
  });
  for (std::size_t i = 0; i < d.rows(); ++i)
    t.push_back({i, i, Complex(1.0, 0.0)});
  return SparseMatrix::from_triplets(d.rows(), d.cols(), std::move(t));
}

/// Normalized all-ones right-hand side (the declared convention when a
/// problem does not specify b).
inline Vector ones_rhs(std::size_t n) {
  const double v = 1.0 / std::sqrt(static_cast<double>(n));
  return Vector(n, Complex(v, 0.0));
}

}  // namespace shiftrec
