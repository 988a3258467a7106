#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace shiftrec {

using Complex = std::complex<double>;
using Vector = std::vector<Complex>;

/// Base class for numerical failure signals thrown by the dense and sparse
/// kernels.  Solvers catch specific subclasses where the failure carries
/// meaning (e.g. a singular collinearity system marks a stalled shift).
class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

class RankDeficientError : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

class SingularError : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

class EigFailedError : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

/// Deflation-family construction failed at a QR step (clustered shifts).
class FamilyBuildError : public LinalgError {
 public:
  FamilyBuildError(const std::string& msg, std::size_t step)
      : LinalgError(msg), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Vector kernels.  The inner product is conjugate-linear in the first
// argument: dot(x, y) = x^* y.
// ---------------------------------------------------------------------------

inline Complex dot(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw DimensionMismatch("dot: size mismatch");
  Complex s(0.0, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

inline double norm2(const Vector& v) {
  double s = 0.0;
  for (const Complex& z : v) s += std::norm(z);
  return std::sqrt(s);
}

/// y += alpha * x
inline void axpy(Complex alpha, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scal(Complex alpha, Vector& v) {
  for (Complex& z : v) z *= alpha;
}

inline Vector scaled(const Vector& v, Complex alpha) {
  Vector out(v);
  scal(alpha, out);
  return out;
}

inline Vector vadd(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("vadd: size mismatch");
  Vector out(a);
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

inline Vector vsub(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("vsub: size mismatch");
  Vector out(a);
  for (std::size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
  return out;
}

inline Vector zeros(std::size_t n) { return Vector(n, Complex(0.0, 0.0)); }

inline Vector unit_vector(std::size_t n, std::size_t index) {
  Vector e = zeros(n);
  e.at(index) = Complex(1.0, 0.0);
  return e;
}

}  // namespace shiftrec
