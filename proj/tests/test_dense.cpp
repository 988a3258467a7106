#include <doctest.h>

#include <cmath>

#include "shiftrec/dense_matrix.hpp"
#include "shiftrec/lu.hpp"
#include "shiftrec/qr.hpp"
#include "shiftrec/subspace_angles.hpp"
#include "support.hpp"

using namespace shiftrec;
using namespace testsupport;

TEST_SUITE("dense") {

TEST_CASE("thin_qr identity and scaled identity") {
  const DenseMatrix eye = DenseMatrix::identity(4);
  QRFactors qr = thin_qr(eye);
  CHECK(frobenius_norm(qr.Q - eye) < 1e-14);
  CHECK(frobenius_norm(qr.R - eye) < 1e-14);

  QRFactors qr2 = thin_qr(Complex(2.0, 0.0) * eye);
  CHECK(frobenius_norm(qr2.Q - eye) < 1e-14);
  CHECK(frobenius_norm(qr2.R - (Complex(2.0, 0.0) * eye)) < 1e-14);
}

TEST_CASE("thin_qr random recomposition and orthogonality") {
  SplitMix64 rng = SplitMix64::seeded(7, 1);
  const DenseMatrix m = random_dense(rng, 10, 4);
  QRFactors qr = thin_qr(m);
  CHECK(frobenius_norm(qr.Q * qr.R - m) <= 1e-12 * frobenius_norm(m));
  CHECK(frobenius_norm(adjoint_times(qr.Q, qr.Q) - DenseMatrix::identity(4)) <=
        1e-12 * 4);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(qr.R(j, j).imag() == 0.0);
    CHECK(qr.R(j, j).real() >= 0.0);
    for (std::size_t i = j + 1; i < 4; ++i)
      CHECK(qr.R(i, j) == Complex(0.0, 0.0));
  }
}

TEST_CASE("thin_qr recomposition property up to 200x50") {
  SplitMix64 rng = SplitMix64::seeded(11, 2);
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{20, 5},
                            {80, 17},
                            {200, 50}}) {
    const DenseMatrix m = random_dense(rng, rows, cols);
    QRFactors qr = thin_qr(m);
    CHECK(frobenius_norm(qr.Q * qr.R - m) <= 1e-12 * frobenius_norm(m));
    CHECK(frobenius_norm(adjoint_times(qr.Q, qr.Q) -
                         DenseMatrix::identity(cols)) <= 1e-12 * cols);
  }
}

TEST_CASE("thin_qr detects rank deficiency") {
  DenseMatrix m(6, 3);
  SplitMix64 rng = SplitMix64::seeded(3, 3);
  const Vector col = random_vector(rng, 6);
  m.set_column(0, col);
  m.set_column(1, scaled(col, Complex(2.0, 1.0)));
  m.set_column(2, random_vector(rng, 6));
  CHECK_THROWS_AS(thin_qr(m), RankDeficientError);
}

TEST_CASE("solve_upper_triangular basics and LU-oracle comparison") {
  CHECK_NOTHROW(solve_upper_triangular(DenseMatrix::identity(3),
                                       Vector{1.0, 2.0, 3.0}));
  const Vector idsol =
      solve_upper_triangular(DenseMatrix::identity(3), Vector{1.0, 2.0, 3.0});
  CHECK(norm2(vsub(idsol, Vector{1.0, 2.0, 3.0})) < 1e-15);

  DenseMatrix diag(2, 2);
  diag(0, 0) = 2.0;
  diag(1, 1) = 4.0;
  const Vector dsol = solve_upper_triangular(diag, Vector{2.0, 4.0});
  CHECK(std::abs(dsol[0] - Complex(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(dsol[1] - Complex(1.0, 0.0)) < 1e-15);

  SplitMix64 rng = SplitMix64::seeded(5, 4);
  DenseMatrix r(6, 6);
  for (std::size_t j = 0; j < 6; ++j) {
    for (std::size_t i = 0; i < j; ++i) r(i, j) = rng.next_complex();
    r(j, j) = Complex(1.5 + rng.next_real(), rng.next_symmetric());
  }
  const Vector b = random_vector(rng, 6);
  const Vector x = solve_upper_triangular(r, b);
  const Vector oracle = naive_solve(r, b);
  CHECK(norm2(vsub(x, oracle)) <= 1e-12 * norm2(oracle));
  CHECK(norm2(vsub(r * x, b)) <= 1e-12 * norm2(b));

  DenseMatrix singular = r;
  singular(3, 3) = Complex(0.0, 0.0);
  CHECK_THROWS_AS(solve_upper_triangular(singular, b), SingularError);
}

TEST_CASE("right_solve_upper solves X R = B") {
  SplitMix64 rng = SplitMix64::seeded(6, 5);
  const DenseMatrix m = random_dense(rng, 9, 4);
  QRFactors qr = thin_qr(m);
  const DenseMatrix x = right_solve_upper(m, qr.R);
  CHECK(frobenius_norm(x * qr.R - m) <= 1e-12 * frobenius_norm(m));
}

TEST_CASE("solve_square basics, QR oracle, singularity signal") {
  const Vector b{Complex(2.0, 0.0), Complex(1.0, 0.0)};
  DenseMatrix m(2, 2);
  m(0, 0) = 1.0;
  m(0, 1) = 1.0;
  m(1, 1) = 1.0;
  const Vector x = solve_square(m, b);
  CHECK(std::abs(x[0] - Complex(1.0, 0.0)) < 1e-14);
  CHECK(std::abs(x[1] - Complex(1.0, 0.0)) < 1e-14);

  const Vector bi = solve_square(DenseMatrix::identity(3), Vector{1.0, 2.0, 3.0});
  CHECK(norm2(vsub(bi, Vector{1.0, 2.0, 3.0})) < 1e-15);

  SplitMix64 rng = SplitMix64::seeded(9, 6);
  const DenseMatrix a = random_dense(rng, 9, 9);
  const Vector rhs = random_vector(rng, 9);
  const Vector lu = solve_square(a, rhs);
  const Vector via_qr = least_squares(a, rhs);
  CHECK(norm2(vsub(lu, via_qr)) <= 1e-11 * norm2(lu));

  DenseMatrix rank1(3, 3);
  const Vector col = random_vector(rng, 3);
  rank1.set_column(0, col);
  rank1.set_column(1, scaled(col, Complex(2.0, 0.0)));
  rank1.set_column(2, scaled(col, Complex(-1.0, 3.0)));
  CHECK_THROWS_AS(solve_square(rank1, Vector{1.0, 0.0, 0.0}), SingularError);
}

TEST_CASE("solve_square round-trips matvec on random nonsingular matrices") {
  SplitMix64 rng = SplitMix64::seeded(21, 7);
  for (std::size_t n : {5, 17, 50}) {
    DenseMatrix a = random_dense(rng, n, n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += Complex(4.0, 0.0);
    const Vector x = random_vector(rng, n);
    const Vector recovered = solve_square(a, a * x);
    CHECK(norm2(vsub(recovered, x)) <= 1e-10 * norm2(x));
  }
}

TEST_CASE("least_squares: consistent square, column mean, normal equations") {
  SplitMix64 rng = SplitMix64::seeded(13, 8);
  const DenseMatrix a = random_dense(rng, 7, 7);
  const Vector b = random_vector(rng, 7);
  CHECK(norm2(vsub(least_squares(a, b), solve_square(a, b))) <=
        1e-11 * norm2(b));

  DenseMatrix col(2, 1);
  col(0, 0) = 1.0;
  col(1, 0) = 1.0;
  const Vector mean = least_squares(col, Vector{0.0, 2.0});
  CHECK(std::abs(mean[0] - Complex(1.0, 0.0)) < 1e-14);

  const DenseMatrix m = random_dense(rng, 12, 5);
  const Vector rhs = random_vector(rng, 12);
  const Vector x = least_squares(m, rhs);
  const Vector oracle = normal_equations_solve(m, rhs);
  CHECK(norm2(vsub(x, oracle)) <= 1e-9 * norm2(oracle));
  // Gradient condition of the minimizer.
  const Vector grad = adjoint_times(m, vsub(m * x, rhs));
  CHECK(norm2(grad) <= 1e-10 * frobenius_norm(m) * norm2(rhs));
}

TEST_CASE("largest_principal_angle geometry") {
  SplitMix64 rng = SplitMix64::seeded(17, 9);
  const DenseMatrix x = random_dense(rng, 8, 3);
  CHECK(largest_principal_angle(x, x) <= 1e-7);

  DenseMatrix e1(2, 1), e2(2, 1), diag(2, 1);
  e1(0, 0) = 1.0;
  e2(1, 0) = 1.0;
  diag(0, 0) = 1.0 / std::sqrt(2.0);
  diag(1, 0) = 1.0 / std::sqrt(2.0);
  CHECK(largest_principal_angle(e1, e2) ==
        doctest::Approx(std::acos(-1.0) / 2).epsilon(1e-12));
  CHECK(largest_principal_angle(e1, diag) ==
        doctest::Approx(std::acos(-1.0) / 4).epsilon(1e-12));
}

TEST_CASE("largest_principal_angle is symmetric") {
  SplitMix64 rng = SplitMix64::seeded(19, 10);
  for (int trial = 0; trial < 5; ++trial) {
    const DenseMatrix x = random_dense(rng, 12, 4);
    const DenseMatrix y = random_dense(rng, 12, 4);
    CHECK(std::abs(largest_principal_angle(x, y) -
                   largest_principal_angle(y, x)) <= 1e-12);
  }
}

}  // TEST_SUITE
