#pragma once

#include <algorithm>
#include <cmath>

#include "shiftrec/dense_matrix.hpp"
#include "shiftrec/eig.hpp"
#include "shiftrec/qr.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

/// Largest principal angle between the column spans of X and Y, in radians.
/// Both the cosine (singular values of Qx^* Qy) and the sine route
/// (Qy - Qx Qx^* Qy) are computed and combined through atan2, so the result
/// stays accurate near 0 and near pi/2.  Rank deficiency propagates from the
/// orthonormalization.
inline double largest_principal_angle(const DenseMatrix& x,
                                      const DenseMatrix& y) {
  if (x.rows() != y.rows())
    throw DimensionMismatch("largest_principal_angle: rows");
  const DenseMatrix qx = thin_qr(x).Q;
  const DenseMatrix qy = thin_qr(y).Q;
  const DenseMatrix s = adjoint_times(qx, qy);

  auto clamp01 = [](double v) { return std::min(1.0, std::max(0.0, v)); };

  // cos(theta_max) = smallest singular value of S.
  const EigResult cgram = eig_small(adjoint_times(s, s));
  double c2 = 1.0;
  for (const Complex& lambda : cgram.values)
    c2 = std::min(c2, clamp01(lambda.real()));
  const double cosv = std::sqrt(clamp01(c2));

  // sin(theta_max) = largest singular value of Qy - Qx S.
  const DenseMatrix ms = qy - qx * s;
  const EigResult sgram = eig_small(adjoint_times(ms, ms));
  double s2 = 0.0;
  for (const Complex& lambda : sgram.values)
    s2 = std::max(s2, clamp01(lambda.real()));
  const double sinv = std::sqrt(clamp01(s2));

  return std::atan2(sinv, cosv);
}

}  // namespace shiftrec
