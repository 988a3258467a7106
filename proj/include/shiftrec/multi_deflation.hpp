#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "shiftrec/arnoldi.hpp"
#include "shiftrec/gmres.hpp"
#include "shiftrec/lu.hpp"
#include "shiftrec/operator_handle.hpp"
#include "shiftrec/qr.hpp"
#include "shiftrec/recycling.hpp"
#include "shiftrec/residual_log.hpp"
#include "shiftrec/subspace_angles.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

/// One orthonormal image C shared by a whole family of shifted deflation
/// spaces: (A + sigma_i I) U^(sigma_i) = C for every shift in the family.
struct ShiftedDeflationFamily {
  DenseMatrix C;
  std::vector<Complex> shifts;      // input order
  std::vector<DenseMatrix> spaces;  // U^(sigma_i), aligned with shifts

  std::size_t k() const { return C.cols(); }

  const DenseMatrix& space_for(Complex sigma) const {
    for (std::size_t i = 0; i < shifts.size(); ++i)
      if (shifts[i] == sigma) return spaces[i];
    throw DimensionMismatch("deflation family: shift not in family");
  }
};

/// Given U_hat = (A + sigma1 I) U_tilde, returns (A + sigma2 I) U_tilde with
/// no operator applications:  U_hat + (sigma2 - sigma1) U_tilde.  Works
/// identically on R^{-1}-scaled inputs.
inline DenseMatrix implicit_shifted_product(const DenseMatrix& u_hat,
                                            const DenseMatrix& u_tilde,
                                            Complex sigma1, Complex sigma2) {
  if (sigma2 == sigma1) return u_hat;
  return u_hat + (sigma2 - sigma1) * u_tilde;
}

/// Builds the family for s+1 shifts with exactly (s+1)*k operator
/// applications: one explicit block product per step on the branch of the
/// rightmost shift (largest real part, ties by imaginary part), every other
/// branch updated implicitly.  Per-step QR keeps the explicit branch
/// orthonormal; the final QR of (A + sigma_{s+1} I) U_s yields C and the
/// common R^{-1} scaling.
inline ShiftedDeflationFamily build_family(const ShiftedOperator& op,
                                           std::vector<Complex> shifts,
                                           const DenseMatrix& u_tilde) {
  const std::size_t count = shifts.size();
  if (count == 0) throw DimensionMismatch("build_family: no shifts");
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = i + 1; j < count; ++j)
      if (shifts[i] == shifts[j])
        throw DimensionMismatch("build_family: shifts must be distinct");

  // The explicit branch gets the rightmost shift; keep the original order
  // for everything else.
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::size_t rightmost = 0;
  for (std::size_t i = 1; i < count; ++i) {
    const Complex a = shifts[i], b = shifts[rightmost];
    if (a.real() > b.real() ||
        (a.real() == b.real() && a.imag() > b.imag()))
      rightmost = i;
  }
  order.erase(order.begin() + static_cast<std::ptrdiff_t>(rightmost));
  order.push_back(rightmost);

  std::vector<Complex> sig(count);
  for (std::size_t i = 0; i < count; ++i) sig[i] = shifts[order[i]];
  const std::size_t s = count - 1;
  auto cyc = [&](std::size_t x) { return (x - 1) % count; };  // 1-based wrap

  std::vector<DenseMatrix> branch(count, u_tilde);
  for (std::size_t j = 1; j <= s; ++j) {
    DenseMatrix u_hat = op.apply_block(branch[s], sig[j - 1]);
    QRFactors qr;
    try {
      qr = thin_qr(u_hat);
    } catch (const RankDeficientError&) {
      throw FamilyBuildError("build_family: rank-deficient step (clustered "
                             "shifts)", j);
    }
    std::vector<DenseMatrix> next(count);
    next[s] = qr.Q;
    const DenseMatrix* prev = &next[s];
    for (std::size_t i = 1; i <= s; ++i) {
      const DenseMatrix lagged = right_solve_upper(branch[i - 1], qr.R);
      // prev holds (A + sigma_i I) applied to the lagged branch; the
      // shifted-product identity lifts it to the shift this branch
      // receives at step j.
      next[i - 1] =
          implicit_shifted_product(*prev, lagged, sig[i - 1], sig[cyc(i + j)]);
      prev = &next[i - 1];
    }
    branch = std::move(next);
  }

  DenseMatrix c_hat = op.apply_block(branch[s], sig[s]);
  QRFactors qr;
  try {
    qr = thin_qr(c_hat);
  } catch (const RankDeficientError&) {
    throw FamilyBuildError("build_family: rank-deficient final QR", s + 1);
  }

  ShiftedDeflationFamily fam;
  fam.C = qr.Q;
  fam.shifts = shifts;
  fam.spaces.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    fam.spaces[order[i]] = right_solve_upper(branch[i], qr.R);
  return fam;
}

/// Largest principal angle between R(C) and R((A + sigma_i I) U^(sigma_i))
/// for each shift; the construction's accuracy diagnostic.
inline std::vector<double> verify_family(const ShiftedOperator& op,
                                         const ShiftedDeflationFamily& fam) {
  std::vector<double> angles(fam.shifts.size());
  for (std::size_t i = 0; i < fam.shifts.size(); ++i) {
    const DenseMatrix image = op.apply_block(fam.spaces[i], fam.shifts[i]);
    angles[i] = largest_principal_angle(fam.C, image);
  }
  return angles;
}

/// Shifted Recycled GMRES over per-shift deflation spaces: the base system
/// runs Recycled GMRES on (U^(0), C); every other system draws its update
/// from U^(sigma) + K_m(P A, r0) through the augmented collinearity solve
///   [G^(sigma)  z][y; beta] = beta_prev ||r0|| e_{k+1},
/// which is exact here because (A + sigma I) U^(sigma) = C.  The family is
/// held fixed for the whole solve.
inline ShiftedFamilyResult multi_deflation_shifted_rgmres(
    const ShiftedOperator& op, const Vector& b,
    std::span<const Complex> shifts, const ShiftedDeflationFamily& family,
    const SolveParams& params, const CycleObserver& observer = {},
    RunClock* clock = nullptr) {
  RunClock local_clock;
  if (!clock) clock = &local_clock;
  const double bnorm = norm2(b);
  if (bnorm == 0.0)
    throw DimensionMismatch("multi_deflation_shifted_rgmres: zero rhs");
  const std::size_t k = family.k();
  const RecycleSpace rec{family.space_for(Complex(0.0, 0.0)), family.C};

  const std::size_t nsys = shifts.size() + 1;
  ShiftedFamilyResult out;
  out.x.assign(nsys, zeros(op.size()));
  out.converged.assign(nsys, false);
  out.relative_residual.assign(nsys, 0.0);

  // Zero guesses: after projection every residual equals (I - C C^*) b and
  // the collinearity factors are exactly one.
  const Vector coeffs = adjoint_times(family.C, b);
  Vector r = b;
  for (std::size_t i = 0; i < k; ++i) axpy(-coeffs[i], family.C.column(i), r);
  for (std::size_t i = 0; i < k; ++i) axpy(coeffs[i], rec.U.column(i), out.x[0]);
  std::vector<Complex> beta(shifts.size(), Complex(1.0, 0.0));
  for (std::size_t sidx = 0; sidx < shifts.size(); ++sidx) {
    const DenseMatrix& u_sigma = family.space_for(shifts[sidx]);
    for (std::size_t i = 0; i < k; ++i)
      axpy(coeffs[i], u_sigma.column(i), out.x[sidx + 1]);
  }

  std::vector<bool> shift_done(shifts.size(), false);
  std::vector<bool> stalled(shifts.size(), false);

  auto record = [&](int id, Complex sigma, double rnorm) {
    out.log.samples.push_back({id, op.base_shift() + sigma, clock->cycles,
                               clock->iterations, op.counter().count, rnorm});
  };
  record(0, Complex(0.0, 0.0), norm2(r));
  for (std::size_t i = 0; i < shifts.size(); ++i)
    record(static_cast<int>(i + 1), shifts[i], norm2(r));

  std::size_t cycles = 0;
  while (cycles < params.max_cycles) {
    const bool base_done = norm2(r) <= params.tol * bnorm;
    bool settled = true;
    for (std::size_t i = 0; i < shifts.size(); ++i)
      settled = settled && (shift_done[i] || stalled[i]);
    if (base_done && settled) break;

    const double stop_norm = base_done ? 0.0 : params.tol * bnorm;
    RecycledCycleResult cyc =
        rgmres_cycle(op, &rec, out.x[0], r, params.m, stop_norm);
    ++cycles;
    ++clock->cycles;
    clock->iterations += cyc.decomp.steps;
    const std::size_t steps = cyc.decomp.steps;
    const DenseMatrix g = assemble_augmented(cyc.decomp);

    out.x[0] = std::move(cyc.x);
    r = std::move(cyc.residual);
    const double rnorm = norm2(r);
    record(0, Complex(0.0, 0.0), rnorm);

    CycleView view;
    view.cycle = clock->cycles;
    view.base_sigma = op.base_shift();
    view.base_x = &out.x[0];
    view.base_residual = &r;
    view.base_norm = rnorm;
    view.recycle = &rec;
    view.decomp = &cyc.decomp;

    std::vector<Vector> kept_ys;
    kept_ys.reserve(shifts.size());
    for (std::size_t sidx = 0; sidx < shifts.size(); ++sidx) {
      if (shift_done[sidx] || stalled[sidx]) continue;
      const Complex sigma = shifts[sidx];
      DenseMatrix g_sigma = g;
      for (std::size_t j = 0; j < steps; ++j) g_sigma(k + j, k + j) += sigma;
      const Complex scale = beta[sidx] * cyc.decomp.beta0;

      Vector y_hat;
      Complex beta_new(0.0, 0.0);
      const double znorm = norm2(cyc.z_hat);
      try {
        if (cyc.decomp.breakdown || znorm == 0.0) {
          y_hat = solve_square(g_sigma,
                               scaled(unit_vector(k + steps, k), scale));
        } else {
          // z column normalized; see the shifted-GMRES cycle solve.
          DenseMatrix aug(k + steps + 1, k + steps + 1);
          for (std::size_t col = 0; col < k + steps; ++col)
            for (std::size_t row = 0; row < k + steps + 1; ++row)
              aug(row, col) = g_sigma(row, col);
          for (std::size_t row = 0; row < k + steps + 1; ++row)
            aug(row, k + steps) = cyc.z_hat[row] / znorm;
          Vector sol = solve_square(
              aug, scaled(unit_vector(k + steps + 1, k), scale));
          beta_new = sol.back() / znorm;
          sol.pop_back();
          y_hat = std::move(sol);
        }
      } catch (const SingularError&) {
        stalled[sidx] = true;
        out.log.warnings.push_back(
            "deflated shift stalled (singular collinearity system)");
        continue;
      }

      const DenseMatrix& u_sigma = family.space_for(sigma);
      for (std::size_t i = 0; i < k; ++i)
        axpy(y_hat[i], u_sigma.column(i), out.x[sidx + 1]);
      for (std::size_t j = 0; j < steps; ++j)
        axpy(y_hat[k + j], cyc.decomp.V.column(j), out.x[sidx + 1]);
      beta[sidx] = beta_new;
      const double snorm = std::abs(beta_new) * rnorm;
      record(static_cast<int>(sidx + 1), sigma, snorm);
      if (snorm <= params.tol * bnorm) shift_done[sidx] = true;

      if (observer) {
        kept_ys.push_back(std::move(y_hat));
        ShiftCycleView sv;
        sv.system_id = static_cast<int>(sidx + 1);
        sv.sigma = op.base_shift() + sigma;
        sv.x = &out.x[sidx + 1];
        sv.beta = beta[sidx];
        sv.converged = shift_done[sidx];
        sv.updated_this_cycle = true;
        sv.reported_norm = snorm;
        sv.y = &kept_ys.back();
        view.shifts.push_back(sv);
      }
    }
    if (observer) observer(view);
  }

  auto finalize = [&](int id, Complex sigma) {
    Vector r_explicit = op.residual(b, out.x[id], sigma);
    double rel = norm2(r_explicit) / bnorm;
    if (rel > params.tol) {
      SolveResult fix = restarted_gmres(op.rebased(sigma), b, params,
                                        &out.x[id], clock, id);
      out.x[id] = std::move(fix.x);
      rel = fix.relative_residual;
      fix.log.reports.clear();  // the finalize report below is authoritative
      out.log.append(std::move(fix.log));
    }
    out.converged[id] = rel <= params.tol;
    out.relative_residual[id] = rel;
    out.log.reports.push_back({id, op.base_shift() + sigma, out.converged[id],
                               rel, op.counter().count});
  };
  finalize(0, Complex(0.0, 0.0));
  for (std::size_t i = 0; i < shifts.size(); ++i)
    finalize(static_cast<int>(i + 1), shifts[i]);
  return out;
}

}  // namespace shiftrec
