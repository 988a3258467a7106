#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "shiftrec/arnoldi.hpp"
#include "shiftrec/lu.hpp"
#include "shiftrec/operator_handle.hpp"
#include "shiftrec/qr.hpp"
#include "shiftrec/residual_log.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

struct SolveResult {
  Vector x;
  bool converged = false;
  double relative_residual = 0.0;
  std::size_t cycles = 0;
  ResidualLog log;
};

struct GmresCycleResult {
  Vector x;                    // minimizer over x0 + K_m(A, r0)
  Vector z;                    // least-squares residual ||r0|| e1 - H y
  Vector y;                    // small-problem solution
  ArnoldiDecomposition decomp;
  Vector residual;             // V z, without touching the operator
};

/// One GMRES(m) cycle.  When r0 is supplied it must equal b - A x0; passing
/// it keeps the residual recurrence free of extra operator applications.
inline GmresCycleResult gmres_cycle(const ShiftedOperator& op,
                                    const Vector& x0, const Vector& b,
                                    std::size_t m,
                                    const Vector* r0 = nullptr,
                                    double stop_norm = 0.0) {
  Vector r = r0 ? *r0 : op.residual(b, x0);
  if (norm2(b) == 0.0) throw DimensionMismatch("gmres_cycle: zero rhs");
  ArnoldiDecomposition d = build_deflated_arnoldi(op, nullptr, r, m, stop_norm);

  const Vector rhs = scaled(unit_vector(d.H.rows(), 0), Complex(d.beta0, 0.0));
  // Happy breakdown leaves H square and the small problem consistent.
  Vector y = d.breakdown ? solve_square(d.H, rhs) : least_squares(d.H, rhs);
  Vector z = vsub(rhs, d.H * y);

  Vector x = x0;
  for (std::size_t j = 0; j < d.steps; ++j) axpy(y[j], d.V.column(j), x);

  GmresCycleResult out;
  out.residual = d.V * z;
  out.x = std::move(x);
  out.z = std::move(z);
  out.y = std::move(y);
  out.decomp = std::move(d);
  return out;
}

/// Restarted GMRES(m).  Non-convergence within max_cycles is a reported
/// status, not an error.  Convergence is declared only after an explicit
/// residual check; a recurrence that drifted simply restarts from the true
/// residual.
inline SolveResult restarted_gmres(const ShiftedOperator& op, const Vector& b,
                                   const SolveParams& params,
                                   const Vector* x0 = nullptr,
                                   RunClock* clock = nullptr,
                                   int system_id = 0) {
  RunClock local_clock;
  if (!clock) clock = &local_clock;
  const double bnorm = norm2(b);
  SolveResult out;
  out.x = x0 ? *x0 : zeros(op.size());
  if (bnorm == 0.0) {
    out.x = zeros(op.size());
    out.converged = true;
    return out;
  }
  Vector r = (x0 && norm2(*x0) != 0.0) ? op.residual(b, *x0) : b;

  auto record = [&](double rnorm) {
    out.log.samples.push_back({system_id, op.base_shift(), clock->cycles,
                               clock->iterations, op.counter().count, rnorm});
  };
  record(norm2(r));

  while (out.cycles < params.max_cycles) {
    if (norm2(r) <= params.tol * bnorm) {
      Vector r_explicit = op.residual(b, out.x);
      record(norm2(r_explicit));
      if (norm2(r_explicit) <= params.tol * bnorm) break;
      r = std::move(r_explicit);  // recurrence drifted; restart from truth
      continue;
    }
    GmresCycleResult cyc =
        gmres_cycle(op, out.x, b, params.m, &r, params.tol * bnorm);
    out.x = std::move(cyc.x);
    r = std::move(cyc.residual);
    ++out.cycles;
    ++clock->cycles;
    clock->iterations += cyc.decomp.steps;
    record(norm2(r));
  }
  // Reported state always reflects a from-scratch residual.
  out.relative_residual = norm2(op.residual(b, out.x)) / bnorm;
  out.converged = out.relative_residual <= params.tol;
  out.log.reports.push_back({system_id, op.base_shift(), out.converged,
                             out.relative_residual, op.counter().count});
  return out;
}

struct ShiftedCycleOutcome {
  std::optional<Vector> y;  // empty when the augmented system is singular
  Complex beta;
};

/// Per-shift augmented collinearity solves for one finished GMRES cycle:
///   [H^(sigma)  z] [y; beta] = beta_prev ||r0|| e1.
/// A singular system means the residual polynomial vanishes at -sigma; the
/// caller marks that shift stalled.  After a happy breakdown z vanishes and
/// the shifted small problem is solved directly (the spanned space is
/// invariant, so the shifted residual is annihilated too, beta = 0).
inline std::vector<ShiftedCycleOutcome> shifted_gmres_cycle(
    const ArnoldiDecomposition& d, const Vector& z,
    std::span<const Complex> shifts, std::span<const Complex> beta_prev) {
  std::vector<ShiftedCycleOutcome> out(shifts.size());
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    const DenseMatrix hs = shifted_hessenberg(d.H, shifts[i]);
    const Complex scale = beta_prev[i] * d.beta0;
    try {
      const double znorm = norm2(z);
      if (d.breakdown || znorm == 0.0) {
        out[i].y = solve_square(hs, scaled(unit_vector(d.steps, 0), scale));
        out[i].beta = Complex(0.0, 0.0);
      } else {
        // The z column is normalized so the pivot test measures genuine
        // singularity, not the scale gap to H near convergence.
        DenseMatrix aug(d.H.rows(), d.steps + 1);
        for (std::size_t c = 0; c < d.steps; ++c)
          for (std::size_t r = 0; r < d.H.rows(); ++r) aug(r, c) = hs(r, c);
        for (std::size_t r = 0; r < d.H.rows(); ++r)
          aug(r, d.steps) = z[r] / znorm;
        Vector sol =
            solve_square(aug, scaled(unit_vector(d.H.rows(), 0), scale));
        out[i].beta = sol.back() / znorm;
        sol.pop_back();
        out[i].y = std::move(sol);
      }
    } catch (const SingularError&) {
      out[i].y.reset();
    }
  }
  return out;
}

struct ShiftedFamilyResult {
  std::vector<Vector> x;            // index 0 = base system, then shifts
  std::vector<bool> converged;
  std::vector<double> relative_residual;
  ResidualLog log;
};

/// Restarted GMRES for a family of shifted systems: the base residual is
/// minimized, shifted iterates keep their residuals collinear with it.
/// Stalled shifts (singular collinearity system) keep their last iterate and
/// are finished with plain restarted GMRES at the end, as are any systems
/// whose final explicit residual misses the tolerance.
inline ShiftedFamilyResult shifted_gmres(const ShiftedOperator& op,
                                         const Vector& b,
                                         std::span<const Complex> shifts,
                                         const SolveParams& params,
                                         const CycleObserver& observer = {},
                                         RunClock* clock = nullptr) {
  RunClock local_clock;
  if (!clock) clock = &local_clock;
  const std::size_t nsys = shifts.size() + 1;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) throw DimensionMismatch("shifted_gmres: zero rhs");

  ShiftedFamilyResult out;
  out.x.assign(nsys, zeros(op.size()));
  out.converged.assign(nsys, false);
  out.relative_residual.assign(nsys, 0.0);

  // Zero initial guesses: identical residuals, beta = 1 exactly.
  Vector r = b;
  std::vector<Complex> beta(shifts.size(), Complex(1.0, 0.0));
  std::vector<bool> stalled(shifts.size(), false);
  std::vector<bool> shift_done(shifts.size(), false);
  bool base_done = false;

  auto record = [&](int id, Complex sigma, double rnorm) {
    out.log.samples.push_back({id, op.base_shift() + sigma, clock->cycles,
                               clock->iterations, op.counter().count, rnorm});
  };
  record(0, Complex(0.0, 0.0), norm2(r));
  for (std::size_t i = 0; i < shifts.size(); ++i)
    record(static_cast<int>(i + 1), shifts[i], norm2(r));

  std::size_t cycles = 0;
  while (cycles < params.max_cycles) {
    base_done = norm2(r) <= params.tol * bnorm;
    bool all_shifts_settled = true;
    for (std::size_t i = 0; i < shifts.size(); ++i)
      all_shifts_settled = all_shifts_settled && (shift_done[i] || stalled[i]);
    if (base_done && all_shifts_settled) break;

    // While the base system still drives convergence, cycles may stop at
    // tolerance; afterwards full cycles keep feeding the shifted solves.
    const double stop_norm = base_done ? 0.0 : params.tol * bnorm;
    GmresCycleResult cyc =
        gmres_cycle(op, out.x[0], b, params.m, &r, stop_norm);
    ++cycles;
    ++clock->cycles;
    clock->iterations += cyc.decomp.steps;

    std::vector<Complex> active_shifts, active_beta;
    std::vector<std::size_t> active_index;
    for (std::size_t i = 0; i < shifts.size(); ++i) {
      if (shift_done[i] || stalled[i]) continue;
      active_shifts.push_back(shifts[i]);
      active_beta.push_back(beta[i]);
      active_index.push_back(i);
    }
    const std::vector<ShiftedCycleOutcome> updates =
        shifted_gmres_cycle(cyc.decomp, cyc.z, active_shifts, active_beta);

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
    view.decomp = &cyc.decomp;

    for (std::size_t a = 0; a < active_index.size(); ++a) {
      const std::size_t i = active_index[a];
      if (!updates[a].y) {
        stalled[i] = true;
        out.log.warnings.push_back("shift stalled (singular collinearity "
                                   "system), deferred to restarted GMRES");
        continue;
      }
      const Vector& y = *updates[a].y;
      for (std::size_t j = 0; j < cyc.decomp.steps; ++j)
        axpy(y[j], cyc.decomp.V.column(j), out.x[i + 1]);
      beta[i] = updates[a].beta;
      const double snorm = std::abs(beta[i]) * rnorm;
      record(static_cast<int>(i + 1), shifts[i], snorm);
      if (snorm <= params.tol * bnorm) shift_done[i] = true;
      if (observer) {
        ShiftCycleView sv;
        sv.system_id = static_cast<int>(i + 1);
        sv.sigma = op.base_shift() + shifts[i];
        sv.x = &out.x[i + 1];
        sv.beta = beta[i];
        sv.stalled = false;
        sv.converged = shift_done[i];
        sv.updated_this_cycle = true;
        sv.reported_norm = snorm;
        sv.y = &y;
        view.shifts.push_back(sv);
      }
    }
    if (observer) observer(view);
  }

  // Finalize with explicit residuals; polish anything that missed.
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
