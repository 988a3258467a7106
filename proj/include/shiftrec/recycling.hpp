#pragma once

#include <cstddef>
#include <optional>
#include <utility>

#include "shiftrec/arnoldi.hpp"
#include "shiftrec/eig.hpp"
#include "shiftrec/gmres.hpp"
#include "shiftrec/lu.hpp"
#include "shiftrec/operator_handle.hpp"
#include "shiftrec/qr.hpp"
#include "shiftrec/residual_log.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

/// Projection step carried between systems:
///   x0 = x_prev + U C^* r_prev,   r0 = r_prev - C C^* r_prev.
inline std::pair<Vector, Vector> project_initial(const RecycleSpace& recycle,
                                                 const Vector& x_prev,
                                                 const Vector& r_prev) {
  const Vector coeffs = adjoint_times(recycle.C, r_prev);
  Vector x0 = x_prev;
  Vector r0 = r_prev;
  for (std::size_t i = 0; i < recycle.k(); ++i) {
    axpy(coeffs[i], recycle.U.column(i), x0);
    axpy(-coeffs[i], recycle.C.column(i), r0);
  }
  return {std::move(x0), std::move(r0)};
}

struct RecycledCycleResult {
  Vector x;
  Vector y_hat;  // stacked coefficients [-B y; y] over [U V_s]
  Vector z_hat;  // ||r0|| e_{k+1} - G y_hat
  Vector y;      // Krylov-block coefficients
  ArnoldiDecomposition decomp;
  Vector residual;  // W z_hat, no operator applications
};

/// One cycle of Recycled GMRES: minimize over x0 + R(U) + K_m(P A, r0).
/// The small problem is exactly satisfiable in its first k rows, so it
/// reduces to the projected-operator GMRES least squares plus y1 = -B y.
inline RecycledCycleResult rgmres_cycle(const ShiftedOperator& op,
                                        const RecycleSpace* recycle,
                                        const Vector& x0, const Vector& r0,
                                        std::size_t m,
                                        double stop_norm = 0.0) {
  ArnoldiDecomposition d =
      build_deflated_arnoldi(op, recycle, r0, m, stop_norm);
  const std::size_t k = d.k();

  const Vector rhs = scaled(unit_vector(d.H.rows(), 0), Complex(d.beta0, 0.0));
  Vector y = d.breakdown ? solve_square(d.H, rhs) : least_squares(d.H, rhs);
  Vector z_small = vsub(rhs, d.H * y);

  RecycledCycleResult out;
  out.y_hat = zeros(k + d.steps);
  if (k > 0) {
    const Vector by = d.B * y;
    for (std::size_t i = 0; i < k; ++i) out.y_hat[i] = -by[i];
  }
  for (std::size_t j = 0; j < d.steps; ++j) out.y_hat[k + j] = y[j];

  out.z_hat = zeros(k + d.H.rows());
  for (std::size_t i = 0; i < d.H.rows(); ++i) out.z_hat[k + i] = z_small[i];

  out.x = x0;
  if (k > 0)
    for (std::size_t i = 0; i < k; ++i)
      axpy(out.y_hat[i], recycle->U.column(i), out.x);
  for (std::size_t j = 0; j < d.steps; ++j)
    axpy(y[j], d.V.column(j), out.x);

  out.residual = d.V * z_small;
  out.y = std::move(y);
  out.decomp = std::move(d);
  return out;
}

/// Harmonic Ritz refresh of the recycle space.  Pairs (g, theta) solve the
/// order-(k+s) pencil G^*G g = theta G^*(W^*Vhat) g; the k_new of smallest
/// |theta| are kept.  The new space is the QR of A Utilde, assembled through
/// the Arnoldi-like relation (A Utilde = W G P), so no operator applications
/// are spent.
inline RecycleSpace harmonic_ritz_update(const ArnoldiDecomposition& d,
                                         const RecycleSpace* recycle,
                                         std::size_t k_new) {
  const std::size_t k = d.k();
  const std::size_t s = d.steps;
  if (k_new > k + s)
    throw DimensionMismatch("harmonic_ritz_update: k_new too large");
  const DenseMatrix g = assemble_augmented(d);

  // W^* Vhat: C^*V_s vanishes and V^*V_s is the leading identity block.
  DenseMatrix wtv(k + d.H.rows(), k + s);
  if (k > 0) {
    const DenseMatrix y_block = adjoint_times(recycle->C, recycle->U);
    const DenseMatrix z_block = adjoint_times(d.V, recycle->U);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) wtv(i, j) = y_block(i, j);
      for (std::size_t i = 0; i < d.H.rows(); ++i)
        wtv(k + i, j) = z_block(i, j);
    }
  }
  for (std::size_t j = 0; j < s; ++j) wtv(k + j, k + j) = Complex(1.0, 0.0);

  const DenseMatrix lhs = adjoint_times(g, g);
  const DenseMatrix rhs = adjoint_times(g, wtv);
  const EigResult eig = eig_small(solve_square_multi(rhs, lhs));

  DenseMatrix p(k + s, k_new);
  for (std::size_t j = 0; j < k_new; ++j)
    p.set_column(j, eig.vectors.column(j));

  const DenseMatrix gp = g * p;
  QRFactors qr = thin_qr(gp);  // RankDeficientError -> caller keeps old space

  DenseMatrix w = d.V;
  if (k > 0) w = hcat(recycle->C, d.V);
  DenseMatrix vhat = d.V.columns(0, s);
  if (k > 0) vhat = hcat(recycle->U, vhat);

  return RecycleSpace{vhat * right_solve_upper(p, qr.R), w * qr.Q};
}

struct RecycledSolveResult {
  Vector x;
  bool converged = false;
  double relative_residual = 0.0;
  std::size_t cycles = 0;
  std::optional<RecycleSpace> recycle;  // for the next system in a sequence
  ResidualLog log;
};

/// Recycled GMRES driver.  With no incoming space and refresh enabled this
/// is algebraically GMRES-DR; with an incoming space the first action is the
/// initial projection.  The space handed back satisfies A U = C for the
/// operator that was solved.
inline RecycledSolveResult recycled_gmres(
    const ShiftedOperator& op, const Vector& b,
    std::optional<RecycleSpace> recycle, std::size_t k_target,
    const SolveParams& params, const Vector* x0 = nullptr,
    const CycleObserver& observer = {}, RunClock* clock = nullptr,
    int system_id = 0) {
  RunClock local_clock;
  if (!clock) clock = &local_clock;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) throw DimensionMismatch("recycled_gmres: zero rhs");

  RecycledSolveResult out;
  out.x = x0 ? *x0 : zeros(op.size());
  Vector r = (x0 && norm2(*x0) != 0.0) ? op.residual(b, *x0) : b;
  if (recycle) {
    auto [px, pr] = project_initial(*recycle, out.x, r);
    out.x = std::move(px);
    r = std::move(pr);
  }

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
      r = std::move(r_explicit);
      if (recycle) {
        auto [px, pr] = project_initial(*recycle, out.x, r);
        out.x = std::move(px);
        r = std::move(pr);
      }
      continue;
    }

    if (recycle) {
      // Refreshed spaces are orthogonal to r only up to the previous
      // residual's scale; re-project so the Arnoldi precondition holds at
      // any convergence depth.
      auto [px, pr] = project_initial(*recycle, out.x, r);
      out.x = std::move(px);
      r = std::move(pr);
    }
    RecycledCycleResult cyc =
        rgmres_cycle(op, recycle ? &*recycle : nullptr, out.x, r, params.m,
                     params.tol * bnorm);
    out.x = std::move(cyc.x);
    r = std::move(cyc.residual);
    ++out.cycles;
    ++clock->cycles;
    clock->iterations += cyc.decomp.steps;
    record(norm2(r));

    if (observer) {
      CycleView view;
      view.cycle = clock->cycles;
      view.base_sigma = op.base_shift();
      view.base_x = &out.x;
      view.base_residual = &r;
      view.base_norm = norm2(r);
      view.recycle = recycle ? &*recycle : nullptr;
      view.decomp = &cyc.decomp;
      observer(view);
    }

    if (params.refresh_every_cycle || !recycle) {
      try {
        recycle = harmonic_ritz_update(cyc.decomp,
                                       recycle ? &*recycle : nullptr,
                                       std::min(k_target, cyc.decomp.k() +
                                                              cyc.decomp.steps));
      } catch (const LinalgError& e) {
        out.log.warnings.push_back(
            std::string("recycle refresh skipped: ") + e.what());
      }
    }
  }
  // Reported state always reflects a from-scratch residual.
  out.relative_residual = norm2(op.residual(b, out.x)) / bnorm;
  out.converged = out.relative_residual <= params.tol;
  out.recycle = std::move(recycle);
  out.log.reports.push_back({system_id, op.base_shift(), out.converged,
                             out.relative_residual, op.counter().count});
  return out;
}

}  // namespace shiftrec
