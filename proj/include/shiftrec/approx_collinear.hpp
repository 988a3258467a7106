#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "shiftrec/arnoldi.hpp"
#include "shiftrec/gmres.hpp"
#include "shiftrec/lu.hpp"
#include "shiftrec/operator_handle.hpp"
#include "shiftrec/recycling.hpp"
#include "shiftrec/residual_log.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

/// Bookkeeping for one shifted system while the base system is driven by
/// Recycled GMRES.  The defect w tracks the deviation from exact
/// collinearity: entering each cycle, r^(sigma) = beta * r + w holds.
struct ShiftState {
  Complex sigma;
  Vector x;
  Vector w;
  Complex beta = Complex(1.0, 0.0);
  bool active = true;
  bool converged = false;
  double last_resid_norm = 0.0;
  int system_id = 0;
};

/// Splitting of the recycle basis against the cycle's augmented basis:
/// U = C Y + V Z + EF, with EF the part outside span[C V].
struct UDecomposition {
  DenseMatrix Y;   // k x k        C^* U
  DenseMatrix Z;   // (s+1) x k    V^* U
  DenseMatrix EF;  // n x k        U - C Y - V Z
  double ef_norm = 0.0;
};

inline UDecomposition decompose_U(const RecycleSpace* recycle,
                                  const ArnoldiDecomposition& d) {
  UDecomposition u;
  if (!recycle || recycle->k() == 0) {
    u.Z = DenseMatrix(d.H.rows(), 0);
    return u;
  }
  u.Y = adjoint_times(recycle->C, recycle->U);
  u.Z = adjoint_times(d.V, recycle->U);
  u.EF = recycle->U - recycle->C * u.Y - d.V * u.Z;
  u.ef_norm = frobenius_norm(u.EF);
  return u;
}

/// The perturbed Arnoldi-like matrix for the shifted operator on [U V_s]:
///   G~(sigma) = [[I_k + sigma Y, B], [sigma Z, H + sigma I]],
/// satisfying (A + sigma I)[U V_s] = [C V] G~(sigma) + sigma [EF 0].
inline DenseMatrix build_G_tilde(const ArnoldiDecomposition& d,
                                 const UDecomposition& udec, Complex sigma) {
  const std::size_t k = d.k();
  const std::size_t s = d.steps;
  DenseMatrix g(k + d.H.rows(), k + s);
  for (std::size_t j = 0; j < k; ++j) {
    g(j, j) = Complex(1.0, 0.0);
    for (std::size_t i = 0; i < k; ++i) g(i, j) += sigma * udec.Y(i, j);
    for (std::size_t i = 0; i < d.H.rows(); ++i)
      g(k + i, j) = sigma * udec.Z(i, j);
  }
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t i = 0; i < k; ++i) g(i, k + j) = d.B(i, j);
    for (std::size_t i = 0; i < d.H.rows(); ++i) g(k + i, k + j) = d.H(i, j);
    g(k + j, k + j) += sigma;
  }
  return g;
}

/// Solves the approximate collinearity system
///   [G~(sigma)  z][y; beta] = beta0 ||r0|| e_{k+1}.
/// Returns nothing when the system is singular: over the (unavailable)
/// exactly-shifted deflation basis no collinear residual exists, and the
/// caller skips this cycle's update for that shift.  On a breakdown cycle z
/// vanishes and the square system G~ y = rhs is solved directly (beta = 0).
inline std::optional<std::pair<Vector, Complex>> approx_collinear_solve(
    const DenseMatrix& g_tilde, const Vector& z_hat, Complex beta0,
    double r0_norm, std::size_t k) {
  const std::size_t rows = g_tilde.rows();
  const std::size_t cols = g_tilde.cols();
  const Complex scale = beta0 * r0_norm;
  const double znorm = norm2(z_hat);
  try {
    if (rows == cols)
      return std::make_pair(
          solve_square(g_tilde, scaled(unit_vector(rows, k), scale)),
          Complex(0.0, 0.0));
    if (znorm == 0.0) return std::nullopt;
    // Normalized z column: the pivot test then flags genuine singularity
    // rather than the scale gap between z and G~ near convergence.
    DenseMatrix aug(rows, cols + 1);
    for (std::size_t j = 0; j < cols; ++j)
      for (std::size_t i = 0; i < rows; ++i) aug(i, j) = g_tilde(i, j);
    for (std::size_t i = 0; i < rows; ++i) aug(i, cols) = z_hat[i] / znorm;
    Vector sol = solve_square(aug, scaled(unit_vector(rows, k), scale));
    const Complex beta = sol.back() / znorm;
    sol.pop_back();
    return std::make_pair(std::move(sol), beta);
  } catch (const SingularError&) {
    return std::nullopt;
  }
}

/// Level-entry update of a shifted approximation through the recycle space:
///   x <- x + U C^* r,  r <- (I - C C^*) r - sigma U C^* r,
/// the true orthogonal projection plus the sigma-proportional perturbation,
/// with the defect accumulation w <- w - sigma U C^* r.  The new residual is
/// assembled from the identity above without touching the operator.
inline std::pair<ShiftState, Vector> perturbed_projection(
    const RecycleSpace& recycle, ShiftState state, const Vector& r_sigma) {
  const Vector coeffs = adjoint_times(recycle.C, r_sigma);
  Vector ucr = zeros(state.x.size());
  for (std::size_t i = 0; i < recycle.k(); ++i)
    axpy(coeffs[i], recycle.U.column(i), ucr);

  Vector r_new = r_sigma;
  for (std::size_t i = 0; i < recycle.k(); ++i)
    axpy(-coeffs[i], recycle.C.column(i), r_new);
  axpy(-state.sigma, ucr, r_new);

  axpy(Complex(1.0, 0.0), ucr, state.x);
  axpy(-state.sigma, ucr, state.w);
  return {std::move(state), std::move(r_new)};
}

/// Residual-norm estimate for the shifted system after a cycle:
///   |beta~| ||r_m|| + |sigma| ||EF|| ||y_{1:k}|| + ||w||.
inline double residual_bound(const ShiftState& state, const Vector& y_tilde,
                             Complex beta_tilde, const UDecomposition& udec,
                             double base_resid_norm) {
  const std::size_t k = udec.Y.rows();
  double y1 = 0.0;
  for (std::size_t i = 0; i < k; ++i) y1 += std::norm(y_tilde[i]);
  return std::abs(beta_tilde) * base_resid_norm +
         std::abs(state.sigma) * udec.ef_norm * std::sqrt(y1) +
         norm2(state.w);
}

struct ShiftUpdateOutcome {
  ShiftState state;
  Vector reconstructed;  // beta~ r_m - sigma EF y_{1:k} + w_entry
  double bound = 0.0;
  bool applied = false;
};

/// Applies one cycle's approximate-collinearity correction to a shifted
/// system.  The residual is reconstructed from the relation
///   r~^(sigma) = beta~ r_m - sigma EF (y~)_{1:k} + w
/// (w at cycle entry); if its norm fails to decrease the update is rejected
/// and the state deactivated, keeping the prior iterate.  On acceptance the
/// defect picks up the rule w <- w - sigma EF (y~)_{1:k}.
inline ShiftUpdateOutcome update_shift_state(
    ShiftState state, const RecycleSpace* recycle,
    const ArnoldiDecomposition& d, const UDecomposition& udec,
    const Vector& y_tilde, Complex beta_tilde, const Vector& base_residual,
    double tol_absolute) {
  const std::size_t k = recycle ? recycle->k() : 0;
  ShiftUpdateOutcome out;

  Vector efy = zeros(base_residual.size());
  for (std::size_t i = 0; i < k; ++i) axpy(y_tilde[i], udec.EF.column(i), efy);

  out.reconstructed = scaled(base_residual, beta_tilde);
  axpy(-state.sigma, efy, out.reconstructed);
  axpy(Complex(1.0, 0.0), state.w, out.reconstructed);
  const double norm = norm2(out.reconstructed);
  out.bound =
      residual_bound(state, y_tilde, beta_tilde, udec, norm2(base_residual));

  if (norm >= state.last_resid_norm) {
    state.active = false;  // correction ceased to reduce the residual
    out.state = std::move(state);
    return out;
  }
  for (std::size_t i = 0; i < k; ++i)
    axpy(y_tilde[i], recycle->U.column(i), state.x);
  for (std::size_t j = 0; j < d.steps; ++j)
    axpy(y_tilde[k + j], d.V.column(j), state.x);
  axpy(-state.sigma, efy, state.w);
  state.beta = beta_tilde;
  state.last_resid_norm = norm;
  if (norm <= tol_absolute) state.converged = true;
  out.applied = true;
  out.state = std::move(state);
  return out;
}

struct RecursiveFamilyResult : ShiftedFamilyResult {
  std::optional<RecycleSpace> recycle;  // valid for A + recycle_shift I
  Complex recycle_shift;
};

/// Fixed-storage solver for a family (A + sigma I) x = b: the base system
/// runs Recycled GMRES while every shifted approximation is improved each
/// cycle through the approximate collinearity solve.  At base convergence,
/// systems whose explicit residual meets the tolerance are finalized; the
/// method then re-bases on the first unconverged shift (ascending |sigma|)
/// with shifts translated, and plain Recycled GMRES finishes a final lone
/// system.  Input order of `shifts` is preserved in the result (index 0 is
/// the base system).
inline RecursiveFamilyResult solve_family_recursive(
    const ShiftedOperator& op, const Vector& b,
    std::span<const Complex> shifts, std::optional<RecycleSpace> recycle_in,
    std::size_t k_target, const SolveParams& params,
    const CycleObserver& observer = {}, RunClock* clock = nullptr) {
  RunClock local_clock;
  if (!clock) clock = &local_clock;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) throw DimensionMismatch("solve_family_recursive: zero rhs");
  const std::size_t n = op.size();
  const std::size_t nsys = shifts.size() + 1;

  RecursiveFamilyResult out;
  out.x.assign(nsys, zeros(n));
  out.converged.assign(nsys, false);
  out.relative_residual.assign(nsys, 0.0);

  struct LevelSys {
    int id;
    Complex sigma_abs;
  };
  std::vector<LevelSys> remaining;
  remaining.push_back({0, Complex(0.0, 0.0)});
  std::vector<int> zero_aliases;
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    if (shifts[i] == Complex(0.0, 0.0))
      zero_aliases.push_back(static_cast<int>(i + 1));  // duplicate of base
    else
      remaining.push_back({static_cast<int>(i + 1), shifts[i]});
  }
  std::stable_sort(remaining.begin(), remaining.end(),
                   [](const LevelSys& a, const LevelSys& b_) {
                     return std::abs(a.sigma_abs) < std::abs(b_.sigma_abs);
                   });

  std::optional<RecycleSpace> recycle = std::move(recycle_in);
  Complex recycle_sigma(0.0, 0.0);
  int level = 0;

  auto record = [&](int id, Complex sigma_abs, double rnorm) {
    out.log.samples.push_back({id, op.base_shift() + sigma_abs, clock->cycles,
                               clock->iterations, op.counter().count, rnorm,
                               level});
  };
  auto report = [&](int id, Complex sigma_abs, bool conv, double rel) {
    out.converged[id] = conv;
    out.relative_residual[id] = rel;
    out.log.reports.push_back(
        {id, op.base_shift() + sigma_abs, conv, rel, op.counter().count});
  };

  while (!remaining.empty()) {
    if (remaining.size() == 1) {
      const LevelSys sys = remaining.front();
      std::optional<RecycleSpace> rec_here;
      if (recycle) rec_here = recycle->rebased(sys.sigma_abs - recycle_sigma);
      RecycledSolveResult res = recycled_gmres(
          op.rebased(sys.sigma_abs), b, std::move(rec_here), k_target, params,
          &out.x[sys.id], {}, clock, sys.id);
      out.x[sys.id] = std::move(res.x);
      for (ResidualSample& sample : res.log.samples) sample.level = level;
      out.log.append(std::move(res.log));
      out.converged[sys.id] = res.converged;
      out.relative_residual[sys.id] = res.relative_residual;
      recycle = std::move(res.recycle);
      recycle_sigma = sys.sigma_abs;
      break;
    }

    const LevelSys base = remaining.front();
    const ShiftedOperator op_level = op.rebased(base.sigma_abs);

    Vector r = (norm2(out.x[base.id]) == 0.0)
                   ? b
                   : op_level.residual(b, out.x[base.id]);
    if (recycle) {
      recycle = recycle->rebased(base.sigma_abs - recycle_sigma);
      recycle_sigma = base.sigma_abs;
      auto [px, pr] = project_initial(*recycle, out.x[base.id], r);
      out.x[base.id] = std::move(px);
      r = std::move(pr);
    }

    std::vector<ShiftState> states;
    states.reserve(remaining.size() - 1);
    const double r_dot = norm2(r) * norm2(r);
    for (std::size_t i = 1; i < remaining.size(); ++i) {
      const LevelSys sys = remaining[i];
      ShiftState st;
      st.system_id = sys.id;
      st.sigma = sys.sigma_abs - base.sigma_abs;
      st.x = out.x[sys.id];
      st.w = zeros(n);
      Vector r_s = (norm2(st.x) == 0.0)
                       ? b
                       : op_level.residual(b, st.x, st.sigma);
      if (recycle) {
        auto [st2, r2] = perturbed_projection(*recycle, std::move(st), r_s);
        st = std::move(st2);
        r_s = std::move(r2);
      }
      // Entry relation r^(sigma) = beta r + w made exact by construction.
      st.beta = (r_dot == 0.0) ? Complex(1.0, 0.0) : dot(r, r_s) / r_dot;
      st.w = r_s;
      axpy(-st.beta, r, st.w);
      st.last_resid_norm = norm2(r_s);
      record(sys.id, sys.sigma_abs, st.last_resid_norm);
      states.push_back(std::move(st));
    }
    record(base.id, base.sigma_abs, norm2(r));

    std::size_t level_cycles = 0;
    bool base_converged = false;
    while (level_cycles < params.max_cycles) {
      if (norm2(r) <= params.tol * bnorm) {
        Vector r_explicit = op_level.residual(b, out.x[base.id]);
        record(base.id, base.sigma_abs, norm2(r_explicit));
        if (norm2(r_explicit) <= params.tol * bnorm) {
          base_converged = true;
          break;
        }
        // Recurrence drift: restart from the true residual, absorbing the
        // change of r into every defect so the entry relations survive.
        Vector r_new = std::move(r_explicit);
        if (recycle) {
          auto [px, pr] = project_initial(*recycle, out.x[base.id], r_new);
          out.x[base.id] = std::move(px);
          r_new = std::move(pr);
        }
        for (ShiftState& st : states)
          if (st.active && !st.converged) axpy(st.beta, vsub(r, r_new), st.w);
        r = std::move(r_new);
        continue;
      }

      if (recycle) {
        // Keep the base residual orthogonal to the current C at any depth;
        // the change is absorbed into every defect exactly.
        auto [px, pr] = project_initial(*recycle, out.x[base.id], r);
        out.x[base.id] = std::move(px);
        for (ShiftState& st : states)
          if (st.active && !st.converged) axpy(st.beta, vsub(r, pr), st.w);
        r = std::move(pr);
      }
      const Vector r_entry = r;
      RecycledCycleResult cyc = rgmres_cycle(
          op_level, recycle ? &*recycle : nullptr, out.x[base.id], r,
          params.m, params.tol * bnorm);
      const UDecomposition udec =
          decompose_U(recycle ? &*recycle : nullptr, cyc.decomp);
      out.x[base.id] = std::move(cyc.x);
      r = std::move(cyc.residual);
      ++level_cycles;
      ++clock->cycles;
      clock->iterations += cyc.decomp.steps;
      record(base.id, base.sigma_abs, norm2(r));

      CycleView view;
      view.cycle = clock->cycles;
      view.base_sigma = op_level.base_shift();
      view.base_x = &out.x[base.id];
      view.base_residual = &r;
      view.base_norm = norm2(r);
      view.recycle = recycle ? &*recycle : nullptr;
      view.decomp = &cyc.decomp;
      view.udec = &udec;
      std::vector<Vector> kept_ys(states.size());

      for (std::size_t si = 0; si < states.size(); ++si) {
        ShiftState& st = states[si];
        bool updated = false;
        double bound = 0.0;
        if (st.active && !st.converged) {
          const DenseMatrix g_tilde =
              build_G_tilde(cyc.decomp, udec, st.sigma);
          auto sol = approx_collinear_solve(g_tilde, cyc.z_hat, st.beta,
                                            cyc.decomp.beta0, udec.Y.rows());
          if (!sol) {
            // Re-anchor the defect to the new base residual and move on.
            axpy(st.beta, vsub(r_entry, r), st.w);
            out.log.warnings.push_back(
                "shift skipped one cycle (singular collinearity system)");
          } else {
            ShiftUpdateOutcome outcome = update_shift_state(
                std::move(st), recycle ? &*recycle : nullptr, cyc.decomp,
                udec, sol->first, sol->second, r, params.tol * bnorm);
            st = std::move(outcome.state);
            updated = outcome.applied;
            bound = outcome.bound;
            if (updated) kept_ys[si] = std::move(sol->first);
          }
        }
        record(st.system_id, base.sigma_abs + st.sigma, st.last_resid_norm);
        if (observer) {
          ShiftCycleView sv;
          sv.system_id = st.system_id;
          sv.sigma = op_level.base_shift() + st.sigma;
          sv.x = &st.x;
          sv.beta = st.beta;
          sv.active = st.active;
          sv.converged = st.converged;
          sv.updated_this_cycle = updated;
          sv.reported_norm = st.last_resid_norm;
          sv.w = &st.w;
          sv.y = updated ? &kept_ys[si] : nullptr;
          sv.bound = bound;
          view.shifts.push_back(sv);
        }
      }
      if (observer) observer(view);

      if (params.refresh_every_cycle || !recycle) {
        try {
          recycle = harmonic_ritz_update(
              cyc.decomp, recycle ? &*recycle : nullptr,
              std::min(k_target, cyc.decomp.k() + cyc.decomp.steps));
          recycle_sigma = base.sigma_abs;
        } catch (const LinalgError& e) {
          out.log.warnings.push_back(
              std::string("recycle refresh skipped: ") + e.what());
        }
      }
    }

    report(base.id, base.sigma_abs, base_converged,
           norm2(op_level.residual(b, out.x[base.id])) / bnorm);

    std::vector<LevelSys> next;
    for (ShiftState& st : states) {
      out.x[st.system_id] = st.x;
      const double rel =
          norm2(op_level.residual(b, st.x, st.sigma)) / bnorm;
      if (rel <= params.tol)
        report(st.system_id, base.sigma_abs + st.sigma, true, rel);
      else
        next.push_back({st.system_id, base.sigma_abs + st.sigma});
    }
    remaining = std::move(next);
    ++level;
  }

  for (int id : zero_aliases) {
    out.x[id] = out.x[0];
    out.converged[id] = out.converged[0];
    out.relative_residual[id] = out.relative_residual[0];
    out.log.reports.push_back({id, op.base_shift(), out.converged[id],
                               out.relative_residual[id],
                               op.counter().count});
  }
  out.recycle = std::move(recycle);
  out.recycle_shift = recycle_sigma;
  return out;
}

}  // namespace shiftrec
