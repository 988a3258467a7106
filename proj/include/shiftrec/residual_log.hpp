#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "shiftrec/arnoldi.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

struct UDecomposition;  // approx_collinear.hpp

/// Restart-cycle parameters shared by every driver.
struct SolveParams {
  std::size_t m = 30;           // cycle length
  double tol = 1e-8;            // relative residual tolerance
  std::size_t max_cycles = 300;
  bool refresh_every_cycle = true;  // harmonic-Ritz refresh of the recycle space
};

/// One residual measurement: which system, when, and at what cost.
struct ResidualSample {
  int system_id = 0;
  Complex shift;
  std::size_t cycle = 0;       // global cycle index within the run
  std::size_t iterations = 0;  // cumulative Arnoldi steps within the run
  long long matvecs = 0;       // cumulative counted operator applications
  double residual_norm = 0.0;  // absolute
  int level = 0;               // recursion depth that produced the sample
};

struct SystemReport {
  int system_id = 0;
  Complex shift;
  bool converged = false;
  double final_relative_residual = 0.0;
  long long matvecs_at_finish = 0;
};

struct ResidualLog {
  std::vector<ResidualSample> samples;
  std::vector<SystemReport> reports;
  std::vector<std::string> warnings;

  void append(ResidualLog other) {
    samples.insert(samples.end(), other.samples.begin(), other.samples.end());
    reports.insert(reports.end(), other.reports.begin(), other.reports.end());
    warnings.insert(warnings.end(), other.warnings.begin(),
                    other.warnings.end());
  }
};

/// Shared cycle/iteration counters so recursive and sequence drivers emit
/// monotone log columns.
struct RunClock {
  std::size_t cycles = 0;
  std::size_t iterations = 0;
};

/// Per-cycle state of one shifted system, handed to observers.
struct ShiftCycleView {
  int system_id = 0;
  Complex sigma;             // absolute shift of this system
  const Vector* x = nullptr;
  Complex beta;              // current collinearity factor
  bool active = true;
  bool converged = false;
  bool stalled = false;
  bool updated_this_cycle = false;
  double reported_norm = 0.0;  // collinear or reconstructed residual norm
  const Vector* w = nullptr;   // defect vector (fixed-storage method only)
  const Vector* y = nullptr;   // this cycle's augmented solve vector
  double bound = 0.0;          // residual-norm bound (fixed-storage method)
};

/// Snapshot of a finished cycle.  Pointers stay valid only for the duration
/// of the callback.
struct CycleView {
  std::size_t cycle = 0;
  Complex base_sigma;  // absolute shift of the system driving this cycle
  const Vector* base_x = nullptr;
  const Vector* base_residual = nullptr;
  double base_norm = 0.0;
  const RecycleSpace* recycle = nullptr;  // space used during this cycle
  const ArnoldiDecomposition* decomp = nullptr;
  const UDecomposition* udec = nullptr;
  std::vector<ShiftCycleView> shifts;
};

using CycleObserver = std::function<void(const CycleView&)>;

}  // namespace shiftrec
