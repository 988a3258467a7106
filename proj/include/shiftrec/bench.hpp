#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shiftrec/approx_collinear.hpp"
#include "shiftrec/gmres.hpp"
#include "shiftrec/matrix_market.hpp"
#include "shiftrec/multi_deflation.hpp"
#include "shiftrec/problems.hpp"
#include "shiftrec/recycling.hpp"
#include "shiftrec/types.hpp"

namespace shiftrec {

enum class ProblemKind { bidiagonal, matrix_market, qcd_assembled };
enum class RhsKind { ones, unit, seeded_random };
enum class SolveMode {
  gmres,
  sgmres,
  rgmres,
  repeated_rgmres,
  srgmres_approx,
  srgmres_multideflation
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemSpec {
  ProblemKind kind = ProblemKind::bidiagonal;
  std::size_t n = 1000;
  std::string matrix_path;
  Complex kappa = Complex(0.0, 0.0);
  std::vector<Complex> shifts;
  RhsKind rhs = RhsKind::ones;
  std::uint64_t seed = 1;
};

struct RunConfig {
  ProblemSpec problem;
  SolveMode mode = SolveMode::gmres;
  std::size_t m = 100;
  std::size_t k = 50;
  double tol = 1e-8;
  std::size_t max_cycles = 300;
  std::size_t sequence = 1;  // number of systems in the slowly-changing chain
  std::string out_dir;       // empty: artifacts stay in memory

  SolveParams params() const {
    SolveParams p;
    p.m = m;
    p.tol = tol;
    p.max_cycles = max_cycles;
    return p;
  }

  void validate() const {
    if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("tol must be in (0, 1)");
    if (m < 1) throw ConfigError("m must be >= 1");
    if (sequence < 1) throw ConfigError("sequence must be >= 1");
    const bool recycled = mode == SolveMode::rgmres ||
                          mode == SolveMode::repeated_rgmres ||
                          mode == SolveMode::srgmres_approx ||
                          mode == SolveMode::srgmres_multideflation;
    if (recycled && !(k >= 1 && k < m))
      throw ConfigError("recycled modes need 1 <= k < m");
    for (std::size_t i = 0; i < problem.shifts.size(); ++i)
      for (std::size_t j = i + 1; j < problem.shifts.size(); ++j)
        if (problem.shifts[i] == problem.shifts[j])
          throw ConfigError("shifts must be distinct");
    if (problem.kind != ProblemKind::bidiagonal && problem.matrix_path.empty())
      throw ConfigError("matrix path required for this problem kind");
    if (problem.kind == ProblemKind::bidiagonal && problem.n < 2)
      throw ConfigError("bidiagonal problem needs n >= 2");
  }
};

// ---------------------------------------------------------------------------
// Parsing helpers (flags and config files share these).
// ---------------------------------------------------------------------------

inline Complex parse_complex(const std::string& text) {
  // Accepts "1.5", "2i", "1.5+0.5i", "1e-2-3i".
  std::string s = text;
  if (s.empty()) throw ConfigError("empty number");
  if (s.back() == 'i' || s.back() == 'I') {
    s.pop_back();
    // Split into real +/- imag at the last sign not part of an exponent.
    for (std::size_t pos = s.size(); pos-- > 1;) {
      if ((s[pos] == '+' || s[pos] == '-') &&
          s[pos - 1] != 'e' && s[pos - 1] != 'E') {
        const double re = std::stod(s.substr(0, pos));
        const std::string imag_part = s.substr(pos);
        const double im = (imag_part == "+" || imag_part == "-")
                              ? (imag_part == "+" ? 1.0 : -1.0)
                              : std::stod(imag_part);
        return Complex(re, im);
      }
    }
    if (s.empty() || s == "+") return Complex(0.0, 1.0);
    if (s == "-") return Complex(0.0, -1.0);
    return Complex(0.0, std::stod(s));
  }
  return Complex(std::stod(s), 0.0);
}

inline std::vector<Complex> parse_shift_list(const std::string& text) {
  std::vector<Complex> shifts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    shifts.push_back(parse_complex(item));
  }
  return shifts;
}

inline SolveMode parse_mode(const std::string& text) {
  if (text == "gmres") return SolveMode::gmres;
  if (text == "sgmres") return SolveMode::sgmres;
  if (text == "rgmres") return SolveMode::rgmres;
  if (text == "repeated-rgmres") return SolveMode::repeated_rgmres;
  if (text == "srgmres-approx") return SolveMode::srgmres_approx;
  if (text == "srgmres-multideflation")
    return SolveMode::srgmres_multideflation;
  throw ConfigError("unknown mode '" + text + "'");
}

inline const char* mode_name(SolveMode mode) {
  switch (mode) {
    case SolveMode::gmres: return "gmres";
    case SolveMode::sgmres: return "sgmres";
    case SolveMode::rgmres: return "rgmres";
    case SolveMode::repeated_rgmres: return "repeated-rgmres";
    case SolveMode::srgmres_approx: return "srgmres-approx";
    case SolveMode::srgmres_multideflation: return "srgmres-multideflation";
  }
  return "?";
}

/// Flat "key = value" file mirroring the command-line flags; '#' and '%'
/// start comments.
inline std::map<std::string, std::string> read_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t comment = line.find_first_of("#%");
    if (comment != std::string::npos) line = line.substr(0, comment);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const std::size_t b = s.find_first_not_of(" \t\r");
      const std::size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " +
                                       std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

inline void apply_key_value(RunConfig& config, const std::string& key,
                            const std::string& value) {
  try {
    if (key == "matrix") {
      config.problem.matrix_path = value;
      if (config.problem.kind == ProblemKind::bidiagonal)
        config.problem.kind = ProblemKind::matrix_market;
    } else if (key == "problem") {
      if (value.rfind("bidiagonal:", 0) == 0) {
        config.problem.kind = ProblemKind::bidiagonal;
        config.problem.n = std::stoul(value.substr(11));
      } else {
        throw ConfigError("unknown problem '" + value + "'");
      }
    } else if (key == "kappa") {
      config.problem.kappa = parse_complex(value);
      if (!config.problem.matrix_path.empty())
        config.problem.kind = ProblemKind::qcd_assembled;
    } else if (key == "shifts") {
      config.problem.shifts = parse_shift_list(value);
    } else if (key == "rhs") {
      if (value == "ones") config.problem.rhs = RhsKind::ones;
      else if (value == "unit") config.problem.rhs = RhsKind::unit;
      else if (value == "seeded-random")
        config.problem.rhs = RhsKind::seeded_random;
      else throw ConfigError("unknown rhs '" + value + "'");
    } else if (key == "seed") {
      config.problem.seed = std::stoull(value);
    } else if (key == "mode") {
      config.mode = parse_mode(value);
    } else if (key == "m") {
      config.m = std::stoul(value);
    } else if (key == "k") {
      config.k = std::stoul(value);
    } else if (key == "tol") {
      config.tol = std::stod(value);
    } else if (key == "max-cycles") {
      config.max_cycles = std::stoul(value);
    } else if (key == "sequence") {
      config.sequence = std::stoul(value);
    } else if (key == "out") {
      config.out_dir = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad value for '" + key + "': " + value);
  } catch (const std::out_of_range&) {
    throw ConfigError("value out of range for '" + key + "': " + value);
  }
}

inline RunConfig config_from_map(
    const std::map<std::string, std::string>& kv) {
  RunConfig config;
  for (const auto& [key, value] : kv) apply_key_value(config, key, value);
  return config;
}

// ---------------------------------------------------------------------------
// CSV formatting.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_shift(Complex s) {
  if (s.imag() == 0.0) return format_double(s.real());
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.17g%+.17gi", s.real(), s.imag());
  return buf;
}

}  // namespace detail

struct SystemRow {
  int system_id = 0;
  Complex shift;
  bool converged = false;
  double relative_residual = 0.0;
  long long matvecs = 0;  // counter value when the system finished
};

struct RunOutcome {
  int exit_code = 0;  // 0 converged everywhere, 1 otherwise
  long long total_matvecs = 0;
  std::vector<SystemRow> systems;
  std::vector<Vector> solutions;  // aligned with systems
  ResidualLog log;
  std::string history_csv;
  std::string summary_csv;
};

inline std::string render_history_csv(const ResidualLog& log) {
  std::string out =
      "system_id,shift,cycle,iteration,matvecs_cumulative,residual_norm\n";
  for (const ResidualSample& s : log.samples) {
    out += std::to_string(s.system_id);
    out += ',';
    out += detail::format_shift(s.shift);
    out += ',';
    out += std::to_string(s.cycle);
    out += ',';
    out += std::to_string(s.iterations);
    out += ',';
    out += std::to_string(s.matvecs);
    out += ',';
    out += detail::format_double(s.residual_norm);
    out += '\n';
  }
  return out;
}

inline std::string render_summary_csv(SolveMode mode,
                                      const std::vector<SystemRow>& systems,
                                      long long total_matvecs,
                                      bool all_converged) {
  std::string out = "mode,system,shift,converged,total_matvecs\n";
  for (const SystemRow& row : systems) {
    out += mode_name(mode);
    out += ',';
    out += std::to_string(row.system_id);
    out += ',';
    out += detail::format_shift(row.shift);
    out += ',';
    out += row.converged ? '1' : '0';
    out += ',';
    out += std::to_string(row.matvecs);
    out += '\n';
  }
  out += mode_name(mode);
  out += ",total,,";
  out += all_converged ? '1' : '0';
  out += ',';
  out += std::to_string(total_matvecs);
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Problem realization.
// ---------------------------------------------------------------------------

/// Matrix of the family_index-th system in the slowly-changing sequence.
/// Bidiagonal sequences perturb the first matrix (pattern-preserving,
/// unit-Frobenius perturbations); file-backed problems repeat the matrix.
inline SparseMatrix realize_matrix(const ProblemSpec& spec,
                                   std::size_t family_index) {
  switch (spec.kind) {
    case ProblemKind::bidiagonal: {
      SparseMatrix base = bidiagonal_b1(spec.n);
      if (family_index == 0) return base;
      return perturb_bidiagonal(base, spec.seed + family_index);
    }
    case ProblemKind::matrix_market:
      return load_matrix_market(spec.matrix_path);
    case ProblemKind::qcd_assembled:
      return qcd_assemble(load_matrix_market(spec.matrix_path), spec.kappa);
  }
  throw ConfigError("unreachable problem kind");
}

inline Vector realize_rhs(const ProblemSpec& spec, std::size_t n) {
  switch (spec.rhs) {
    case RhsKind::ones: return ones_rhs(n);
    case RhsKind::unit: return unit_vector(n, 0);
    case RhsKind::seeded_random: {
      SplitMix64 rng = SplitMix64::seeded(spec.seed, 0x7b5ULL);
      Vector b(n);
      for (std::size_t i = 0; i < n; ++i) b[i] = rng.next_complex();
      scal(Complex(1.0 / norm2(b), 0.0), b);
      return b;
    }
  }
  throw ConfigError("unreachable rhs kind");
}

// ---------------------------------------------------------------------------
// The benchmark driver.
// ---------------------------------------------------------------------------

inline RunOutcome run(const RunConfig& config,
                      const CycleObserver& observer = {}) {
  config.validate();
  const SolveParams params = config.params();
  const std::vector<Complex>& shifts = config.problem.shifts;
  const std::size_t per_family = 1 + shifts.size();

  RunOutcome outcome;
  MatvecCounter counter;
  RunClock clock;

  std::optional<RecycleSpace> carried;  // recycled modes
  Complex carried_shift(0.0, 0.0);      // shift its AU = C refers to

  // Matrices must outlive the operators referencing them.
  std::vector<SparseMatrix> matrices;
  matrices.reserve(config.sequence);
  for (std::size_t f = 0; f < config.sequence; ++f)
    matrices.push_back(realize_matrix(config.problem, f));
  const Vector b = realize_rhs(config.problem, matrices.front().rows());

  // xs, when given, is indexed by the solver's local system id.
  auto absorb = [&](ResidualLog log, int id_offset,
                    const std::vector<Vector>* xs = nullptr) {
    for (const SystemReport& r : log.reports) {
      outcome.systems.push_back({r.system_id + id_offset, r.shift,
                                 r.converged, r.final_relative_residual,
                                 r.matvecs_at_finish});
      if (xs)
        outcome.solutions.push_back(
            (*xs)[static_cast<std::size_t>(r.system_id)]);
    }
    for (ResidualSample& s : log.samples) s.system_id += id_offset;
    for (SystemReport& r : log.reports) r.system_id += id_offset;
    outcome.log.append(std::move(log));
  };

  for (std::size_t f = 0; f < config.sequence; ++f) {
    const SparseMatrix& a = matrices[f];
    const ShiftedOperator op(a, counter);
    const int offset = static_cast<int>(f * per_family);

    // Re-base the carried subspace onto the new family's matrix.
    auto rebase_for_family = [&]() -> std::optional<RecycleSpace> {
      if (!carried) return std::nullopt;
      if (f == 0) return carried;
      std::optional<RecycleSpace> fresh =
          RecycleSpace::from_basis(op, carried->U);
      carried_shift = Complex(0.0, 0.0);
      return fresh;
    };

    switch (config.mode) {
      case SolveMode::gmres: {
        std::vector<Complex> sigmas{Complex(0.0, 0.0)};
        sigmas.insert(sigmas.end(), shifts.begin(), shifts.end());
        for (std::size_t s = 0; s < sigmas.size(); ++s) {
          SolveResult res =
              restarted_gmres(op.rebased(sigmas[s]), b, params, nullptr,
                              &clock, static_cast<int>(s));
          std::vector<Vector> xs(sigmas.size());
          xs[s] = res.x;  // single-system result, local id s
          absorb(std::move(res.log), offset, &xs);
        }
        break;
      }
      case SolveMode::sgmres: {
        ShiftedFamilyResult res =
            shifted_gmres(op, b, shifts, params, observer, &clock);
        absorb(std::move(res.log), offset, &res.x);
        break;
      }
      case SolveMode::rgmres: {
        std::optional<RecycleSpace> rec = rebase_for_family();
        if (rec && carried_shift != Complex(0.0, 0.0))
          rec = rec->rebased(-carried_shift);
        RecycledSolveResult res = recycled_gmres(op, b, std::move(rec),
                                                 config.k, params, nullptr,
                                                 observer, &clock, 0);
        const std::vector<Vector> xs{res.x};
        absorb(std::move(res.log), offset, &xs);
        carried = std::move(res.recycle);
        carried_shift = Complex(0.0, 0.0);
        break;
      }
      case SolveMode::repeated_rgmres: {
        std::optional<RecycleSpace> rec = rebase_for_family();
        std::vector<Complex> sigmas{Complex(0.0, 0.0)};
        sigmas.insert(sigmas.end(), shifts.begin(), shifts.end());
        for (std::size_t s = 0; s < sigmas.size(); ++s) {
          std::optional<RecycleSpace> rec_here;
          if (rec) rec_here = rec->rebased(sigmas[s] - carried_shift);
          RecycledSolveResult res = recycled_gmres(
              op.rebased(sigmas[s]), b, std::move(rec_here), config.k, params,
              nullptr, observer, &clock, static_cast<int>(s));
          std::vector<Vector> xs(sigmas.size());
          xs[s] = res.x;  // single-system result, local id s
          absorb(std::move(res.log), offset, &xs);
          rec = std::move(res.recycle);
          carried_shift = sigmas[s];
        }
        carried = std::move(rec);
        break;
      }
      case SolveMode::srgmres_approx: {
        std::optional<RecycleSpace> rec = rebase_for_family();
        if (rec && carried_shift != Complex(0.0, 0.0))
          rec = rec->rebased(-carried_shift);
        RecursiveFamilyResult res = solve_family_recursive(
            op, b, shifts, std::move(rec), config.k, params, observer,
            &clock);
        absorb(std::move(res.log), offset, &res.x);
        carried = std::move(res.recycle);
        carried_shift = res.recycle_shift;
        break;
      }
      case SolveMode::srgmres_multideflation: {
        std::optional<RecycleSpace> rec = rebase_for_family();
        if (!rec) {
          // No subspace yet (first family): fixed-storage route bootstraps.
          RecursiveFamilyResult res = solve_family_recursive(
              op, b, shifts, std::nullopt, config.k, params, observer,
              &clock);
          absorb(std::move(res.log), offset, &res.x);
          carried = std::move(res.recycle);
          carried_shift = res.recycle_shift;
          break;
        }
        if (carried_shift != Complex(0.0, 0.0))
          rec = rec->rebased(-carried_shift);
        std::vector<Complex> family_shifts{Complex(0.0, 0.0)};
        for (const Complex& s : shifts)
          if (s != Complex(0.0, 0.0)) family_shifts.push_back(s);
        bool family_ok = true;
        ShiftedDeflationFamily family;
        try {
          family = build_family(op, family_shifts, rec->U);
          for (double angle : verify_family(op, family))
            family_ok = family_ok && angle <= 1e-8;
        } catch (const FamilyBuildError& e) {
          family_ok = false;
          outcome.log.warnings.push_back(
              std::string("deflation family build failed: ") + e.what());
        }
        if (!family_ok) {
          outcome.log.warnings.push_back(
              "deflation family inaccurate; falling back to the "
              "fixed-storage scheme for this family");
          RecursiveFamilyResult res = solve_family_recursive(
              op, b, shifts, std::move(rec), config.k, params, observer,
              &clock);
          absorb(std::move(res.log), offset, &res.x);
          carried = std::move(res.recycle);
          carried_shift = res.recycle_shift;
          break;
        }
        ShiftedFamilyResult res = multi_deflation_shifted_rgmres(
            op, b, shifts, family, params, observer, &clock);
        absorb(std::move(res.log), offset, &res.x);
        carried = RecycleSpace{family.space_for(Complex(0.0, 0.0)), family.C};
        carried_shift = Complex(0.0, 0.0);
        break;
      }
    }
  }

  outcome.total_matvecs = counter.count;
  bool all_converged = true;
  for (const SystemRow& row : outcome.systems)
    all_converged = all_converged && row.converged;
  outcome.exit_code = all_converged ? 0 : 1;
  outcome.history_csv = render_history_csv(outcome.log);
  outcome.summary_csv = render_summary_csv(config.mode, outcome.systems,
                                           outcome.total_matvecs,
                                           all_converged);

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    std::ofstream hist(std::filesystem::path(config.out_dir) / "history.csv");
    hist << outcome.history_csv;
    std::ofstream summ(std::filesystem::path(config.out_dir) / "summary.csv");
    summ << outcome.summary_csv;
  }
  return outcome;
}

struct CompareOutcome {
  RunOutcome a;
  RunOutcome b;
  double total_ratio = 0.0;
  std::string table_csv;
};

/// Runs both configurations (concurrently when SHIFT_RECYCLE_THREADS allows)
/// and joins their summaries with per-system and total matvec ratios.
inline CompareOutcome compare(const RunConfig& config_a,
                              const RunConfig& config_b) {
  int threads = 1;
  if (const char* env = std::getenv("SHIFT_RECYCLE_THREADS"))
    threads = std::max(1, std::atoi(env));

  CompareOutcome out;
  if (threads >= 2) {
    auto fut = std::async(std::launch::async,
                          [&]() { return run(config_a); });
    out.b = run(config_b);
    out.a = fut.get();
  } else {
    out.a = run(config_a);
    out.b = run(config_b);
  }

  std::string csv =
      "system,shift,mode_a,matvecs_a,mode_b,matvecs_b,ratio\n";
  const std::size_t rows = std::min(out.a.systems.size(),
                                    out.b.systems.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const SystemRow& ra = out.a.systems[i];
    const SystemRow& rb = out.b.systems[i];
    csv += std::to_string(ra.system_id);
    csv += ',';
    csv += detail::format_shift(ra.shift);
    csv += ',';
    csv += mode_name(config_a.mode);
    csv += ',';
    csv += std::to_string(ra.matvecs);
    csv += ',';
    csv += mode_name(config_b.mode);
    csv += ',';
    csv += std::to_string(rb.matvecs);
    csv += ',';
    csv += detail::format_double(
        rb.matvecs == 0 ? 0.0
                        : static_cast<double>(ra.matvecs) /
                              static_cast<double>(rb.matvecs));
    csv += '\n';
  }
  out.total_ratio = out.b.total_matvecs == 0
                        ? 0.0
                        : static_cast<double>(out.a.total_matvecs) /
                              static_cast<double>(out.b.total_matvecs);
  csv += "total,,";
  csv += mode_name(config_a.mode);
  csv += ',';
  csv += std::to_string(out.a.total_matvecs);
  csv += ',';
  csv += mode_name(config_b.mode);
  csv += ',';
  csv += std::to_string(out.b.total_matvecs);
  csv += ',';
  csv += detail::format_double(out.total_ratio);
  csv += '\n';
  out.table_csv = std::move(csv);
  return out;
}

}  // namespace shiftrec
