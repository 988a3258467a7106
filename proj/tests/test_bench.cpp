#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "shiftrec/bench.hpp"
#include "support.hpp"

using namespace shiftrec;

namespace {

RunConfig small_bidiagonal_config(SolveMode mode) {
  RunConfig config;
  config.problem.kind = ProblemKind::bidiagonal;
  config.problem.n = 120;
  config.problem.shifts = {Complex(1e-2, 0), Complex(1e-1, 0), Complex(1, 0)};
  config.problem.seed = 7;
  config.mode = mode;
  config.m = 20;
  config.k = 10;
  config.tol = 1e-8;
  config.max_cycles = 200;
  config.sequence = 2;
  return config;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("complex and shift-list parsing") {
  CHECK(parse_complex("1.5") == Complex(1.5, 0.0));
  CHECK(parse_complex("1e-2") == Complex(0.01, 0.0));
  CHECK(parse_complex("2i") == Complex(0.0, 2.0));
  CHECK(parse_complex("1.5+0.5i") == Complex(1.5, 0.5));
  CHECK(parse_complex("1e-2-3i") == Complex(0.01, -3.0));
  const auto shifts = parse_shift_list("0.1,1,10i");
  REQUIRE(shifts.size() == 3);
  CHECK(shifts[2] == Complex(0.0, 10.0));
  CHECK_THROWS_AS(parse_mode("bogus"), ConfigError);
}

TEST_CASE("config files mirror flags and validation rejects nonsense") {
  const auto path =
      std::filesystem::temp_directory_path() / "shiftrec_cfg.txt";
  {
    std::ofstream out(path);
    out << "# comment\n"
        << "problem = bidiagonal:300\n"
        << "shifts = 1e-2,1e-1\n"
        << "mode = srgmres-approx\n"
        << "m = 30\n"
        << "k = 15\n"
        << "tol = 1e-8\n"
        << "sequence = 4\n"
        << "seed = 11\n";
  }
  const RunConfig config = config_from_map(read_config_file(path.string()));
  CHECK(config.problem.kind == ProblemKind::bidiagonal);
  CHECK(config.problem.n == 300);
  CHECK(config.problem.shifts.size() == 2);
  CHECK(config.mode == SolveMode::srgmres_approx);
  CHECK(config.sequence == 4);
  CHECK_NOTHROW(config.validate());

  RunConfig bad = config;
  bad.k = bad.m;  // recycled modes need k < m
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = config;
  bad.tol = 2.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = config;
  bad.problem.shifts = {Complex(1.0, 0), Complex(1.0, 0)};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("gmres mode on a diagonal problem: exit 0, monotone history") {
  RunConfig config;
  config.problem.kind = ProblemKind::bidiagonal;
  config.problem.n = 20;
  config.mode = SolveMode::gmres;
  config.m = 20;
  config.k = 1;
  config.tol = 1e-10;
  config.sequence = 1;
  const RunOutcome outcome = run(config);
  CHECK(outcome.exit_code == 0);
  double prev = 1e300;
  for (const ResidualSample& s : outcome.log.samples) {
    CHECK(s.residual_norm <= prev + 1e-13);
    prev = s.residual_norm;
  }
  CHECK(outcome.history_csv.rfind(
            "system_id,shift,cycle,iteration,matvecs_cumulative,"
            "residual_norm\n", 0) == 0);
  CHECK(outcome.summary_csv.rfind("mode,system,shift,converged,total_matvecs\n",
                                  0) == 0);
}

TEST_CASE("identical configs give byte-identical artifacts") {
  const RunConfig config = small_bidiagonal_config(SolveMode::srgmres_approx);
  const RunOutcome first = run(config);
  const RunOutcome second = run(config);
  CHECK(first.exit_code == 0);
  CHECK(first.history_csv == second.history_csv);
  CHECK(first.summary_csv == second.summary_csv);
  CHECK(first.total_matvecs == second.total_matvecs);
}

TEST_CASE("fixed-storage mode beats repeated recycling on the family") {
  const RunOutcome approx =
      run(small_bidiagonal_config(SolveMode::srgmres_approx));
  const RunOutcome repeated =
      run(small_bidiagonal_config(SolveMode::repeated_rgmres));
  REQUIRE(approx.exit_code == 0);
  REQUIRE(repeated.exit_code == 0);
  CHECK(static_cast<double>(approx.total_matvecs) <
        0.85 * static_cast<double>(repeated.total_matvecs));
}

TEST_CASE("compare joins summaries and reports the total ratio") {
  const RunConfig a = small_bidiagonal_config(SolveMode::srgmres_approx);
  const CompareOutcome same = compare(a, a);
  CHECK(same.total_ratio == doctest::Approx(1.0));
  // Header plus one row per system plus the total row.
  std::istringstream lines(same.table_csv);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 2 + a.sequence * (1 + a.problem.shifts.size()));

  const RunConfig b = small_bidiagonal_config(SolveMode::repeated_rgmres);
  const CompareOutcome cmp = compare(a, b);
  CHECK(cmp.total_ratio < 0.85);
}

TEST_CASE("compare honours SHIFT_RECYCLE_THREADS") {
  const RunConfig a = small_bidiagonal_config(SolveMode::srgmres_approx);
  const CompareOutcome sequential = compare(a, a);
  setenv("SHIFT_RECYCLE_THREADS", "2", 1);
  const CompareOutcome concurrent = compare(a, a);
  unsetenv("SHIFT_RECYCLE_THREADS");
  CHECK(sequential.table_csv == concurrent.table_csv);
}

TEST_CASE("out directory receives history and summary files") {
  RunConfig config = small_bidiagonal_config(SolveMode::rgmres);
  config.sequence = 1;
  const auto dir =
      std::filesystem::temp_directory_path() / "shiftrec_bench_out";
  std::filesystem::remove_all(dir);
  config.out_dir = dir.string();
  const RunOutcome outcome = run(config);
  CHECK(outcome.exit_code == 0);
  std::ifstream hist(dir / "history.csv");
  REQUIRE(hist.good());
  std::stringstream buf;
  buf << hist.rdbuf();
  CHECK(buf.str() == outcome.history_csv);
}

TEST_CASE("multi-deflation mode runs a warm sequence") {
  RunConfig config = small_bidiagonal_config(SolveMode::srgmres_multideflation);
  config.problem.shifts = {Complex(1e-2, 0), Complex(1e-1, 0)};
  config.sequence = 3;
  const RunOutcome outcome = run(config);
  CHECK(outcome.exit_code == 0);
  CHECK(outcome.systems.size() == 9);
}

}  // TEST_SUITE
