#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "safeice/bench.hpp"

using namespace safeice;
using doctest::Approx;

namespace {

RunResult fake(double pf, int t, int k, std::uint64_t seed) {
  RunResult r;
  r.pf_estimate = pf;
  r.iterations = t;
  r.final_k = k;
  r.lsf_evals = 1000LL * (t + 1);
  r.converged = t < 3;
  r.seed = seed;
  return r;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("safeice_" + name)).string();
}

}  // namespace

TEST_CASE("summarize examples") {
  const auto same = summarize({fake(2e-4, 1, 2, 0), fake(2e-4, 3, 4, 1)}, 2e-4);
  CHECK(same.rel_error == 0.0);
  CHECK(same.cv == 0.0);
  CHECK(same.mean_t == 2.0);
  CHECK(same.mean_k == 3.0);
  CHECK(same.n_runs == 2);

  const auto spread = summarize({fake(1e-4, 1, 2, 0), fake(3e-4, 1, 2, 1)}, 2e-4);
  CHECK(spread.rel_error <= 1e-15);
  CHECK(spread.cv == Approx(0.70711).epsilon(1e-5));

  const auto zero = summarize({fake(0.0, 1, 2, 0), fake(2e-4, 1, 2, 1)}, 2e-4);
  CHECK(zero.rel_error == Approx(0.5));

  CHECK_THROWS_AS(summarize({fake(1e-4, 1, 2, 0)}, 2e-4), std::invalid_argument);
  CHECK_THROWS_AS(summarize({fake(1e-4, 1, 2, 0), fake(1e-4, 1, 2, 1)}, 0.0), std::invalid_argument);
}

TEST_CASE("statistics are permutation invariant") {
  std::vector<RunResult> runs;
  for (int i = 0; i < 30; ++i) runs.push_back(fake(1e-4 * (1.0 + 0.37 * std::sin(i * 1.3)), i % 4, 1 + i % 5, i));
  const auto a = summarize(runs, 1.1e-4);
  std::vector<RunResult> reversed(runs.rbegin(), runs.rend());
  const auto b = summarize(reversed, 1.1e-4);
  std::swap(runs[3], runs[17]);
  const auto c = summarize(runs, 1.1e-4);
  for (const auto* s : {&b, &c}) {
    CHECK(s->mean_pf == a.mean_pf);
    CHECK(s->rel_error == a.rel_error);
    CHECK(s->cv == a.cv);
    CHECK(s->mean_t == a.mean_t);
    CHECK(s->mean_k == a.mean_k);
  }
}

TEST_CASE("format_number round trips") {
  for (double x : {0.1, 1.0 / 3.0, 4.6527e-4, 3.797e-8, 1e300, -2.5e-310}) {
    CHECK(std::strtod(format_number(x).c_str(), nullptr) == x);
  }
  CHECK(format_number(std::nan("")) == "null");
  CHECK(parse_format("csv") == Format::csv);
  CHECK_THROWS_AS(parse_format("xml"), std::invalid_argument);
}

TEST_CASE("persist round trip is bit exact") {
  std::vector<RunResult> runs;
  for (int i = 0; i < 5; ++i) runs.push_back(fake(1.0 / (3.0 + i) * 1e-5, i, 2 + i, 40 + i));
  const auto stats = summarize(runs, 1.0 / 7.0 * 1e-5);
  for (Format f : {Format::jsonl, Format::csv}) {
    const std::string path = temp_path("roundtrip." + to_string(f));
    persist(stats, path, f);
    const auto back = read_records(path, f);
    REQUIRE(back.runs.size() == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(back.runs[i].run == i);
      CHECK(back.runs[i].seed == runs[i].seed);
      CHECK(back.runs[i].pf == runs[i].pf_estimate);
      CHECK(back.runs[i].iterations == runs[i].iterations);
      CHECK(back.runs[i].final_k == runs[i].final_k);
      CHECK(back.runs[i].lsf_evals == runs[i].lsf_evals);
      CHECK(back.runs[i].converged == runs[i].converged);
    }
    CHECK(back.summary.p_ref == stats.p_ref);
    CHECK(back.summary.rel_error == stats.rel_error);
    CHECK(back.summary.cv == stats.cv);
    CHECK(back.summary.mean_t == stats.mean_t);
    CHECK(back.summary.mean_k == stats.mean_k);
    CHECK(back.summary.n_runs == 5);
    std::filesystem::remove(path);
  }
}

TEST_CASE("csv layout") {
  const auto stats = summarize({fake(1e-4, 1, 2, 0), fake(3e-4, 2, 2, 1)}, 2e-4);
  std::ostringstream os;
  write_records(stats, os, Format::csv);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "kind,run,seed,pf,iterations,final_k,lsf_evals,converged,p_ref,rel_error,cv,mean_t,mean_k,n_runs");
  std::getline(is, line);
  CHECK(line == "run,0,0,0.0001,1,2,2000,true,,,,,,");
  std::getline(is, line);
  std::getline(is, line);
  CHECK(line.rfind("summary,,,,,,,," + format_number(2e-4) + ",", 0) == 0);
}

TEST_CASE("jsonl layout") {
  const auto stats = summarize({fake(1e-4, 1, 2, 0), fake(3e-4, 2, 2, 1)}, 2e-4);
  std::ostringstream os;
  write_records(stats, os, Format::jsonl);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line ==
        "{\"run\": 0, \"seed\": 0, \"pf\": 0.0001, \"iterations\": 1, \"final_k\": 2, \"lsf_evals\": 2000, "
        "\"converged\": true}");
}

TEST_CASE("persist errors") {
  BenchmarkStats empty;
  CHECK_THROWS_AS(persist(empty, temp_path("empty.jsonl"), Format::jsonl), std::invalid_argument);
  const auto stats = summarize({fake(1e-4, 1, 2, 0), fake(3e-4, 2, 2, 1)}, 2e-4);
  const std::string bad = "/nonexistent-dir/out.csv";
  try {
    persist(stats, bad, Format::csv);
    FAIL("expected an I/O error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(bad) != std::string::npos);
  }
}

TEST_CASE("run_repetitions seeds runs by index and ignores thread count") {
  const Problem p = make_problem("two-mode", 3.5, 2);
  RunConfig cfg;
  cfg.seed = 100;
  const auto a = run_repetitions(p, cfg, 6, *p.analytic_pf, 1);
  const auto b = run_repetitions(p, cfg, 6, *p.analytic_pf, 3);
  REQUIRE(a.runs.size() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(a.runs[i].seed == 100u + i);
    CHECK(a.runs[i].pf_estimate == b.runs[i].pf_estimate);
    cfg.seed = 100 + i;
    CHECK(run(p, cfg).pf_estimate == a.runs[i].pf_estimate);
  }
  CHECK(a.cv == b.cv);
  CHECK_THROWS_AS(run_repetitions(p, cfg, 1, *p.analytic_pf), std::invalid_argument);
}

TEST_CASE("two-mode z = 5.5 benchmark") {
  const Problem p = make_problem("two-mode", 5.5, 2);
  const auto s = run_repetitions(p, RunConfig{}, 50, *p.analytic_pf, 4);
  CHECK(s.rel_error <= 0.1);
  CHECK(s.cv <= 0.15);
  CHECK(s.mean_t <= 4.5);
}

TEST_CASE("relative error is stable when n_runs doubles") {
  const Problem p = make_problem("two-mode", 3.5, 2);
  const int n = 10;
  int stable = 0;
  for (int meta = 0; meta < 20; ++meta) {
    RunConfig cfg;
    cfg.seed = 10000 + 1000 * meta;
    const auto small = run_repetitions(p, cfg, n, *p.analytic_pf, 4);
    cfg.seed += 500;
    const auto large = run_repetitions(p, cfg, 2 * n, *p.analytic_pf, 4);
    stable += std::fabs(large.rel_error - small.rel_error) < 3.0 * small.cv / std::sqrt(n);
  }
  CHECK(stable >= 17);
}
