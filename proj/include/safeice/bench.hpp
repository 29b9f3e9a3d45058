#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "safeice/ice.hpp"
#include "safeice/problems.hpp"

namespace safeice {

struct BenchmarkStats {
  double p_ref = 0.0;
  double mean_pf = 0.0;
  double rel_error = 0.0;  // |p_ref - mean pf| / p_ref
  double cv = 0.0;         // std(pf) / mean(pf), divisor n_runs - 1
  double mean_t = 0.0;
  double mean_k = 0.0;
  int n_runs = 0;
  std::vector<RunResult> runs;  // runs[i] is run i
};

/// Aggregates finished runs. Sums are taken over sorted values so the
/// statistics do not depend on run order.
BenchmarkStats summarize(std::vector<RunResult> runs, double p_ref);

/// n_runs runs; run i uses config.seed + i. Runs are spread over `threads`
/// workers and aggregated by run index, so the result does not depend on it.
BenchmarkStats run_repetitions(const Problem& problem, const RunConfig& config, int n_runs,
                               double p_ref, int threads = 1);

enum class Format { jsonl, csv };

std::string to_string(Format f);
Format parse_format(const std::string& s);

/// Decimal text with 17 significant digits; reads back to the identical double.
/// Non-finite values become "null".
std::string format_number(double x);

inline constexpr const char* kCsvHeader =
    "kind,run,seed,pf,iterations,final_k,lsf_evals,converged,p_ref,rel_error,cv,mean_t,mean_k,n_runs";

/// One record per run followed by one summary record. Throws
/// std::invalid_argument for empty stats and std::runtime_error naming the path
/// on I/O failure.
void persist(const BenchmarkStats& stats, const std::string& path, Format format);
void write_records(const BenchmarkStats& stats, std::ostream& os, Format format);

struct RunRecord {
  int run = 0;
  std::uint64_t seed = 0;
  double pf = 0.0;
  int iterations = 0;
  int final_k = 0;
  long long lsf_evals = 0;
  bool converged = false;
};

struct SummaryRecord {
  double p_ref = 0.0;
  double rel_error = 0.0;
  double cv = 0.0;
  double mean_t = 0.0;
  double mean_k = 0.0;
  int n_runs = 0;
};

struct PersistedBench {
  std::vector<RunRecord> runs;
  SummaryRecord summary;
};

/// Parses a file written by persist.
PersistedBench read_records(const std::string& path, Format format);

}  // namespace safeice
