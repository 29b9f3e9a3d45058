#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "safeice/bench.hpp"
#include "safeice/ice.hpp"

namespace safeice {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Bad flags, bad values or an inconsistent problem/dimension pair.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CliConfig {
  std::string command;  // estimate | bench | oracle | list-problems
  std::string problem;
  double z = 0.0;  // resolved from the problem default when not given
  int d = 0;       // resolved from the problem default when not given
  RunConfig run;
  int reps = 50;
  std::optional<double> p_ref;
  std::string out;  // empty: stdout
  Format format = Format::jsonl;
  int threads = 1;
  long long n_total = 1000000;
  long long batch_size = 100000;
  bool help = false;
  std::string help_text;
};

/// Parses argv (argv[0] is the program name). Values from a --config JSON file
/// fill every field not given as a flag. Throws UsageError.
CliConfig parse_args(const std::vector<std::string>& args);

/// Full entry point: parse, run, print. Returns 0, 1 (runtime failure) or 2
/// (usage error).
int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// One-line JSON record of a single run.
std::string result_record(const CliConfig& cfg, const RunResult& r);

}  // namespace safeice
