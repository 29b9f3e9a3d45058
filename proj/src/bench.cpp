#include "safeice/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace safeice {

namespace {

double sorted_sum(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

double parse_number(const std::string& s) {
  if (s == "null" || s.empty()) return std::numeric_limits<double>::infinity();
  // strtod, unlike stod, accepts subnormals.
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::runtime_error("read_records: bad number '" + s + "'");
  return x;
}

double json_number(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

BenchmarkStats summarize(std::vector<RunResult> runs, double p_ref) {
  if (runs.size() < 2) throw std::invalid_argument("summarize: need at least 2 runs");
  if (!(p_ref > 0.0) || !std::isfinite(p_ref)) throw std::invalid_argument("summarize: p_ref must be > 0");
  const double n = static_cast<double>(runs.size());

  std::vector<double> pf;
  std::vector<double> t;
  std::vector<double> k;
  for (const auto& r : runs) {
    pf.push_back(r.pf_estimate);
    t.push_back(r.iterations);
    k.push_back(r.final_k);
  }

  BenchmarkStats s;
  s.p_ref = p_ref;
  s.n_runs = static_cast<int>(runs.size());
  s.mean_pf = sorted_sum(pf) / n;
  s.mean_t = sorted_sum(t) / n;
  s.mean_k = sorted_sum(k) / n;
  s.rel_error = std::fabs(p_ref - s.mean_pf) / p_ref;
  std::vector<double> sq;
  for (double x : pf) sq.push_back((x - s.mean_pf) * (x - s.mean_pf));
  const double sd = std::sqrt(sorted_sum(sq) / (n - 1.0));
  s.cv = s.mean_pf > 0.0 ? sd / s.mean_pf : std::numeric_limits<double>::infinity();
  s.runs = std::move(runs);
  return s;
}

BenchmarkStats run_repetitions(const Problem& problem, const RunConfig& config, int n_runs,
                               double p_ref, int threads) {
  if (n_runs < 2) throw std::invalid_argument("run_repetitions: n_runs must be >= 2");
  if (threads < 1) throw std::invalid_argument("run_repetitions: threads must be >= 1");
  config.validate();

  std::vector<RunResult> results(static_cast<std::size_t>(n_runs));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    try {
      for (int i = next++; i < n_runs; i = next++) {
        RunConfig c = config;
        c.seed = config.seed + static_cast<std::uint64_t>(i);
        results[static_cast<std::size_t>(i)] = run(problem, c);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      next = n_runs;
    }
  };

  const int n_threads = std::min(threads, n_runs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return summarize(std::move(results), p_ref);
}

std::string to_string(Format f) { return f == Format::csv ? "csv" : "jsonl"; }

Format parse_format(const std::string& s) {
  if (s == "jsonl") return Format::jsonl;
  if (s == "csv") return Format::csv;
  throw std::invalid_argument("unknown format '" + s + "' (expected jsonl or csv)");
}

std::string format_number(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_records(const BenchmarkStats& stats, std::ostream& os, Format format) {
  if (stats.runs.empty()) throw std::invalid_argument("persist: no runs to write");
  const char* b = nullptr;
  if (format == Format::csv) {
    os << kCsvHeader << '\n';
    for (std::size_t i = 0; i < stats.runs.size(); ++i) {
      const auto& r = stats.runs[i];
      b = r.converged ? "true" : "false";
      os << "run," << i << ',' << r.seed << ',' << format_number(r.pf_estimate) << ','
         << r.iterations << ',' << r.final_k << ',' << r.lsf_evals << ',' << b << ",,,,,,\n";
    }
    os << "summary,,,,,,,," << format_number(stats.p_ref) << ',' << format_number(stats.rel_error)
       << ',' << format_number(stats.cv) << ',' << format_number(stats.mean_t) << ','
       << format_number(stats.mean_k) << ',' << stats.n_runs << '\n';
    return;
  }
  for (std::size_t i = 0; i < stats.runs.size(); ++i) {
    const auto& r = stats.runs[i];
    b = r.converged ? "true" : "false";
    os << "{\"run\": " << i << ", \"seed\": " << r.seed << ", \"pf\": " << format_number(r.pf_estimate)
       << ", \"iterations\": " << r.iterations << ", \"final_k\": " << r.final_k
       << ", \"lsf_evals\": " << r.lsf_evals << ", \"converged\": " << b << "}\n";
  }
  os << "{\"summary\": true, \"p_ref\": " << format_number(stats.p_ref)
     << ", \"rel_error\": " << format_number(stats.rel_error) << ", \"cv\": " << format_number(stats.cv)
     << ", \"mean_t\": " << format_number(stats.mean_t) << ", \"mean_k\": " << format_number(stats.mean_k)
     << ", \"n_runs\": " << stats.n_runs << "}\n";
}

void persist(const BenchmarkStats& stats, const std::string& path, Format format) {
  if (stats.runs.empty()) throw std::invalid_argument("persist: no runs to write");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("persist: cannot open '" + path + "' for writing");
  write_records(stats, os, format);
  os.flush();
  if (!os) throw std::runtime_error("persist: write to '" + path + "' failed");
}

PersistedBench read_records(const std::string& path, Format format) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_records: cannot open '" + path + "'");
  PersistedBench out;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (format == Format::csv) {
      if (!header_seen) {
        if (line != kCsvHeader) throw std::runtime_error("read_records: unexpected header in '" + path + "'");
        header_seen = true;
        continue;
      }
      const auto f = split_csv(line);
      if (f.size() != 14) throw std::runtime_error("read_records: malformed row in '" + path + "'");
      if (f[0] == "run") {
        out.runs.push_back(RunRecord{std::stoi(f[1]), std::stoull(f[2]), parse_number(f[3]),
                                     std::stoi(f[4]), std::stoi(f[5]), std::stoll(f[6]),
                                     f[7] == "true"});
      } else {
        out.summary = SummaryRecord{parse_number(f[8]),  parse_number(f[9]),  parse_number(f[10]),
                                    parse_number(f[11]), parse_number(f[12]), std::stoi(f[13])};
      }
      continue;
    }
    const auto j = nlohmann::json::parse(line);
    if (j.contains("summary")) {
      out.summary = SummaryRecord{json_number(j["p_ref"]), json_number(j["rel_error"]),
                                  json_number(j["cv"]),    json_number(j["mean_t"]),
                                  json_number(j["mean_k"]), j["n_runs"].get<int>()};
    } else {
      out.runs.push_back(RunRecord{j["run"].get<int>(), j["seed"].get<std::uint64_t>(),
                                   json_number(j["pf"]), j["iterations"].get<int>(),
                                   j["final_k"].get<int>(), j["lsf_evals"].get<long long>(),
                                   j["converged"].get<bool>()});
    }
  }
  return out;
}

}  // namespace safeice
