#include "safeice/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "safeice/rng.hpp"

namespace safeice {

namespace {

long long count_block(const Problem& problem, const RngStream& root, long long block,
                      long long n_total, std::vector<double>& u) {
  RngStream rng = root.split(static_cast<std::uint64_t>(block));
  const long long begin = block * kOracleBlock;
  const long long end = std::min(n_total, begin + kOracleBlock);
  long long failures = 0;
  for (long long i = begin; i < end; ++i) {
    for (double& x : u) x = rng.normal();
    if (problem.evaluate(u) <= 0.0) ++failures;
  }
  return failures;
}

}  // namespace

double mc_cv(double pf, long long n_total) {
  if (!(pf > 0.0)) return std::numeric_limits<double>::infinity();
  return std::sqrt((1.0 - pf) / (static_cast<double>(n_total) * pf));
}

McEstimate mc_estimate(const Problem& problem, long long n_total, long long batch_size,
                       std::uint64_t seed, int threads) {
  if (n_total < 10000) throw std::invalid_argument("mc_estimate: n_total must be >= 1e4");
  if (batch_size < 1 || batch_size > n_total) {
    throw std::invalid_argument("mc_estimate: batch_size must lie in [1, n_total]");
  }
  if (threads < 1) throw std::invalid_argument("mc_estimate: threads must be >= 1");
  if (!problem.evaluate) throw std::invalid_argument("mc_estimate: problem has no limit-state function");

  const RngStream root(seed);
  const long long n_blocks = (n_total + kOracleBlock - 1) / kOracleBlock;
  const long long blocks_per_batch = std::max(1LL, batch_size / kOracleBlock);
  const long long n_batches = (n_blocks + blocks_per_batch - 1) / blocks_per_batch;

  std::atomic<long long> next_batch{0};
  std::atomic<long long> failures{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    std::vector<double> u(static_cast<std::size_t>(problem.dim));
    try {
      for (long long b = next_batch++; b < n_batches; b = next_batch++) {
        const long long first = b * blocks_per_batch;
        const long long last = std::min(n_blocks, first + blocks_per_batch);
        long long local = 0;
        for (long long blk = first; blk < last; ++blk) local += count_block(problem, root, blk, n_total, u);
        failures += local;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      next_batch = n_batches;
    }
  };

  const int n_threads = static_cast<int>(std::min<long long>(threads, n_batches));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  McEstimate out;
  out.n_total = n_total;
  out.n_failures = failures.load();
  out.pf = static_cast<double>(out.n_failures) / static_cast<double>(n_total);
  out.cv = mc_cv(out.pf, n_total);
  return out;
}

}  // namespace safeice
