#pragma once

#include <cstdint>

#include "safeice/problems.hpp"

namespace safeice {

struct McEstimate {
  double pf = 0.0;
  long long n_total = 0;
  long long n_failures = 0;
  double cv = 0.0;  // sqrt((1 - pf) / (n pf)); +inf when pf = 0
};

/// Samples are generated in fixed blocks of this size, each from its own
/// substream RngStream(seed).split(block index).
inline constexpr long long kOracleBlock = 4096;

/// Crude Monte Carlo under the standard-normal prior. The result depends only
/// on (problem, n_total, seed): batch_size bounds the per-task work and memory,
/// and threads only changes who evaluates which block.
McEstimate mc_estimate(const Problem& problem, long long n_total, long long batch_size,
                       std::uint64_t seed, int threads = 1);

double mc_cv(double pf, long long n_total);

}  // namespace safeice
