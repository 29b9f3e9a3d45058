#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "safeice/mixtures.hpp"
#include "safeice/problems.hpp"
#include "safeice/rng.hpp"

namespace safeice {

enum class Method { ice, safe_ice };

std::string to_string(Method m);
/// Accepts "ice" and "safe-ice"; throws std::invalid_argument otherwise.
Method parse_method(const std::string& s);

struct RunConfig {
  int n_per_iter = 1000;
  int k_init = 20;
  double delta_star = 1.5;
  double delta_target = 4.0;
  double sigma0 = 10.0;
  double anneal_horizon = 10.0;  // M; lambda_0 = 0 when M = sigma0
  int max_outer = 20;
  double em_tol = 1e-4;
  int max_em = 20;
  std::uint64_t seed = 0;
  Method method = Method::safe_ice;

  void validate() const;
};

/// Traces hold one entry per sampled iteration t = 0..T: sigma_t and lambda_t
/// are the values the iteration-t proposal was built with, k_trace its size.
struct RunResult {
  double pf_estimate = 0.0;
  int iterations = 0;  // T
  int final_k = 0;
  long long lsf_evals = 0;
  std::vector<double> sigma_trace;
  std::vector<double> lambda_trace;
  std::vector<int> k_trace;
  bool converged = false;
  bool stagnated = false;   // sigma stuck at the open end of the search twice in a row
  bool no_failures = false; // final sample set had no g <= 0
  std::uint64_t seed = 0;
};

/// Phi(-g / sigma).
double smooth_indicator(double g_value, double sigma);

/// Sample standard deviation (divisor n - 1) over the mean; +inf when the mean
/// is 0. Throws std::invalid_argument for fewer than 2 values.
double cv(std::span<const double> values);

/// cv of exp(log_weights), evaluated after shifting by the maximum.
double cv_of_log_weights(std::span<const double> log_weights);

/// ln h_sigma(g_i) + ln p(u_i) - q_log_i.
std::vector<double> intermediate_log_weights(std::span<const PolarSample> samples, double sigma,
                                             std::span<const double> q_log);

/// argmin over sigma in (0, sigma_prev) of (cv(W(sigma)) - delta_target)^2 by a
/// 50-point log grid on [1e-8 sigma_prev, sigma_prev) refined by golden-section
/// search. The result is always strictly below sigma_prev; when the objective
/// only improves towards sigma_prev it lands within 1e-10 (in ln sigma) of it.
double select_sigma(std::span<const PolarSample> samples, std::span<const double> q_log,
                    double sigma_prev, double delta_target);

/// cv of I{g <= 0} / h_sigma(g) over light-origin samples; +inf if there are
/// none or none of them fail.
double stop_cv(std::span<const PolarSample> samples, double sigma);

/// 0 for sigma > M, otherwise (1 + cos(pi sigma / M)) / 2.
double lambda_schedule(double sigma, double horizon);

struct PfEstimate {
  double pf = 0.0;
  std::size_t n_failures = 0;
};

/// (1/N) sum_i I{g_i <= 0} p(u_i) / q_safe(u_i), accumulated in log space.
PfEstimate estimate_pf(std::span<const PolarSample> samples, const SafeMixtureParams& phi);

/// Draws and evaluates n samples from phi, storing g in each sample.
std::vector<PolarSample> sample_and_evaluate(RngStream& rng, const SafeMixtureParams& phi,
                                             const Problem& problem, std::size_t n);

RunResult run_safe_ice(const Problem& problem, const RunConfig& config, RngStream& rng);

/// Baseline: lambda fixed at 1, K fixed at k_init, unpenalized EM.
RunResult run_ice(const Problem& problem, const RunConfig& config, RngStream& rng);

/// Dispatches on config.method with a stream seeded from config.seed.
RunResult run(const Problem& problem, const RunConfig& config);

}  // namespace safeice
