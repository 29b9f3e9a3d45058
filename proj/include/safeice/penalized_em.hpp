#pragma once

#include <span>
#include <vector>

#include "safeice/log_space.hpp"
#include "safeice/mixtures.hpp"

namespace safeice {

/// Samples with nonnegative importance weights W_i. Every operation below is
/// invariant under W -> cW for c > 0.
struct WeightedSampleSet {
  std::span<const PolarSample> samples;
  std::span<const double> weights;

  std::size_t size() const { return samples.size(); }
  void validate() const;
};

struct Responsibilities {
  Matrix gamma;                    // N x K, rows sum to 1
  std::size_t degenerate_rows = 0;  // rows with zero density under every component
};

Responsibilities e_step(const WeightedSampleSet& data, const VmfnmParams& v);

/// Plain weighted-EM mixing weights.
std::vector<double> em_weight_update(const WeightedSampleSet& data, const Matrix& gamma);

/// EM weights plus the entropy penalty
///   beta * (sum W / sum gamma W) * pi_old_k * (ln pi_old_k - sum_s pi_old_s ln pi_old_s).
/// The penalty sums to zero, so the result sums to one; entries <= 0 mark
/// components to prune.
std::vector<double> penalized_weight_update(const WeightedSampleSet& data, const Matrix& gamma,
                                            std::span<const double> pi_old, double beta);

struct PruneResult {
  VmfnmParams params;            // surviving components with renormalized weights
  Matrix gamma;                  // surviving columns, rows renormalized
  std::vector<std::size_t> kept; // indices into the input component list
};

/// Drops components with pi <= 0. Throws std::runtime_error if none survive.
PruneResult prune(std::span<const double> pi_new, const Matrix& gamma, const VmfnmParams& v);

/// min{1, 0.5^floor(d/2 - 1)}.
double penalty_damping(int d);

/// sum_k pi_k ln pi_k (<= 0).
double weight_entropy(std::span<const double> pi);

/// Next penalty strength. All three vectors are over the same pre-prune K.
double beta_update(std::span<const double> pi_new, std::span<const double> pi_old,
                   std::span<const double> pi_em, int d, std::size_t n_samples);

inline constexpr double kMinShape = 0.5 + 1e-6;
inline constexpr double kMaxShape = 1e4;
inline constexpr double kMaxKappa = 1e4;

struct ComponentEstimate {
  NakagamiParams radial;
  VmfParams angular;
  bool clamped = false;
};

/// Closed-form weighted M-step for every column of gamma. Components with no
/// weighted mass keep the corresponding entry of `fallback`.
std::vector<ComponentEstimate> m_step_params(const WeightedSampleSet& data, const Matrix& gamma,
                                             const VmfnmParams& fallback);

/// sum_i W_i ln q(u_i; v); samples with W_i = 0 contribute nothing.
double weighted_loglik(const WeightedSampleSet& data, const VmfnmParams& v);

struct EmOptions {
  double tol = 1e-4;   // relative change of the weighted log-likelihood
  int max_iter = 20;
  bool penalize = true;  // false: plain weighted EM (beta = 0)
};

struct EmResult {
  VmfnmParams params;
  int iterations = 0;
  bool converged = false;
  bool clamped = false;
  std::size_t degenerate_rows = 0;
  std::vector<double> loglik_trace;
  std::vector<double> beta_trace;
  std::vector<std::size_t> k_trace;
};

/// Inner EM loop: E-step, penalized weight update, prune, beta update,
/// M-step, likelihood; starts from beta = 1 and stops when the relative
/// likelihood change drops below tol. If all components of v_init are
/// identical (e.g. the prior-like start), the first E-step assigns each
/// sample to the component whose mean direction is closest, since identical
/// components would otherwise stay identical forever.
EmResult fit(const WeightedSampleSet& data, const VmfnmParams& v_init, const EmOptions& options);

}  // namespace safeice
