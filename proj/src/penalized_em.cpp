#include "safeice/penalized_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace safeice {

namespace {

double sum_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

// sum_i sum_s gamma_is W_i
double total_responsibility_mass(const WeightedSampleSet& data, const Matrix& gamma) {
  double total = 0.0;
  for (std::size_t i = 0; i < gamma.rows(); ++i) {
    if (data.weights[i] == 0.0) continue;
    total += data.weights[i] * sum_of(gamma.row(i));
  }
  return total;
}

bool components_identical(const VmfnmParams& v) {
  if (v.size() < 2) return false;
  const auto& first = v.components.front();
  for (const auto& c : v.components) {
    if (c.angular.kappa != 0.0 || c.radial.m != first.radial.m ||
        c.radial.omega != first.radial.omega || c.weight != first.weight) {
      return false;
    }
  }
  return true;
}

Responsibilities nearest_direction_assignment(const WeightedSampleSet& data, const VmfnmParams& v) {
  Responsibilities out{Matrix(data.size(), v.size(), 0.0), 0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t best = 0;
    double best_cos = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double c = dot(v.components[k].angular.mu, data.samples[i].a);
      if (c > best_cos) {
        best_cos = c;
        best = k;
      }
    }
    out.gamma(i, best) = 1.0;
  }
  return out;
}

}  // namespace

void WeightedSampleSet::validate() const {
  if (samples.size() != weights.size()) {
    throw std::invalid_argument("WeightedSampleSet: samples and weights differ in length");
  }
  bool any_positive = false;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("WeightedSampleSet: weights must be finite and >= 0");
    }
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw std::invalid_argument("WeightedSampleSet: no positive weight");
}

Responsibilities e_step(const WeightedSampleSet& data, const VmfnmParams& v) {
  Responsibilities out{component_log_densities(data.samples, v), 0};
  const std::size_t k_count = v.size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = out.gamma.row(i);
    const double lse = log_sum_exp(row);
    if (lse == kNegInf || !std::isfinite(lse)) {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(k_count));
      ++out.degenerate_rows;
      continue;
    }
    for (double& x : row) x = std::exp(x - lse);
  }
  return out;
}

std::vector<double> em_weight_update(const WeightedSampleSet& data, const Matrix& gamma) {
  std::vector<double> pi(gamma.cols(), 0.0);
  for (std::size_t i = 0; i < gamma.rows(); ++i) {
    const double w = data.weights[i];
    if (w == 0.0) continue;
    for (std::size_t k = 0; k < gamma.cols(); ++k) pi[k] += gamma(i, k) * w;
  }
  const double total = total_responsibility_mass(data, gamma);
  for (double& p : pi) p /= total;
  return pi;
}

std::vector<double> penalized_weight_update(const WeightedSampleSet& data, const Matrix& gamma,
                                            std::span<const double> pi_old, double beta) {
  if (pi_old.size() != gamma.cols()) {
    throw std::invalid_argument("penalized_weight_update: pi_old size differs from K");
  }
  if (!(beta >= 0.0)) throw std::invalid_argument("penalized_weight_update: beta must be >= 0");
  std::vector<double> pi = em_weight_update(data, gamma);
  if (beta == 0.0) return pi;

  const double scale = sum_of(data.weights) / total_responsibility_mass(data, gamma);
  const double entropy = weight_entropy(pi_old);
  for (std::size_t k = 0; k < pi.size(); ++k) {
    if (pi_old[k] > 0.0) pi[k] += beta * scale * pi_old[k] * (std::log(pi_old[k]) - entropy);
  }
  return pi;
}

PruneResult prune(std::span<const double> pi_new, const Matrix& gamma, const VmfnmParams& v) {
  if (pi_new.size() != v.size() || gamma.cols() != v.size()) {
    throw std::invalid_argument("prune: inconsistent component counts");
  }
  PruneResult out;
  double kept_mass = 0.0;
  for (std::size_t k = 0; k < pi_new.size(); ++k) {
    if (pi_new[k] > 0.0) {
      out.kept.push_back(k);
      kept_mass += pi_new[k];
    }
  }
  if (out.kept.empty()) {
    throw std::runtime_error("prune: every mixture weight is <= 0");
  }

  out.params.dim = v.dim;
  for (std::size_t k : out.kept) {
    VmfnmComponent c = v.components[k];
    c.weight = pi_new[k] / kept_mass;
    out.params.components.push_back(std::move(c));
  }

  out.gamma = Matrix(gamma.rows(), out.kept.size());
  for (std::size_t i = 0; i < gamma.rows(); ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < out.kept.size(); ++j) {
      out.gamma(i, j) = gamma(i, out.kept[j]);
      row_sum += out.gamma(i, j);
    }
    for (std::size_t j = 0; j < out.kept.size(); ++j) {
      out.gamma(i, j) = row_sum > 0.0 ? out.gamma(i, j) / row_sum
                                      : 1.0 / static_cast<double>(out.kept.size());
    }
  }
  return out;
}

double penalty_damping(int d) {
  const double exponent = std::floor(0.5 * d - 1.0);
  return std::min(1.0, std::pow(0.5, exponent));
}

double weight_entropy(std::span<const double> pi) {
  double e = 0.0;
  for (double p : pi) {
    if (p > 0.0) e += p * std::log(p);
  }
  return e;
}

double beta_update(std::span<const double> pi_new, std::span<const double> pi_old,
                   std::span<const double> pi_em, int d, std::size_t n_samples) {
  const std::size_t k = pi_old.size();
  if (pi_new.size() != k || pi_em.size() != k) {
    throw std::invalid_argument("beta_update: weight vectors differ in length");
  }
  if (n_samples == 0) throw std::invalid_argument("beta_update: need at least one sample");
  const double entropy = weight_entropy(pi_old);
  if (k <= 1 || entropy == 0.0) return 0.0;

  const double eta = penalty_damping(d);
  double stability = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    stability += std::exp(-eta * static_cast<double>(n_samples) * std::fabs(pi_new[j] - pi_old[j]));
  }
  stability /= static_cast<double>(k);

  const double max_em = *std::max_element(pi_em.begin(), pi_em.end());
  const double max_old = *std::max_element(pi_old.begin(), pi_old.end());
  const double cap = (1.0 - max_em) / (-max_old * entropy);
  if (!std::isfinite(cap) || cap < 0.0) return stability;
  return std::max(0.0, std::min(stability, cap));
}

std::vector<ComponentEstimate> m_step_params(const WeightedSampleSet& data, const Matrix& gamma,
                                             const VmfnmParams& fallback) {
  const std::size_t k_count = gamma.cols();
  const auto d = static_cast<std::size_t>(fallback.dim);
  const double dim = static_cast<double>(d);
  std::vector<ComponentEstimate> out(k_count);

  for (std::size_t k = 0; k < k_count; ++k) {
    double mass = 0.0;
    double sum_r2 = 0.0;
    std::vector<double> resultant(d, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double c = gamma(i, k) * data.weights[i];
      if (c == 0.0) continue;
      const auto& s = data.samples[i];
      mass += c;
      sum_r2 += c * s.r * s.r;
      for (std::size_t j = 0; j < d; ++j) resultant[j] += c * s.a[j];
    }

    ComponentEstimate& est = out[k];
    if (!(mass > 0.0)) {
      est.radial = fallback.components[k].radial;
      est.angular = fallback.components[k].angular;
      est.clamped = true;
      continue;
    }

    const double omega = sum_r2 / mass;
    double var_r2 = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double c = gamma(i, k) * data.weights[i];
      if (c == 0.0) continue;
      const double dev = data.samples[i].r * data.samples[i].r - omega;
      var_r2 += c * dev * dev;
    }
    var_r2 /= mass;

    // Zero spread (e.g. a single sample) sends the raw estimates to +inf.
    double m = var_r2 > 0.0 ? omega * omega / var_r2 : std::numeric_limits<double>::infinity();
    if (!(m <= kMaxShape)) {
      m = kMaxShape;
      est.clamped = true;
    } else if (m < kMinShape) {
      m = kMinShape;
      est.clamped = true;
    }
    est.radial = NakagamiParams{m, omega};

    const double res_norm = norm2(resultant);
    if (!(res_norm > 0.0)) {
      est.angular = VmfParams{fallback.components[k].angular.mu, 0.0};
      est.clamped = true;
      continue;
    }
    for (double& x : resultant) x /= res_norm;
    const double r_bar = std::min(1.0, res_norm / mass);
    double kappa = r_bar < 1.0 ? r_bar * (dim - r_bar * r_bar) / (1.0 - r_bar * r_bar)
                               : std::numeric_limits<double>::infinity();
    if (!(kappa <= kMaxKappa)) {
      kappa = kMaxKappa;
      est.clamped = true;
    }
    est.angular = VmfParams{std::move(resultant), std::max(0.0, kappa)};
  }
  return out;
}

double weighted_loglik(const WeightedSampleSet& data, const VmfnmParams& v) {
  const std::vector<double> logq = vmfnm_logpdf(data.samples, v);
  double l = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.weights[i] != 0.0) l += data.weights[i] * logq[i];
  }
  return l;
}

EmResult fit(const WeightedSampleSet& data, const VmfnmParams& v_init, const EmOptions& options) {
  if (options.max_iter < 1) throw std::invalid_argument("fit: max_iter must be >= 1");
  data.validate();

  // Rescale so the largest weight is 1; every update depends on weight ratios only.
  const double w_max = *std::max_element(data.weights.begin(), data.weights.end());
  std::vector<double> scaled(data.weights.begin(), data.weights.end());
  for (double& w : scaled) w /= w_max;
  const WeightedSampleSet work{data.samples, scaled};

  EmResult result;
  result.params = v_init;
  double beta = options.penalize ? 1.0 : 0.0;
  double l_prev = std::numeric_limits<double>::infinity();
  const bool symmetric_start = components_identical(v_init);

  for (int j = 1; j <= options.max_iter; ++j) {
    const VmfnmParams& current = result.params;
    Responsibilities resp = (j == 1 && symmetric_start)
                                ? nearest_direction_assignment(work, current)
                                : e_step(work, current);
    result.degenerate_rows += resp.degenerate_rows;

    const std::vector<double> pi_old = current.weights();
    const std::vector<double> pi_em = em_weight_update(work, resp.gamma);
    const std::vector<double> pi_new =
        options.penalize ? penalized_weight_update(work, resp.gamma, pi_old, beta) : pi_em;

    PruneResult pruned = prune(pi_new, resp.gamma, current);
    if (options.penalize) beta = beta_update(pi_new, pi_old, pi_em, current.dim, work.size());

    const auto estimates = m_step_params(work, pruned.gamma, pruned.params);
    for (std::size_t k = 0; k < estimates.size(); ++k) {
      pruned.params.components[k].radial = estimates[k].radial;
      pruned.params.components[k].angular = estimates[k].angular;
      result.clamped = result.clamped || estimates[k].clamped;
    }
    result.params = std::move(pruned.params);
    result.iterations = j;
    result.beta_trace.push_back(beta);
    result.k_trace.push_back(result.params.size());

    const double l = weighted_loglik(work, result.params);
    result.loglik_trace.push_back(l);
    if (std::fabs(l - l_prev) < options.tol * std::fabs(l)) {
      result.converged = true;
      break;
    }
    l_prev = l;
  }
  return result;
}

}  // namespace safeice
