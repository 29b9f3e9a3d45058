#include "safeice/ice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "safeice/log_space.hpp"
#include "safeice/penalized_em.hpp"
#include "safeice/special_functions.hpp"

namespace safeice {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kGridPoints = 50;
constexpr double kSearchFloor = 1e-8;  // relative to sigma_prev
// A step this close to sigma_prev means the optimum sits at the open end.
constexpr double kStallRatio = 1.0 - 1e-8;

void log_weights_into(std::span<const double> g, std::span<const double> base, double sigma,
                      std::vector<double>& out) {
  out.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = log_normal_cdf(-g[i] / sigma) + base[i];
}

RunResult run_loop(const Problem& problem, const RunConfig& config, RngStream& rng, bool safe) {
  config.validate();
  if (!problem.evaluate) throw std::invalid_argument("run: problem has no limit-state function");
  const auto n = static_cast<std::size_t>(config.n_per_iter);

  RunResult res;
  res.seed = config.seed;
  VmfnmParams v = prior_like_mixture(rng, problem.dim, static_cast<std::size_t>(config.k_init));
  double sigma = config.sigma0;
  double lambda = safe ? lambda_schedule(sigma, config.anneal_horizon) : 1.0;
  const EmOptions em{config.em_tol, config.max_em, safe};

  SafeMixtureParams phi;
  std::vector<PolarSample> samples;
  int boundary_hits = 0;
  int t = 0;
  for (;; ++t) {
    phi = make_safe_mixture(v, lambda);
    res.sigma_trace.push_back(sigma);
    res.lambda_trace.push_back(lambda);
    res.k_trace.push_back(static_cast<int>(v.size()));

    samples = sample_and_evaluate(rng, phi, problem, n);
    res.lsf_evals += static_cast<long long>(n);

    if (stop_cv(samples, sigma) <= config.delta_star) {
      res.converged = true;
      break;
    }
    if (t == config.max_outer) break;

    const std::vector<double> q_log = safe_logpdf(samples, phi);
    const double sigma_next = select_sigma(samples, q_log, sigma, config.delta_target);
    if (sigma_next > kStallRatio * sigma) {
      if (++boundary_hits >= 2) {
        res.stagnated = true;
        break;
      }
    } else {
      boundary_hits = 0;
    }
    sigma = sigma_next;

    std::vector<double> w = intermediate_log_weights(samples, sigma, q_log);
    const double w_max = *std::max_element(w.begin(), w.end());
    for (double& x : w) x = std::exp(x - w_max);
    v = fit(WeightedSampleSet{samples, w}, v, em).params;
    if (safe) lambda = lambda_schedule(sigma, config.anneal_horizon);
  }

  res.iterations = t;
  res.final_k = static_cast<int>(phi.light.size());
  const PfEstimate est = estimate_pf(samples, phi);
  res.pf_estimate = est.pf;
  res.no_failures = est.n_failures == 0;
  return res;
}

}  // namespace

std::string to_string(Method m) { return m == Method::ice ? "ice" : "safe-ice"; }

Method parse_method(const std::string& s) {
  if (s == "ice") return Method::ice;
  if (s == "safe-ice") return Method::safe_ice;
  throw std::invalid_argument("unknown method '" + s + "' (expected ice or safe-ice)");
}

void RunConfig::validate() const {
  if (n_per_iter < 100) throw std::invalid_argument("n_per_iter must be >= 100");
  if (k_init < 1) throw std::invalid_argument("k_init must be >= 1");
  if (!(delta_star > 0.0) || !std::isfinite(delta_star)) throw std::invalid_argument("delta_star must be > 0");
  if (!(delta_target > 0.0) || !std::isfinite(delta_target)) {
    throw std::invalid_argument("delta_target must be > 0");
  }
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw std::invalid_argument("sigma0 must be > 0");
  if (!(anneal_horizon > 0.0) || !std::isfinite(anneal_horizon)) {
    throw std::invalid_argument("anneal_horizon must be > 0");
  }
  if (max_outer < 0) throw std::invalid_argument("max_outer must be >= 0");
  if (max_em < 1) throw std::invalid_argument("max_em must be >= 1");
  if (!(em_tol > 0.0) || !std::isfinite(em_tol)) throw std::invalid_argument("em_tol must be > 0");
}

double smooth_indicator(double g_value, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("smooth_indicator: sigma must be > 0");
  return normal_cdf(-g_value / sigma);
}

double cv(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("cv: need at least 2 values");
  double mean = 0.0;
  for (double x : values) mean += x;
  mean /= static_cast<double>(values.size());
  if (mean == 0.0) return kInf;
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1)) / mean;
}

double cv_of_log_weights(std::span<const double> log_weights) {
  double hi = kNegInf;
  for (double x : log_weights) hi = std::max(hi, x);
  if (hi == kNegInf) return kInf;
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - hi);
  return cv(w);
}

std::vector<double> intermediate_log_weights(std::span<const PolarSample> samples, double sigma,
                                             std::span<const double> q_log) {
  if (samples.size() != q_log.size()) {
    throw std::invalid_argument("intermediate_log_weights: samples and q_log differ in length");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("intermediate_log_weights: sigma must be > 0");
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const int d = static_cast<int>(s.a.size());
    out[i] = log_normal_cdf(-s.g_value / sigma) + prior_polar_logpdf(s.r, d) - q_log[i];
  }
  return out;
}

double select_sigma(std::span<const PolarSample> samples, std::span<const double> q_log,
                    double sigma_prev, double delta_target) {
  if (!(sigma_prev > 0.0)) throw std::invalid_argument("select_sigma: sigma_prev must be > 0");
  if (samples.size() != q_log.size()) {
    throw std::invalid_argument("select_sigma: samples and q_log differ in length");
  }
  std::vector<double> g(samples.size());
  std::vector<double> base(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    g[i] = samples[i].g_value;
    base[i] = prior_polar_logpdf(samples[i].r, static_cast<int>(samples[i].a.size())) - q_log[i];
  }
  std::vector<double> lw;
  auto cv_at = [&](double log_sigma) {
    log_weights_into(g, base, std::exp(log_sigma), lw);
    return cv_of_log_weights(lw);
  };
  auto objective = [&](double log_sigma) {
    const double c = cv_at(log_sigma);
    if (!std::isfinite(c)) return kInf;
    return (c - delta_target) * (c - delta_target);
  };

  const double hi = std::log(sigma_prev);
  const double lo = hi + std::log(kSearchFloor);
  const double step = (hi - lo) / kGridPoints;
  // The domain (0, sigma_prev) is open: grid points stay below hi, which only
  // closes the last refinement bracket.
  auto grid_x = [&](int j) { return lo + j * step; };
  std::vector<double> grid_cv(kGridPoints + 1);
  std::vector<double> grid_obj(kGridPoints + 1);
  int best = 0;
  for (int j = 0; j <= kGridPoints; ++j) {
    grid_cv[j] = cv_at(grid_x(j));
    grid_obj[j] = std::isfinite(grid_cv[j]) ? (grid_cv[j] - delta_target) * (grid_cv[j] - delta_target)
                                            : kInf;
    if (j < kGridPoints && grid_obj[j] < grid_obj[best]) best = j;
  }

  // The cv curve need not be monotone, so a crossing of delta_target can sit
  // between two grid points that both score worse than the open end. Refine
  // the crossing nearest sigma_prev if there is one, else the best grid cell.
  double a = 0.0;
  double b = 0.0;
  bool crossing = false;
  for (int j = kGridPoints - 1; j >= 0 && !crossing; --j) {
    const double u = grid_cv[j] - delta_target;
    const double w = grid_cv[j + 1] - delta_target;
    if (std::isfinite(u) && std::isfinite(w) && (u <= 0.0) != (w <= 0.0)) {
      a = grid_x(j);
      b = grid_x(j + 1);
      crossing = true;
    }
  }
  if (!crossing && grid_obj[kGridPoints] < grid_obj[best]) {
    // Best approached towards sigma_prev; the refinement stays inside.
    a = grid_x(kGridPoints - 1);
    b = hi;
  } else if (!crossing) {
    a = grid_x(std::max(best - 1, 0));
    b = grid_x(best + 1);
  }

  const double inv_phi = 1.0 / std::numbers::phi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  for (int it = 0; it < 100 && b - a > 1e-10; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  double x_best = fc < fd ? c : d;
  if (!(std::min(fc, fd) <= grid_obj[best])) x_best = grid_x(best);
  return std::min(std::exp(x_best), std::nextafter(sigma_prev, 0.0));
}

double stop_cv(std::span<const PolarSample> samples, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("stop_cv: sigma must be > 0");
  std::vector<double> w;
  bool any_failure = false;
  for (const auto& s : samples) {
    if (s.origin != Origin::light) continue;
    if (s.g_value <= 0.0) {
      w.push_back(1.0 / smooth_indicator(s.g_value, sigma));
      any_failure = true;
    } else {
      w.push_back(0.0);
    }
  }
  if (!any_failure || w.size() < 2) return kInf;
  return cv(w);
}

double lambda_schedule(double sigma, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("lambda_schedule: horizon must be > 0");
  if (sigma > horizon) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * sigma / horizon));
}

PfEstimate estimate_pf(std::span<const PolarSample> samples, const SafeMixtureParams& phi) {
  if (samples.empty()) throw std::invalid_argument("estimate_pf: no samples");
  PfEstimate out;
  const std::vector<double> q_log = safe_logpdf(samples, phi);
  std::vector<double> log_terms;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].g_value > 0.0) continue;
    ++out.n_failures;
    log_terms.push_back(prior_polar_logpdf(samples[i].r, phi.light.dim) - q_log[i]);
  }
  if (out.n_failures == 0) return out;
  out.pf = std::exp(log_sum_exp(log_terms) - std::log(static_cast<double>(samples.size())));
  return out;
}

std::vector<PolarSample> sample_and_evaluate(RngStream& rng, const SafeMixtureParams& phi,
                                             const Problem& problem, std::size_t n) {
  std::vector<PolarSample> samples = safe_sample(rng, phi, n);
  for (auto& s : samples) {
    const std::vector<double> u = s.cartesian();
    s.g_value = problem.evaluate(u);
    if (std::isnan(s.g_value)) throw std::runtime_error("limit-state function returned NaN");
  }
  return samples;
}

RunResult run_safe_ice(const Problem& problem, const RunConfig& config, RngStream& rng) {
  return run_loop(problem, config, rng, true);
}

RunResult run_ice(const Problem& problem, const RunConfig& config, RngStream& rng) {
  return run_loop(problem, config, rng, false);
}

RunResult run(const Problem& problem, const RunConfig& config) {
  RngStream rng(config.seed);
  return config.method == Method::ice ? run_ice(problem, config, rng)
                                      : run_safe_ice(problem, config, rng);
}

}  // namespace safeice
