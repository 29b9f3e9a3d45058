#include "safeice/mixtures.hpp"

#include <cmath>
#include <stdexcept>

#include "safeice/special_functions.hpp"

namespace safeice {

namespace {

// Per-component constants hoisted out of the per-sample loops.
struct ComponentTerms {
  double log_weight;
  double light_norm;
  double light_m;
  double light_omega;
  double heavy_norm;
  double heavy_m;
  double heavy_omega;
  double vmf_norm;
  double kappa;
  const std::vector<double>* mu;

  double light_radial(double r, double log_r) const {
    return light_norm + (2.0 * light_m - 1.0) * log_r - light_m * r * r / light_omega;
  }
  double heavy_radial(double r, double log_r) const {
    return heavy_norm - (2.0 * heavy_m + 1.0) * log_r - heavy_m / (heavy_omega * r * r);
  }
  double angular(std::span<const double> a) const {
    return kappa == 0.0 ? vmf_norm : vmf_norm + kappa * dot(*mu, a);
  }
};

std::vector<ComponentTerms> light_terms(const VmfnmParams& v) {
  std::vector<ComponentTerms> terms;
  terms.reserve(v.size());
  for (const auto& c : v.components) {
    terms.push_back(ComponentTerms{
        std::log(c.weight), nakagami_log_normalizer(c.radial.m, c.radial.omega), c.radial.m,
        c.radial.omega, 0.0, 1.0, 1.0, vmf_log_normalizer(v.dim, c.angular.kappa),
        c.angular.kappa, &c.angular.mu});
  }
  return terms;
}

std::vector<ComponentTerms> safe_terms(const SafeMixtureParams& phi) {
  std::vector<ComponentTerms> terms = light_terms(phi.light);
  for (std::size_t k = 0; k < terms.size(); ++k) {
    terms[k].heavy_m = phi.heavy.shape;
    terms[k].heavy_omega = phi.heavy.spreads[k];
    terms[k].heavy_norm = nakagami_log_normalizer(phi.heavy.shape, phi.heavy.spreads[k]);
  }
  return terms;
}

double light_logpdf(const PolarSample& s, const std::vector<ComponentTerms>& terms,
                    std::vector<double>& scratch) {
  const double log_r = std::log(s.r);
  scratch.resize(terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    scratch[k] = terms[k].log_weight + terms[k].light_radial(s.r, log_r) + terms[k].angular(s.a);
  }
  return log_sum_exp(scratch);
}

double safe_logpdf_impl(const PolarSample& s, const std::vector<ComponentTerms>& terms,
                        double lambda, std::vector<double>& scratch) {
  const double log_r = std::log(s.r);
  const double log_lambda = lambda > 0.0 ? std::log(lambda) : kNegInf;
  const double log_one_minus = lambda < 1.0 ? std::log1p(-lambda) : kNegInf;
  scratch.resize(terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const double light = log_lambda == kNegInf ? kNegInf
                                               : log_lambda + terms[k].light_radial(s.r, log_r);
    const double heavy = log_one_minus == kNegInf
                             ? kNegInf
                             : log_one_minus + terms[k].heavy_radial(s.r, log_r);
    scratch[k] = terms[k].log_weight + log_add(light, heavy) + terms[k].angular(s.a);
  }
  return log_sum_exp(scratch);
}

}  // namespace

std::vector<double> VmfnmParams::weights() const {
  std::vector<double> w;
  w.reserve(components.size());
  for (const auto& c : components) w.push_back(c.weight);
  return w;
}

void VmfnmParams::validate() const {
  if (dim < 2) throw std::invalid_argument("VmfnmParams: dimension must be >= 2");
  if (components.empty()) throw std::invalid_argument("VmfnmParams: no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw std::invalid_argument("VmfnmParams: weights must be positive");
    if (c.angular.dim() != dim) throw std::invalid_argument("VmfnmParams: direction dimension mismatch");
    c.radial.validate();
    c.angular.validate();
    total += c.weight;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw std::invalid_argument("VmfnmParams: weights must sum to 1");
}

void SafeMixtureParams::validate() const {
  light.validate();
  if (heavy.spreads.size() != light.size()) {
    throw std::invalid_argument("SafeMixtureParams: one heavy spread per light component");
  }
  for (double s : heavy.spreads) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("SafeMixtureParams: spreads must be positive");
  }
  if (!(heavy.shape > 0.5)) throw std::invalid_argument("SafeMixtureParams: heavy shape must exceed 1/2");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("SafeMixtureParams: lambda must lie in [0,1]");
}

std::vector<double> PolarSample::cartesian() const {
  std::vector<double> u(a);
  for (double& x : u) x *= r;
  return u;
}

PolarSample polar_from_cartesian(std::span<const double> u) {
  PolarSample s;
  s.r = norm2(u);
  if (!(s.r > 0.0)) throw std::domain_error("polar_from_cartesian: zero vector has no direction");
  s.a.assign(u.begin(), u.end());
  for (double& x : s.a) x /= s.r;
  return s;
}

double log_nakagami_mean_factor(double m) { return log_gamma(m + 0.5) - log_gamma(m); }

double vmfnm_logpdf(const PolarSample& s, const VmfnmParams& v) {
  std::vector<double> scratch;
  return light_logpdf(s, light_terms(v), scratch);
}

std::vector<double> vmfnm_logpdf(std::span<const PolarSample> samples, const VmfnmParams& v) {
  const auto terms = light_terms(v);
  std::vector<double> out(samples.size());
  std::vector<double> scratch;
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = light_logpdf(samples[i], terms, scratch);
  return out;
}

Matrix component_log_densities(std::span<const PolarSample> samples, const VmfnmParams& v) {
  const auto terms = light_terms(v);
  Matrix out(samples.size(), terms.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const double log_r = std::log(s.r);
    for (std::size_t k = 0; k < terms.size(); ++k) {
      out(i, k) = terms[k].log_weight + terms[k].light_radial(s.r, log_r) + terms[k].angular(s.a);
    }
  }
  return out;
}

HeavyParams heavy_params_from_light(const VmfnmParams& v) {
  HeavyParams h;
  h.shape = std::ceil(std::sqrt(static_cast<double>(v.dim)));
  const double mode_factor = 2.0 * h.shape / (2.0 * h.shape + 1.0);
  h.spreads.reserve(v.size());
  for (const auto& c : v.components) {
    // (Gamma(m)/Gamma(m+1/2))^2 through log-gamma so large m cannot overflow.
    const double gamma_ratio_sq = std::exp(-2.0 * log_nakagami_mean_factor(c.radial.m));
    h.spreads.push_back(mode_factor * gamma_ratio_sq * c.radial.m / c.radial.omega);
  }
  return h;
}

SafeMixtureParams make_safe_mixture(const VmfnmParams& v, double lambda) {
  return SafeMixtureParams{v, heavy_params_from_light(v), lambda};
}

double safe_logpdf(const PolarSample& s, const SafeMixtureParams& phi) {
  std::vector<double> scratch;
  return safe_logpdf_impl(s, safe_terms(phi), phi.lambda, scratch);
}

std::vector<double> safe_logpdf(std::span<const PolarSample> samples,
                                const SafeMixtureParams& phi) {
  const auto terms = safe_terms(phi);
  std::vector<double> out(samples.size());
  std::vector<double> scratch;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out[i] = safe_logpdf_impl(samples[i], terms, phi.lambda, scratch);
  }
  return out;
}

std::vector<PolarSample> safe_sample(RngStream& rng, const SafeMixtureParams& phi, std::size_t n) {
  if (n == 0) throw std::invalid_argument("safe_sample: n must be >= 1");
  const auto weights = phi.light.weights();
  const auto n_light = static_cast<std::size_t>(std::llround(phi.lambda * static_cast<double>(n)));

  std::vector<PolarSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    PolarSample& s = out[i];
    const std::size_t k = rng.categorical(weights);
    const auto& comp = phi.light.components[k];
    s.component_index = static_cast<int>(k);
    if (i < n_light) {
      s.origin = Origin::light;
      s.r = nakagami_sample(rng, comp.radial);
    } else {
      s.origin = Origin::heavy;
      s.r = inv_nakagami_sample(rng, InverseNakagamiParams{phi.heavy.shape, phi.heavy.spreads[k]});
    }
    s.a = vmf_sample(rng, comp.angular);
  }
  return out;
}

VmfnmParams prior_like_mixture(RngStream& rng, int dim, std::size_t k) {
  if (k == 0) throw std::invalid_argument("prior_like_mixture: need at least one component");
  VmfnmParams v;
  v.dim = dim;
  v.components.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    v.components.push_back(VmfnmComponent{1.0 / static_cast<double>(k),
                                          NakagamiParams{0.5 * dim, static_cast<double>(dim)},
                                          VmfParams{uniform_sphere_sample(rng, dim), 0.0}});
  }
  return v;
}

}  // namespace safeice
