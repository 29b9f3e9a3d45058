#pragma once

#include <span>
#include <vector>

#include "safeice/distributions.hpp"
#include "safeice/log_space.hpp"
#include "safeice/rng.hpp"

namespace safeice {

/// One vMFN component: Nakagami radius times vMF direction.
struct VmfnmComponent {
  double weight = 1.0;
  NakagamiParams radial;
  VmfParams angular;
};

/// Light-tailed vMFNM mixture.
struct VmfnmParams {
  int dim = 2;
  std::vector<VmfnmComponent> components;

  std::size_t size() const { return components.size(); }
  std::vector<double> weights() const;
  void validate() const;
};

/// Radial parameters of the heavy (inverse-Nakagami) companion. The heavy
/// mixture reuses the light weights and vMF factors verbatim.
struct HeavyParams {
  double shape = 1.0;           // m^IN = ceil(sqrt(d)), shared by all components
  std::vector<double> spreads;  // Omega_k^IN
};

/// lambda * light + (1 - lambda) * heavy.
struct SafeMixtureParams {
  VmfnmParams light;
  HeavyParams heavy;
  double lambda = 1.0;

  void validate() const;
};

enum class Origin { light, heavy };

struct PolarSample {
  double r = 1.0;
  std::vector<double> a;  // unit direction
  double g_value = 0.0;
  Origin origin = Origin::light;
  int component_index = 0;

  std::vector<double> cartesian() const;
};

PolarSample polar_from_cartesian(std::span<const double> u);

/// ln C(m) with C(m) = Gamma(m + 1/2) / Gamma(m); the Nakagami mean is C(m) sqrt(omega/m).
double log_nakagami_mean_factor(double m);

double vmfnm_logpdf(const PolarSample& s, const VmfnmParams& v);
std::vector<double> vmfnm_logpdf(std::span<const PolarSample> samples, const VmfnmParams& v);

/// N x K matrix of ln pi_k + ln q_k(u_i) for the light components.
Matrix component_log_densities(std::span<const PolarSample> samples, const VmfnmParams& v);

/// Heavy radial parameters matched so each inverse-Nakagami mode sits at the
/// mean of the corresponding light Nakagami radius.
HeavyParams heavy_params_from_light(const VmfnmParams& v);
SafeMixtureParams make_safe_mixture(const VmfnmParams& v, double lambda);

double safe_logpdf(const PolarSample& s, const SafeMixtureParams& phi);
std::vector<double> safe_logpdf(std::span<const PolarSample> samples,
                                const SafeMixtureParams& phi);

/// Exactly n draws: the first round(lambda * n) use Nakagami radii, the rest
/// inverse-Nakagami radii. Components are chosen per draw with probability pi_k.
std::vector<PolarSample> safe_sample(RngStream& rng, const SafeMixtureParams& phi, std::size_t n);

/// K identical prior-radial components with uniform-sphere directions (kappa = 0)
/// and random mean directions; its density equals the standard normal prior.
VmfnmParams prior_like_mixture(RngStream& rng, int dim, std::size_t k);

}  // namespace safeice
