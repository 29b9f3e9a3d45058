#include "safeice/distributions.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "safeice/special_functions.hpp"

namespace safeice {

namespace {

void check_radius(double r, const char* who) {
  if (!(r > 0.0)) throw std::domain_error(std::string(who) + ": radius must be positive");
}

void check_radial(double m, double omega, const char* who) {
  if (!(m > 0.5) || !std::isfinite(m) || !(omega > 0.0) || !std::isfinite(omega)) {
    throw std::invalid_argument(std::string(who) + ": need m > 1/2 and omega > 0, both finite");
  }
}

}  // namespace

void NakagamiParams::validate() const { check_radial(m, omega, "NakagamiParams"); }

void InverseNakagamiParams::validate() const {
  check_radial(m, omega, "InverseNakagamiParams");
}

void VmfParams::validate() const {
  if (mu.size() < 2) throw std::invalid_argument("VmfParams: dimension must be >= 2");
  if (std::fabs(norm2(mu) - 1.0) > 1e-12) {
    throw std::invalid_argument("VmfParams: mu must be a unit vector");
  }
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw std::invalid_argument("VmfParams: kappa must be finite and >= 0");
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double nakagami_log_normalizer(double m, double omega) {
  return std::log(2.0) + m * std::log(m) - log_gamma(m) - m * std::log(omega);
}

double nakagami_logpdf(double r, const NakagamiParams& p) {
  check_radius(r, "nakagami_logpdf");
  return nakagami_log_normalizer(p.m, p.omega) + (2.0 * p.m - 1.0) * std::log(r) -
         p.m * r * r / p.omega;
}

double nakagami_sample(RngStream& rng, const NakagamiParams& p) {
  return std::sqrt(rng.gamma(p.m, p.omega / p.m));
}

double inv_nakagami_logpdf(double r, const InverseNakagamiParams& p) {
  check_radius(r, "inv_nakagami_logpdf");
  return nakagami_log_normalizer(p.m, p.omega) - (2.0 * p.m + 1.0) * std::log(r) -
         p.m / (p.omega * r * r);
}

double inv_nakagami_sample(RngStream& rng, const InverseNakagamiParams& p) {
  return 1.0 / nakagami_sample(rng, NakagamiParams{p.m, p.omega});
}

double vmf_log_normalizer(int d, double kappa) {
  if (kappa == 0.0) return -log_sphere_area(d);
  const double nu = 0.5 * d - 1.0;
  // ln I_nu(kappa) = log_bessel_i_scaled + kappa
  return nu * std::log(kappa) - 0.5 * d * std::log(2.0 * std::numbers::pi) -
         (log_bessel_i_scaled(nu, kappa) + kappa);
}

double vmf_logpdf(std::span<const double> a, const VmfParams& p) {
  if (a.size() != p.mu.size()) throw std::invalid_argument("vmf_logpdf: dimension mismatch");
  if (std::fabs(norm2(a) - 1.0) > 1e-8) {
    throw std::domain_error("vmf_logpdf: direction must be a unit vector");
  }
  const double ln_c = vmf_log_normalizer(p.dim(), p.kappa);
  if (p.kappa == 0.0) return ln_c;
  return ln_c + p.kappa * dot(p.mu, a);
}

std::vector<double> uniform_sphere_sample(RngStream& rng, int d) {
  std::vector<double> x(static_cast<std::size_t>(d));
  double n = 0.0;
  do {
    for (double& xi : x) xi = rng.normal();
    n = norm2(x);
  } while (n == 0.0);
  for (double& xi : x) xi /= n;
  return x;
}

std::vector<double> vmf_sample(RngStream& rng, const VmfParams& p) {
  const int d = p.dim();
  if (p.kappa == 0.0) return uniform_sphere_sample(rng, d);

  // Component w = mu^T a by rejection (Wood 1994), written to avoid
  // cancellation in b for large kappa.
  const double dm1 = d - 1.0;
  const double kappa = p.kappa;
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
  double w = 0.0;
  for (;;) {
    const double z = rng.beta(0.5 * dm1, 0.5 * dm1);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = rng.uniform();
    if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }

  // Sample around e_1: a = (w, sqrt(1-w^2) v) with v uniform on S^{d-2}.
  std::vector<double> a(static_cast<std::size_t>(d));
  a[0] = w;
  const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
  if (d == 2) {
    a[1] = rng.uniform() < 0.5 ? -s : s;
  } else {
    const std::vector<double> v = uniform_sphere_sample(rng, d - 1);
    for (int i = 1; i < d; ++i) a[static_cast<std::size_t>(i)] = s * v[static_cast<std::size_t>(i - 1)];
  }

  // Householder reflection H with H e_1 = mu.
  std::vector<double> h(p.mu);
  h[0] -= 1.0;
  const double hh = dot(h, h);
  if (hh > 1e-30) {
    const double proj = 2.0 * dot(h, a) / hh;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= proj * h[i];
  }
  const double n = norm2(a);
  for (double& ai : a) ai /= n;
  return a;
}

double prior_radial_logpdf(double r, int d) {
  if (d < 1) throw std::invalid_argument("prior_radial_logpdf: dimension must be >= 1");
  return nakagami_logpdf(r, NakagamiParams{0.5 * d, static_cast<double>(d)});
}

double prior_polar_logpdf(double r, int d) {
  return prior_radial_logpdf(r, d) - log_sphere_area(d);
}

}  // namespace safeice
