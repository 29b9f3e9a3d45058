#pragma once

#include <span>
#include <vector>

#include "safeice/rng.hpp"

namespace safeice {

// Radial laws are densities with respect to dr on (0, inf); angular laws are
// densities with respect to the surface measure of S^{d-1}. A standard normal
// vector in R^d factors into chi(d) x uniform-sphere in this representation,
// so importance ratios formed here carry no r^{d-1} Jacobian.

struct NakagamiParams {
  double m = 1.0;      // shape, > 1/2
  double omega = 1.0;  // spread E[r^2], > 0

  void validate() const;
};

/// Law of 1/X for X ~ Nakagami(m, omega); right tail ~ r^{-(2m+1)}.
struct InverseNakagamiParams {
  double m = 1.0;
  double omega = 1.0;

  void validate() const;
};

struct VmfParams {
  std::vector<double> mu;  // unit mean direction
  double kappa = 0.0;      // concentration, >= 0

  int dim() const { return static_cast<int>(mu.size()); }
  void validate() const;
};

/// ln(2 m^m / (Gamma(m) omega^m)), shared by both radial families.
double nakagami_log_normalizer(double m, double omega);

double nakagami_logpdf(double r, const NakagamiParams& p);
double nakagami_sample(RngStream& rng, const NakagamiParams& p);

double inv_nakagami_logpdf(double r, const InverseNakagamiParams& p);
double inv_nakagami_sample(RngStream& rng, const InverseNakagamiParams& p);

/// ln C_d(kappa); kappa == 0 gives the uniform density -ln |S^{d-1}|.
double vmf_log_normalizer(int d, double kappa);
double vmf_logpdf(std::span<const double> a, const VmfParams& p);
/// Wood's rejection sampler, rotated onto mu with a Householder reflection.
std::vector<double> vmf_sample(RngStream& rng, const VmfParams& p);
std::vector<double> uniform_sphere_sample(RngStream& rng, int d);

/// chi(d) radial law of the standard normal, i.e. Nakagami(d/2, d).
double prior_radial_logpdf(double r, int d);
/// Standard normal prior at u = r a, in the polar representation.
double prior_polar_logpdf(double r, int d);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);

}  // namespace safeice
