#pragma once

// Scalar special functions used by the densities and samplers.
//
// Everything here is pure and safe to call concurrently. Functions that can
// overflow in linear space are exposed in log space only.

namespace safeice {

/// ln Gamma(x) for x > 0 (Lanczos, g = 7). Throws std::domain_error for x <= 0.
double log_gamma(double x);

/// Standard normal CDF.
double normal_cdf(double x);

/// ln Phi(x), accurate far into the lower tail where Phi(x) underflows.
double log_normal_cdf(double x);

/// ln I_order(x) - x, the exponentially scaled modified Bessel function of the
/// first kind. Requires order >= 0 and x >= 0; returns -inf at x = 0 for
/// order > 0.
double log_bessel_i_scaled(double order, double x);

/// Mean resultant length of the vMF law on S^{d-1}:
/// A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa), by continued fraction.
double bessel_ratio(int d, double kappa);

/// ln of the surface area of the unit sphere S^{d-1} in R^d.
double log_sphere_area(int d);

}  // namespace safeice
