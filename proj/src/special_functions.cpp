#include "safeice/special_functions.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace safeice {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoef = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

// ln Gamma(x) for x >= 0.5.
double lanczos_log_gamma(double x) {
  const double xm1 = x - 1.0;
  double sum = kLanczosCoef[0];
  for (std::size_t i = 1; i < kLanczosCoef.size(); ++i) {
    sum += kLanczosCoef[i] / (xm1 + static_cast<double>(i));
  }
  const double t = xm1 + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (xm1 + 0.5) * std::log(t) - t +
         std::log(sum);
}

// Power series sum_k (x/2)^{2k+nu} / (k! Gamma(k+nu+1)). All terms are
// positive, so summing outward from the largest term is stable for any x.
double log_bessel_i_series(double nu, double x) {
  const double half_x = 0.5 * x;
  const double quarter_x2 = half_x * half_x;
  const double peak = 0.5 * (std::sqrt(nu * nu + x * x) - nu) - 1.0;
  const double k_star = std::max(0.0, std::floor(peak + 1.0));

  const double log_peak_term = (2.0 * k_star + nu) * std::log(half_x) -
                               lanczos_log_gamma(k_star + 1.0) -
                               lanczos_log_gamma(k_star + nu + 1.0);

  constexpr double kTol = 1e-18;
  double sum = 1.0;
  double term = 1.0;
  for (double k = k_star; ; k += 1.0) {
    term *= quarter_x2 / ((k + 1.0) * (k + 1.0 + nu));
    sum += term;
    if (term < kTol * sum) break;
  }
  term = 1.0;
  for (double k = k_star; k > 0.0; k -= 1.0) {
    term *= k * (k + nu) / quarter_x2;
    sum += term;
    if (term < kTol * sum) break;
  }
  return log_peak_term + std::log(sum);
}

// Hankel large-argument expansion of e^{-x} I_nu(x).
double log_bessel_i_scaled_asymptotic(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double sum = 1.0;
  double term = 1.0;
  double prev_abs = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (8.0 * k * x);
    const double abs_term = std::fabs(term);
    if (abs_term > prev_abs) break;  // series turned divergent
    sum += term;
    if (abs_term < 1e-17 * std::fabs(sum)) break;
    prev_abs = abs_term;
  }
  return -0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: argument must be positive");
  if (std::isinf(x)) return x;
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
           lanczos_log_gamma(1.0 - x);
  }
  return lanczos_log_gamma(x);
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double log_normal_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x > 5.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  // Asymptotic tail: Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - ...)
  const double inv_x2 = 1.0 / (x * x);
  double series = 1.0;
  double term = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2.0 * k - 1.0) * inv_x2;
    series += term;
  }
  return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log(series);
}

double log_bessel_i_scaled(double order, double x) {
  if (!(order >= 0.0)) throw std::domain_error("log_bessel_i_scaled: order must be >= 0");
  if (!(x >= 0.0)) throw std::domain_error("log_bessel_i_scaled: x must be >= 0");
  if (x == 0.0) {
    return order == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  if (x > 50.0 && x > 2.0 * order * order) {
    return log_bessel_i_scaled_asymptotic(order, x);
  }
  return log_bessel_i_series(order, x) - x;
}

double bessel_ratio(int d, double kappa) {
  if (d < 2) throw std::domain_error("bessel_ratio: dimension must be >= 2");
  if (!(kappa >= 0.0)) throw std::domain_error("bessel_ratio: kappa must be >= 0");
  if (kappa == 0.0) return 0.0;
  if (std::isinf(kappa)) return 1.0;

  // I_{nu+1}/I_nu = 1/(b_1 + 1/(b_2 + ...)), b_j = 2(nu+j)/kappa; modified Lentz.
  const double nu = 0.5 * d - 1.0;
  constexpr double kTiny = 1e-300;
  double f = kTiny;
  double c = f;
  double dd = 0.0;
  for (long j = 1; j < 100'000'000; ++j) {
    const double b = 2.0 * (nu + static_cast<double>(j)) / kappa;
    dd = b + dd;
    if (dd == 0.0) dd = kTiny;
    c = b + 1.0 / c;
    if (c == 0.0) c = kTiny;
    dd = 1.0 / dd;
    const double delta = c * dd;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return f;
}

double log_sphere_area(int d) {
  if (d < 1) throw std::domain_error("log_sphere_area: dimension must be >= 1");
  return std::log(2.0) + 0.5 * d * std::log(std::numbers::pi) - log_gamma(0.5 * d);
}

}  // namespace safeice
