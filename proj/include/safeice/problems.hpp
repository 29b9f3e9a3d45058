#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace safeice {

/// Limit-state function g on standard-normal space; failure is g(u) <= 0.
struct Problem {
  std::string name;
  int dim = 2;
  double z = 0.0;
  std::function<double(std::span<const double>)> evaluate;
  std::optional<double> analytic_pf;  // known exactly for some problems
};

double four_branch(std::span<const double> u, double z);
double three_mode(std::span<const double> u, double z);
double two_mode(std::span<const double> u, double z);

/// Hysteretic SDOF oscillator with a Bouc-Wen restoring force under a
/// spectrally discretized white-noise ground acceleration.
struct OscillatorConfig {
  double mass = 6e4;         // kg
  double stiffness = 5e6;    // N/m
  double damping_ratio = 0.05;
  double yield_disp = 0.04;  // m
  double alpha = 0.1;        // elastic share of the restoring force
  double bw_a = 1.0;
  double bw_beta = 0.5;
  double bw_gamma = 0.5;
  double bw_n = 3.0;
  double noise_intensity = 0.005;  // S, m^2/s^3
  double cutoff = 15.0 * 3.14159265358979323846;  // rad/s
  int dim = 10;
  double t_end = 8.0;  // s
  double dt = 0.01;    // s

  void validate() const;
  double damping() const;       // c = 2 m zeta sqrt(k/m)
  double freq_step() const;     // delta omega = 2 cutoff / d
  double load_scale() const;    // sigma = sqrt(2 S delta omega)
};

/// RK4 integrator for one oscillator configuration. The forcing basis
/// cos(omega_i t), sin(omega_i t) at every RK4 stage time is tabulated once,
/// so evaluations are cheap and reentrant.
class Oscillator {
 public:
  explicit Oscillator(OscillatorConfig cfg);

  const OscillatorConfig& config() const { return cfg_; }
  /// Displacement x(t_end) for load coefficients u (length dim).
  double displacement(std::span<const double> u) const;

 private:
  OscillatorConfig cfg_;
  std::size_t steps_ = 0;
  std::vector<double> basis_;  // (2*steps+1) x dim, stage times k*dt/2
};

double oscillator_lsf(std::span<const double> u, double z, const Oscillator& model);

std::vector<std::string> problem_names();
int default_dimension(const std::string& name);
double default_threshold(const std::string& name);

/// Builds a configured problem. Throws std::invalid_argument for an unknown
/// name or a dimension the problem does not support.
Problem make_problem(const std::string& name, double z, int d);

}  // namespace safeice
