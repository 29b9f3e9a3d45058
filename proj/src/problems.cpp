#include "safeice/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "safeice/special_functions.hpp"

namespace safeice {

double four_branch(std::span<const double> u, double z) {
  if (u.size() != 2) throw std::invalid_argument("four_branch: requires d = 2");
  const double diff = u[0] - u[1];
  const double sum = u[0] + u[1];
  const double quad = 0.1 * diff * diff;
  const double c = 7.0 / std::numbers::sqrt2;
  const double g = std::min({quad - sum / std::numbers::sqrt2 + 3.0,
                             quad + sum / std::numbers::sqrt2 + 3.0, diff + c, -diff + c});
  return g + z;
}

double three_mode(std::span<const double> u, double z) {
  if (u.size() != 2) throw std::invalid_argument("three_mode: requires d = 2");
  const double q = u[0] / 5.0;
  const double first = z - 1.0 - u[1] + std::exp(-u[0] * u[0] / 10.0) + q * q * q * q;
  const double second = 0.5 * z * z - u[0] * u[1];
  return std::min(first, second);
}

double two_mode(std::span<const double> u, double z) {
  if (u.empty()) throw std::invalid_argument("two_mode: requires d >= 1");
  double s = 0.0;
  for (double x : u) s += x;
  s /= std::sqrt(static_cast<double>(u.size()));
  return std::min(z - s, z + s);
}

void OscillatorConfig::validate() const {
  const std::array<double, 13> positive = {mass,    stiffness, damping_ratio,   yield_disp, alpha,
                                           bw_a,    bw_beta,   bw_gamma,        bw_n,       noise_intensity,
                                           cutoff,  t_end,     dt};
  for (double x : positive) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument("OscillatorConfig: all constants must be positive");
    }
  }
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("OscillatorConfig: dim must be even");
}

double OscillatorConfig::damping() const {
  return 2.0 * mass * damping_ratio * std::sqrt(stiffness / mass);
}

double OscillatorConfig::freq_step() const { return 2.0 * cutoff / dim; }

double OscillatorConfig::load_scale() const {
  return std::sqrt(2.0 * noise_intensity * freq_step());
}

Oscillator::Oscillator(OscillatorConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  steps_ = static_cast<std::size_t>(std::llround(cfg_.t_end / cfg_.dt));
  const std::size_t half = static_cast<std::size_t>(cfg_.dim / 2);
  const std::size_t stages = 2 * steps_ + 1;
  basis_.resize(stages * static_cast<std::size_t>(cfg_.dim));
  const double dw = cfg_.freq_step();
  for (std::size_t j = 0; j < stages; ++j) {
    const double t = 0.5 * cfg_.dt * static_cast<double>(j);
    double* row = basis_.data() + j * static_cast<std::size_t>(cfg_.dim);
    for (std::size_t i = 0; i < half; ++i) {
      const double w = static_cast<double>(i + 1) * dw;
      row[i] = std::cos(w * t);
      row[half + i] = std::sin(w * t);
    }
  }
}

double Oscillator::displacement(std::span<const double> u) const {
  const auto d = static_cast<std::size_t>(cfg_.dim);
  if (u.size() != d) throw std::invalid_argument("oscillator: input dimension mismatch");

  const std::size_t stages = 2 * steps_ + 1;
  // Ground-acceleration forcing per unit mass, -sigma * sum(...), at each stage time.
  std::vector<double> accel(stages);
  const double sigma = cfg_.load_scale();
  for (std::size_t j = 0; j < stages; ++j) {
    const double* row = basis_.data() + j * d;
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += u[i] * row[i];
    accel[j] = -sigma * s;
  }

  const double c_over_m = cfg_.damping() / cfg_.mass;
  const double k_over_m = cfg_.stiffness / cfg_.mass;
  const double alpha = cfg_.alpha;
  const double xy = cfg_.yield_disp;
  const double n = cfg_.bw_n;
  const bool cubic = n == 3.0;

  struct State {
    double x, v, z;
  };
  auto rhs = [&](const State& s, double f) {
    const double az = std::fabs(s.z);
    const double az_nm1 = cubic ? az * az : std::pow(az, n - 1.0);
    const double az_n = az_nm1 * az;
    const double zdot =
        (cfg_.bw_a * s.v - cfg_.bw_beta * std::fabs(s.v) * az_nm1 * s.z - cfg_.bw_gamma * s.v * az_n) /
        xy;
    const double a = f - c_over_m * s.v - k_over_m * (alpha * s.x + (1.0 - alpha) * xy * s.z);
    return State{s.v, a, zdot};
  };

  const double h = cfg_.dt;
  State y{0.0, 0.0, 0.0};
  for (std::size_t step = 0; step < steps_; ++step) {
    const double f0 = accel[2 * step];
    const double fh = accel[2 * step + 1];
    const double f1 = accel[2 * step + 2];
    const State k1 = rhs(y, f0);
    const State k2 = rhs({y.x + 0.5 * h * k1.x, y.v + 0.5 * h * k1.v, y.z + 0.5 * h * k1.z}, fh);
    const State k3 = rhs({y.x + 0.5 * h * k2.x, y.v + 0.5 * h * k2.v, y.z + 0.5 * h * k2.z}, fh);
    const State k4 = rhs({y.x + h * k3.x, y.v + h * k3.v, y.z + h * k3.z}, f1);
    y.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    y.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    y.z += h / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
  }
  if (!std::isfinite(y.x) || !std::isfinite(y.v) || !std::isfinite(y.z)) {
    throw std::runtime_error("oscillator: non-finite state (integration blew up)");
  }
  return y.x;
}

double oscillator_lsf(std::span<const double> u, double z, const Oscillator& model) {
  return z - model.displacement(u);
}

std::vector<std::string> problem_names() {
  return {"four-branch", "three-mode", "two-mode", "oscillator"};
}

int default_dimension(const std::string& name) {
  if (name == "oscillator") return 10;
  if (name == "four-branch" || name == "three-mode" || name == "two-mode") return 2;
  throw std::invalid_argument("unknown problem '" + name + "'");
}

double default_threshold(const std::string& name) {
  if (name == "four-branch") return 0.0;
  if (name == "three-mode") return 3.0;
  if (name == "two-mode") return 3.5;
  if (name == "oscillator") return 0.05;
  throw std::invalid_argument("unknown problem '" + name + "'");
}

Problem make_problem(const std::string& name, double z, int d) {
  if (!std::isfinite(z)) throw std::invalid_argument("threshold z must be finite");
  Problem p;
  p.name = name;
  p.dim = d;
  p.z = z;
  if (name == "four-branch" || name == "three-mode") {
    if (d != 2) throw std::invalid_argument(name + " requires d = 2 (got " + std::to_string(d) + ")");
    if (name == "four-branch") {
      p.evaluate = [z](std::span<const double> u) { return four_branch(u, z); };
    } else {
      p.evaluate = [z](std::span<const double> u) { return three_mode(u, z); };
    }
  } else if (name == "two-mode") {
    if (d < 2) throw std::invalid_argument("two-mode requires d >= 2 (got " + std::to_string(d) + ")");
    p.evaluate = [z](std::span<const double> u) { return two_mode(u, z); };
    p.analytic_pf = 2.0 * normal_cdf(-z);
  } else if (name == "oscillator") {
    if (d != 10) throw std::invalid_argument("oscillator requires d = 10 (got " + std::to_string(d) + ")");
    auto model = std::make_shared<const Oscillator>(OscillatorConfig{});
    p.evaluate = [z, model](std::span<const double> u) { return oscillator_lsf(u, z, *model); };
  } else {
    throw std::invalid_argument("unknown problem '" + name + "'");
  }
  return p;
}

}  // namespace safeice
