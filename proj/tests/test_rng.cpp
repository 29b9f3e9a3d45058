#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracle_support.hpp"
#include "safeice/rng.hpp"

using namespace safeice;

TEST_CASE("identical seeds give identical sequences") {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.gamma(0.7) == b.gamma(0.7));
  }
}

TEST_CASE("split is deterministic and key dependent") {
  const RngStream root(7);
  RngStream s1 = root.split(1);
  RngStream s1b = root.split(1);
  RngStream s2 = root.split(2);
  CHECK(s1.seed() == s1b.seed());
  CHECK(s1.seed() != s2.seed());
  CHECK(s1.next_u64() == s1b.next_u64());

  // Sibling substreams are uncorrelated.
  const int n = 200000;
  double sxy = 0.0;
  for (int i = 0; i < n; ++i) sxy += s1.normal() * s2.normal();
  CHECK(std::fabs(sxy / n) < 4.0 / std::sqrt(n));
}

TEST_CASE("uniform lies in the open unit interval") {
  RngStream r(1);
  std::vector<double> xs;
  for (int i = 0; i < 200000; ++i) {
    const double u = r.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    xs.push_back(u);
  }
  CHECK(oracle::ks_statistic(xs, [](double x) { return x; }) < oracle::ks_critical_1pct(xs.size()));
}

TEST_CASE("normal passes KS against Phi") {
  RngStream r(2);
  std::vector<double> xs;
  for (int i = 0; i < 200000; ++i) xs.push_back(r.normal());
  CHECK(oracle::ks_statistic(xs, oracle::normal_cdf) < oracle::ks_critical_1pct(xs.size()));
}

TEST_CASE("gamma passes KS for shapes below and above one") {
  for (double shape : {0.3, 1.0, 2.5, 40.0}) {
    RngStream r(3);
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i) xs.push_back(r.gamma(shape, 2.0));
    auto cdf = [shape](double x) { return boost::math::gamma_p(shape, x / 2.0); };
    CHECK(oracle::ks_statistic(xs, cdf) < oracle::ks_critical_1pct(xs.size()));
  }
}

TEST_CASE("beta mean") {
  RngStream r(4);
  const int n = 200000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.beta(2.0, 5.0);
  const double sd = std::sqrt(2.0 * 5.0 / (49.0 * 8.0));
  CHECK(std::fabs(s / n - 2.0 / 7.0) < 4.0 * sd / std::sqrt(n));
}

TEST_CASE("categorical frequencies") {
  RngStream r(5);
  const std::vector<double> w = {1.0, 3.0, 0.0, 6.0};
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[r.categorical(w)];
  CHECK(counts[2] == 0);
  for (std::size_t k : {0u, 1u, 3u}) {
    const double p = w[k] / 10.0;
    CHECK(std::fabs(counts[k] / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
  }
}
