#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "focalcal/gamma_policy.hpp"
#include "focalcal/losses.hpp"

using namespace focalcal;

namespace {

double g_direct(double p, double gamma) {
  return std::pow(1.0 - p, gamma) - gamma * p * std::pow(1.0 - p, gamma - 1.0) * std::log(p);
}

// Positive root of g(p0, gamma) = 1 on (lo, hi] by bisection, or NaN when g
// stays below 1 over the whole interval.
double bisect_gamma(double p0, double lo, double hi) {
  if (!(g_direct(p0, lo) > 1.0)) return std::nan("");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (g_direct(p0, mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("gamma_policy") {
  TEST_CASE("gamma star against the values it is meant to reproduce") {
    CHECK(std::abs(gamma_star(0.2) - 5.0) <= 0.5);
    CHECK(std::abs(gamma_star(0.25) - 3.0) <= 0.3);
    CHECK(gamma_star(0.2) == doctest::Approx(4.85055444550604).epsilon(1e-9));
    CHECK(gamma_star(0.25) == doctest::Approx(3.070227101505457).epsilon(1e-9));
  }

  TEST_CASE("gamma star matches a bisection oracle") {
    for (int i = 1; i <= 9; ++i) {
      const double p0 = 0.05 * i;
      const double oracle = bisect_gamma(p0, 1e-6, 100.0);
      REQUIRE(std::isfinite(oracle));
      CHECK(gamma_star(p0) == doctest::Approx(oracle).epsilon(1e-8));
    }
  }

  TEST_CASE("branch point p0 = 0.5 gives zero") {
    CHECK(gamma_star(0.5) == 0.0);
    // No positive root: g(0.5, gamma) stays below 1 on (0, 10].
    CHECK(std::isnan(bisect_gamma(0.5, 1e-6, 10.0)));
    for (int i = 1; i <= 1000; ++i) CHECK(g_direct(0.5, i / 100.0) < 1.0);
  }

  TEST_CASE("gamma star equality and uniqueness on the threshold grid") {
    double prev = INFINITY;
    for (int i = 1; i <= 9; ++i) {
      const double p0 = 0.05 * i;
      const double gs = gamma_star(p0);
      CHECK(std::abs(g_ratio(p0, gs) - 1.0) <= 1e-6);
      double worst = 0.0;
      for (int j = 1; j <= 1000; ++j) worst = std::max(worst, g_ratio(p0 + (1.0 - p0) * j / 1000.0, gs));
      CHECK(worst < 1.0);
      CHECK(gs <= prev);
      prev = gs;
    }
  }

  TEST_CASE("gamma star domain") {
    CHECK_THROWS_AS(gamma_star(0.0), std::domain_error);
    CHECK_THROWS_AS(gamma_star(1.0), std::domain_error);
    CHECK_THROWS_AS(gamma_star(-0.3), std::domain_error);
    CHECK(gamma_star(0.7) == 0.0);
  }

  TEST_CASE("sample-dependent lookup") {
    const auto p = GammaPolicy::flsd_53();
    CHECK(gamma_for_sample(p, 0.1, 1) == 5.0);
    CHECK(gamma_for_sample(p, 0.2, 1) == 3.0);
    CHECK(gamma_for_sample(p, 0.0, 1) == 5.0);
    CHECK(gamma_for_sample(p, 1.0, 1) == 3.0);
    CHECK(gamma_for_sample(p, std::nextafter(0.2, 0.0), 1) == 5.0);
    const auto q = GammaPolicy::flsd_532();
    CHECK(gamma_for_sample(q, 0.3, 7) == 3.0);
    CHECK(gamma_for_sample(q, 0.5, 7) == 2.0);
  }

  TEST_CASE("epoch schedule lookup") {
    const auto p = GammaPolicy::scheduled_532();
    CHECK(gamma_for_sample(p, 0.9, 1) == 5.0);
    CHECK(gamma_for_sample(p, 0.9, 100) == 5.0);
    CHECK(gamma_for_sample(p, 0.9, 101) == 3.0);
    CHECK(gamma_for_sample(p, 0.9, 120) == 3.0);
    CHECK(gamma_for_sample(p, 0.9, 251) == 2.0);
    CHECK(gamma_for_sample(p, 0.9, 1000) == 2.0);
    CHECK(gamma_for_sample(GammaPolicy::scheduled_531(), 0.1, 300) == 1.0);
  }

  TEST_CASE("lookup is total and piecewise constant") {
    const auto p = GammaPolicy::flsd_532();
    int changes = 0;
    double prev = gamma_for_sample(p, 0.0, 1);
    for (int i = 1; i <= 100000; ++i) {
      const double g = gamma_for_sample(p, i / 100000.0, 1);
      REQUIRE(std::isfinite(g));
      if (g != prev) ++changes;
      prev = g;
    }
    CHECK(changes == 2);
  }

  TEST_CASE("derived threshold policies") {
    const auto p = derive_threshold_policy({{0.2, 0.2}, {1.0, 0.25}});
    REQUIRE(p.kind() == GammaPolicyKind::sample_thresholds);
    CHECK(std::abs(p.entries()[0].second - 5.0) <= 0.5);
    CHECK(std::abs(p.entries()[1].second - 3.0) <= 0.5);
    CHECK(p.entries()[0].second == gamma_star(0.2));
    const auto single = derive_threshold_policy({{1.0, 0.25}});
    for (double x : {0.0, 0.3, 0.99}) CHECK(gamma_for_sample(single, x, 1) == gamma_star(0.25));
    CHECK_THROWS_AS(derive_threshold_policy({}), std::invalid_argument);
    CHECK_THROWS_AS(derive_threshold_policy({{1.0, 1.5}}), std::domain_error);
  }

  TEST_CASE("policy grammar") {
    CHECK(parse_gamma_policy("fixed:3") == GammaPolicy::fixed(3.0));
    CHECK(parse_gamma_policy("sample:0.2=5,1.0=3") == GammaPolicy::flsd_53());
    CHECK(parse_gamma_policy("epoch:100=5,250=3,350=2") == GammaPolicy::scheduled_532());
    CHECK(parse_gamma_policy("flsd-53") == GammaPolicy::flsd_53());
    CHECK(parse_gamma_policy("flsd-532") == GammaPolicy::flsd_532());
    CHECK(parse_gamma_policy("flsc-531") == GammaPolicy::scheduled_531());
    CHECK(parse_gamma_policy("flsc-532") == GammaPolicy::scheduled_532());
    for (const char* bad : {"", "fixed", "fixed:", "fixed:-1", "fixed:abc", "sample:0.5=2", "sample:0.5=2,0.4=1,1=1",
                            "epoch:10.5=2", "epoch:", "sample:0.2=5,", "warp:1", "sample:0.2=5,1.0"}) {
      CHECK_THROWS_AS(parse_gamma_policy(bad), std::invalid_argument);
    }
  }

  TEST_CASE("json round trip") {
    for (const auto& p : {GammaPolicy::fixed(2.5), GammaPolicy::flsd_532(), GammaPolicy::scheduled_531(),
                          derive_threshold_policy({{0.2, 0.2}, {1.0, 0.25}})}) {
      CHECK(gamma_policy_from_json(nlohmann::json::parse(to_json(p).dump())) == p);
    }
    CHECK(to_json(GammaPolicy::fixed(3.0)).dump() == R"({"entries":[[1.0,3.0]],"kind":"fixed"})");
  }
}
