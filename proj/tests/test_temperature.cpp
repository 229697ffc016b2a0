#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "focalcal/numerics.hpp"
#include "focalcal/random.hpp"
#include "focalcal/temperature.hpp"
#include "oracles.hpp"

using namespace focalcal;

namespace {

// Logits z ~ N(0, scale^2); labels drawn from softmax(z / true_t), so the set
// is calibrated at T = true_t in expectation.
LogitSet synthetic_logits(RandomStream& rng, std::size_t n, std::size_t k, double scale, double true_t) {
  std::vector<double> logits;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(k);
    for (auto& v : z) v = rng.normal(0.0, scale);
    const auto p = softmax_t(z, true_t);
    double u = rng.uniform();
    int y = static_cast<int>(k) - 1;
    for (std::size_t j = 0; j < k; ++j) {
      if (u < p[j]) {
        y = static_cast<int>(j);
        break;
      }
      u -= p[j];
    }
    logits.insert(logits.end(), z.begin(), z.end());
    labels.push_back(y);
  }
  return LogitSet(k, std::move(logits), std::move(labels));
}

double naive_nll(const LogitSet& s, double t) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto z = s.row(i);
    double m = z[0] / t;
    for (double v : z) m = std::max(m, v / t);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v / t - m);
    total += m + std::log(sum) - z[s.label(i)] / t;
  }
  return total / static_cast<double>(s.size());
}

}  // namespace

TEST_SUITE("temperature") {
  TEST_CASE("apply_temperature") {
    const LogitSet s(2, {2.0, 0.0, 5.0, 0.0}, {0, 1});
    const auto one = apply_temperature(s, 1.0);
    CHECK(one.row(0)[0] == doctest::Approx(0.8807970779778824).epsilon(1e-15));
    const auto two = apply_temperature(s, 2.0);
    CHECK(two.row(0)[0] == doctest::Approx(0.7310585786300049).epsilon(1e-15));
    CHECK(two.row(0)[1] == doctest::Approx(0.2689414213699951).epsilon(1e-15));
    const auto ten = apply_temperature(s, 10.0);
    CHECK(ten.confidence(1) < one.confidence(1));
    CHECK(ten.confidence(1) > 0.5);
    CHECK(ten.prediction(1) == 0);
    CHECK_THROWS_AS(apply_temperature(s, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(apply_temperature(s, -2.0), std::invalid_argument);
  }

  TEST_CASE("temperature never changes top-k accuracy") {
    RandomStream rng(41);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t k = 2 + rng.uniform_index(9);
      const auto s = synthetic_logits(rng, 50, k, 3.0, 1.0);
      const auto base = apply_temperature(s, 1.0);
      for (double t : {0.1, 0.5, 2.0, 10.0}) {
        const auto e = apply_temperature(s, t);
        for (int kk = 1; kk <= static_cast<int>(k); ++kk) REQUIRE(top_k_accuracy(e, kk) == top_k_accuracy(base, kk));
      }
    }
  }

  TEST_CASE("grid has 100 points from 0.1 to 10") {
    const auto g = temperature_grid();
    REQUIRE(g.size() == 100);
    CHECK(g.front() == 0.1);
    CHECK(g.back() == 10.0);
    const LogitSet s(2, {1.0, 0.0, 0.0, 1.0}, {0, 0});
    CHECK(fit_temperature_ece(s).evaluations == 100);
  }

  TEST_CASE("ece fit equals an oracle sweep") {
    RandomStream rng(42);
    for (double true_t : {1.0, 2.5}) {
      const auto s = synthetic_logits(rng, 3000, 5, 3.0, true_t);
      const auto fit = fit_temperature_ece(s, 15);
      double best_t = 0.0, best = INFINITY;
      for (int i = 1; i <= 100; ++i) {
        const double v = oracle::ece(apply_temperature(s, i / 10.0), 15);
        if (v < best) {
          best = v;
          best_t = i / 10.0;
        }
      }
      CHECK(fit.temperature == best_t);
      CHECK(fit.value == doctest::Approx(best).epsilon(1e-12));
      CHECK(std::abs(fit.temperature - true_t) <= 0.3);
      CHECK(fit.value <= ece(apply_temperature(s, 1.0), 15));
    }
  }

  TEST_CASE("ece fit on an all-correct confident set picks the sharpest temperature") {
    std::vector<double> z;
    for (int i = 0; i < 20; ++i) z.insert(z.end(), {10.0, 0.0});
    const auto fit = fit_temperature_ece(LogitSet(2, z, std::vector<int>(20, 0)));
    CHECK(fit.temperature == 0.1);
  }

  TEST_CASE("ece ties resolve to the smallest temperature") {
    // Every row is a tie (0.5, 0.5) at every T, so ECE is constant on the grid.
    const LogitSet s(2, {3.0, 3.0, -1.0, -1.0}, {0, 1});
    const auto fit = fit_temperature_ece(s);
    CHECK(fit.temperature == 0.1);
    CHECK(fit.value == 0.0);
  }

  TEST_CASE("nll fit boundary cases") {
    std::vector<double> z;
    for (int i = 0; i < 10; ++i) z.insert(z.end(), {8.0, 0.0, 1.0});
    const auto sharp = fit_temperature_nll(LogitSet(3, z, std::vector<int>(10, 0)));
    CHECK(sharp.temperature == kNllMinTemperature);

    const auto flat = fit_temperature_nll(LogitSet(2, {2.0, -1.0, 2.0, -1.0}, {0, 1}));
    CHECK(flat.temperature == kNllMaxTemperature);
    CHECK(flat.criterion == TemperatureCriterion::nll_descent);
  }

  TEST_CASE("nll fit matches a dense scan in log T") {
    RandomStream rng(43);
    const auto s = synthetic_logits(rng, 500, 4, 2.5, 1.7);
    const auto fit = fit_temperature_nll(s);
    double best_t = 0.0, best = INFINITY;
    for (double lt = std::log(0.01); lt <= std::log(100.0) + 1e-12; lt += 0.001) {
      const double v = naive_nll(s, std::exp(lt));
      if (v < best) {
        best = v;
        best_t = std::exp(lt);
      }
    }
    CHECK(std::abs(fit.temperature - best_t) <= 0.01);
    CHECK(fit.value <= best + 1e-9);
  }

  TEST_CASE("fits are deterministic") {
    RandomStream rng(44);
    const auto s = synthetic_logits(rng, 300, 3, 2.0, 2.0);
    CHECK(fit_temperature_ece(s).temperature == fit_temperature_ece(s).temperature);
    CHECK(fit_temperature_nll(s).temperature == fit_temperature_nll(s).temperature);
  }

  TEST_CASE("LogitSet validation") {
    CHECK_THROWS_AS(LogitSet(1, {0.0}, {0}), std::invalid_argument);
    CHECK_THROWS_AS(LogitSet(2, {0.0, 1.0}, {2}), std::invalid_argument);
    CHECK_THROWS_AS(LogitSet(2, {0.0, INFINITY}, {0}), std::invalid_argument);
    CHECK_THROWS_AS(LogitSet(2, {}, {}), std::invalid_argument);
  }
}
