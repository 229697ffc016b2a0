#include "focalcal/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace focalcal {

void check_probabilities(std::span<const double> p) {
  if (p.size() < 2) throw std::invalid_argument("probability vector needs at least two classes");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("probability entry outside [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

ProbVector::ProbVector(std::vector<double> entries) : entries_(std::move(entries)) {
  check_probabilities(entries_);
}

ProbVector ProbVector::one_hot(std::size_t classes, std::size_t label) {
  if (label >= classes) throw std::invalid_argument("one_hot: label out of range");
  std::vector<double> v(classes, 0.0);
  v[label] = 1.0;
  return ProbVector(std::move(v));
}

ProbVector ProbVector::uniform(std::size_t classes) {
  if (classes == 0) throw std::invalid_argument("uniform: no classes");
  return ProbVector(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

std::size_t ProbVector::argmax() const {
  return static_cast<std::size_t>(std::max_element(entries_.begin(), entries_.end()) - entries_.begin());
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("empty vector");
  const double top = *std::max_element(values.begin(), values.end());
  if (values.size() == 1) return top;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

void softmax_into(std::span<const double> logits, double temperature, std::span<double> out) {
  const double inv_t = 1.0 / temperature;
  double top = -std::numeric_limits<double>::infinity();
  for (double z : logits) top = std::max(top, z);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - top) * inv_t);
    total += out[i];
  }
  for (double& v : out) v /= total;
}

ProbVector softmax_t(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("non-positive temperature");
  if (logits.size() < 2) throw std::invalid_argument("softmax needs at least two logits");
  for (double z : logits) {
    if (!std::isfinite(z)) throw std::invalid_argument("non-finite logit");
  }
  std::vector<double> out(logits.size());
  softmax_into(logits, temperature, out);
  return ProbVector(std::move(out));
}

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return std::max(h, 0.0);
}

double entropy(const ProbVector& p) { return entropy(p.values()); }

namespace {

constexpr double kInvE = 0.36787944117144232159552377016146;  // 1/e
constexpr int kMaxLambertIterations = 50;

// W near the branch point x = -1/e, where p = +-sqrt(2(e x + 1)).
// Positive p gives the principal branch, negative p the lower one.
double branch_point_series(double p) {
  return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p - 43.0 / 540.0 * p * p * p * p;
}

double lambert_initial(LambertBranch branch, double x) {
  const double root_arg = std::max(0.0, 2.0 * (std::numbers::e * x + 1.0));
  if (branch == LambertBranch::principal) {
    if (x < -0.25) return branch_point_series(std::sqrt(root_arg));
    if (x < 3.0) {
      // Winitzki's approximation, good to a few percent on this range.
      const double l = std::log1p(x);
      return l * (1.0 - std::log1p(l) / (2.0 + l));
    }
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    return l1 - l2 + l2 / l1;
  }
  if (x < -0.25) return branch_point_series(-std::sqrt(root_arg));
  const double l1 = std::log(-x);
  const double l2 = std::log(-l1);
  return l1 - l2 + l2 / l1;
}

}  // namespace

double lambert_w(LambertBranch branch, double x) {
  const bool principal = branch == LambertBranch::principal;
  if (std::isnan(x) || x < -kInvE || (!principal && x >= 0.0) || (principal && std::isinf(x))) {
    throw std::domain_error("Lambert-W domain");
  }
  if (x == -kInvE) return -1.0;
  if (principal && x == 0.0) return 0.0;

  double w = lambert_initial(branch, x);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int it = 0; it < kMaxLambertIterations; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= 2.0 * eps * std::abs(x)) return w;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) return w;
    // Halley step.
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    double next = w - step;
    // Keep the iterate on its branch: an overshoot past -1 is replaced by
    // the midpoint towards the branch point.
    if ((principal && next < -1.0) || (!principal && next > -1.0)) next = 0.5 * (w - 1.0);
    if (std::abs(next - w) <= 4.0 * eps * std::abs(next)) return next;
    w = next;
  }
  throw std::runtime_error("Lambert-W: no convergence at x = " + std::to_string(x));
}

double minimize_1d(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw std::invalid_argument("minimize_1d: need lo < hi");
  if (!(tol > 0.0)) throw std::invalid_argument("minimize_1d: tolerance must be positive");

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double best = 0.5 * (a + b);
  double f_best = f(best);
  // Flat stretches resolve to the lower end.
  if (const double f_lo = f(lo); f_lo <= f_best) {
    best = lo;
    f_best = f_lo;
  }
  if (const double f_hi = f(hi); f_hi < f_best) best = hi;
  return best;
}

}  // namespace focalcal
