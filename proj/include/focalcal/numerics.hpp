#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace focalcal {

/// Floor applied to probabilities before taking a log.
inline constexpr double kProbFloor = 1e-12;

/// Tolerance on |sum - 1| accepted for a probability vector.
inline constexpr double kSumTolerance = 1e-9;

/// A probability distribution over K >= 2 classes.
///
/// Construction validates the invariants (entries in [0, 1], sum within
/// kSumTolerance of 1) and throws std::invalid_argument otherwise, so any
/// ProbVector in hand is well formed.
class ProbVector {
public:
  explicit ProbVector(std::vector<double> entries);

  static ProbVector one_hot(std::size_t classes, std::size_t label);
  static ProbVector uniform(std::size_t classes);

  std::size_t size() const { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> values() const { return entries_; }

  /// Index of the largest entry; ties go to the lowest index.
  std::size_t argmax() const;
  double max() const { return entries_[argmax()]; }

private:
  std::vector<double> entries_;
};

/// Validates the ProbVector invariants on raw storage without copying.
void check_probabilities(std::span<const double> p);

/// log(sum(exp(v))) with max-shift. Throws on empty input.
double log_sum_exp(std::span<const double> values);

/// Softmax of logits / T. Throws for T <= 0 or fewer than two logits.
ProbVector softmax_t(std::span<const double> logits, double temperature = 1.0);

/// Writes softmax(logits / T) into `out` (same size as logits). No checks
/// beyond sizes; hot loops use this form.
void softmax_into(std::span<const double> logits, double temperature, std::span<double> out);

/// Shannon entropy in nats with 0 log 0 = 0.
double entropy(const ProbVector& p);
double entropy(std::span<const double> p);

/// log(max(p, kProbFloor)).
double safe_log(double p);

enum class LambertBranch { principal, negative };

/// Real Lambert W on the principal branch (x >= -1/e, W >= -1) or the
/// negative branch (-1/e <= x < 0, W <= -1). Throws std::domain_error with
/// "Lambert-W domain" outside the branch domain.
double lambert_w(LambertBranch branch, double x);

/// Golden-section search for the minimum of a unimodal f on [lo, hi].
/// The returned point is within `tol` of the minimizer. Endpoint values are
/// compared at the end so boundary minima are returned exactly; a tie with
/// the lower endpoint returns `lo`.
double minimize_1d(const std::function<double(double)>& f, double lo, double hi, double tol);

}  // namespace focalcal
