#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

namespace focalcal {

/// Default number of confidence bins for the calibration errors.
inline constexpr int kDefaultBins = 15;

/// N x K row-stochastic predictions with integer labels in [0, K).
class EvalSet {
public:
  /// `probs` is row-major N x K. Every row must be a valid probability
  /// vector; throws std::invalid_argument otherwise.
  EvalSet(std::size_t classes, std::vector<double> probs, std::vector<int> labels);

  std::size_t size() const { return labels_.size(); }
  std::size_t classes() const { return classes_; }

  std::span<const double> row(std::size_t i) const { return {probs_.data() + i * classes_, classes_}; }
  int label(std::size_t i) const { return labels_[i]; }
  /// argmax of row i, ties to the lowest class index.
  std::size_t prediction(std::size_t i) const { return predictions_[i]; }
  double confidence(std::size_t i) const { return row(i)[predictions_[i]]; }
  bool correct(std::size_t i) const { return static_cast<int>(predictions_[i]) == labels_[i]; }

  std::vector<double> confidences() const;
  /// 1.0 where the prediction is correct, else 0.0.
  std::vector<double> hits() const;

  /// Rows picked by `indices`, in order, duplicates allowed.
  EvalSet subset(std::span<const std::size_t> indices) const;

  const std::vector<double>& probs() const { return probs_; }
  const std::vector<int>& labels() const { return labels_; }

private:
  struct Trusted {};
  EvalSet(Trusted, std::size_t classes, std::vector<double> probs, std::vector<int> labels);
  void index_predictions();

  std::size_t classes_;
  std::vector<double> probs_;
  std::vector<int> labels_;
  std::vector<std::size_t> predictions_;
};

/// A confidence bin: the interval (lo, hi] and the sample indices in it.
struct Bin {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> members;
};

struct BinStats {
  int index = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double accuracy = 0.0;    // 0 for empty bins
  double confidence = 0.0;  // 0 for empty bins
};

/// Bin i (1-based) holds confidences in ((i-1)/M, i/M]; a confidence of
/// exactly 0 goes to the first bin. Throws for M <= 0 or values outside [0, 1].
std::vector<Bin> bin_equal_width(std::span<const double> conf, int bins);

/// Stable-sorts confidences ascending and cuts them into M contiguous groups
/// of floor(N/M) samples, giving one extra to each of the N mod M
/// lowest-confidence groups. Throws "more bins than samples" when M > N.
std::vector<Bin> bin_equal_mass(std::span<const double> conf, int bins);

/// Per-bin accuracy and mean confidence. `hits` holds the 0/1 outcomes.
std::vector<BinStats> summarize_bins(const std::vector<Bin>& bins, std::span<const double> conf,
                                     std::span<const double> hits);

double ece(const EvalSet& eval, int bins = kDefaultBins);
double adaece(const EvalSet& eval, int bins = kDefaultBins);
double classwise_ece(const EvalSet& eval, int bins = kDefaultBins);
/// Largest |A_i - C_i| over nonempty equal-width bins.
double mce(const EvalSet& eval, int bins = kDefaultBins);
double nll(const EvalSet& eval);
/// Mean over samples of the squared distance to the one-hot label.
double brier_score(const EvalSet& eval);
/// Fraction of samples whose label is among the k most probable classes.
double top_k_accuracy(const EvalSet& eval, int k);

struct ReliabilityRow {
  BinStats stats;
  double pct_samples = 0.0;
};

std::vector<ReliabilityRow> reliability_data(const EvalSet& eval, int bins = kDefaultBins);

/// CSV with header `bin_lo,bin_hi,count,accuracy,confidence,pct_samples`.
void write_reliability_csv(std::ostream& out, const std::vector<ReliabilityRow>& rows);

enum class Metric { ece, adaece, classwise_ece, mce, nll, brier, top1_error, top5_error };

inline constexpr Metric kAllMetrics[] = {Metric::ece, Metric::adaece,     Metric::classwise_ece, Metric::mce,
                                         Metric::nll, Metric::brier,      Metric::top1_error,    Metric::top5_error};

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

/// Evaluates one metric. AdaECE uses min(bins, N) bins so it is defined on
/// tiny sets; top-5 error uses min(5, K).
double evaluate_metric(const EvalSet& eval, Metric metric, int bins = kDefaultBins);

using MetricValues = std::map<Metric, double>;
MetricValues evaluate_all(const EvalSet& eval, int bins = kDefaultBins);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double point = 0.0;
  double level = 0.0;
};

/// Empirical quantile of sorted data by linear interpolation between order
/// statistics (position (n - 1) q).
double quantile_sorted(std::span<const double> sorted, double q);

/// Percentile bootstrap. Replicate r resamples N rows (probabilities and
/// labels together) with replacement from RandomStream(seed, r), so the
/// result does not depend on evaluation order. The interval is the
/// ((1 - level)/2, (1 + level)/2) quantile pair of the replicate values.
Interval bootstrap_ci(const EvalSet& eval, Metric metric, int bins, int replicates, double level,
                      std::uint64_t seed);

/// bootstrap_ci for every metric, sharing the resamples.
std::map<Metric, Interval> bootstrap_all(const EvalSet& eval, int bins, int replicates, double level,
                                         std::uint64_t seed);

}  // namespace focalcal
