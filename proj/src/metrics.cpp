#include "focalcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "focalcal/numerics.hpp"
#include "focalcal/random.hpp"

namespace focalcal {

// ---------------------------------------------------------------------------
// EvalSet

EvalSet::EvalSet(std::size_t classes, std::vector<double> probs, std::vector<int> labels)
    : classes_(classes), probs_(std::move(probs)), labels_(std::move(labels)) {
  if (classes_ < 2) throw std::invalid_argument("EvalSet needs at least two classes");
  if (labels_.empty()) throw std::invalid_argument("EvalSet needs at least one sample");
  if (probs_.size() != labels_.size() * classes_) throw std::invalid_argument("EvalSet: probability matrix shape mismatch");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= classes_) {
      throw std::invalid_argument("EvalSet: label out of range at row " + std::to_string(i));
    }
    check_probabilities(row(i));
  }
  index_predictions();
}

EvalSet::EvalSet(Trusted, std::size_t classes, std::vector<double> probs, std::vector<int> labels)
    : classes_(classes), probs_(std::move(probs)), labels_(std::move(labels)) {
  index_predictions();
}

void EvalSet::index_predictions() {
  predictions_.resize(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto r = row(i);
    predictions_[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
}

std::vector<double> EvalSet::confidences() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = confidence(i);
  return out;
}

std::vector<double> EvalSet::hits() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = correct(i) ? 1.0 : 0.0;
  return out;
}

EvalSet EvalSet::subset(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw std::invalid_argument("EvalSet::subset: no rows");
  std::vector<double> probs;
  probs.reserve(indices.size() * classes_);
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (std::size_t idx : indices) {
    const auto r = row(idx);
    probs.insert(probs.end(), r.begin(), r.end());
    labels.push_back(labels_[idx]);
  }
  return EvalSet(Trusted{}, classes_, std::move(probs), std::move(labels));
}

// ---------------------------------------------------------------------------
// Binning

namespace {

void check_bins(int bins) {
  if (bins <= 0) throw std::invalid_argument("number of bins must be positive");
}

void check_confidences(std::span<const double> conf) {
  for (double c : conf) {
    if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("confidence outside [0, 1]");
  }
}

double boundary(int i, int bins) { return static_cast<double>(i) / static_cast<double>(bins); }

// 0-based bin with boundary(i) < c <= boundary(i + 1); c == 0 maps to 0.
int width_bin(double c, int bins) {
  if (c <= 0.0) return 0;
  int idx = static_cast<int>(std::ceil(c * bins)) - 1;
  idx = std::clamp(idx, 0, bins - 1);
  // ceil(c * M) can be off by one when c * M rounds across an integer.
  while (idx > 0 && c <= boundary(idx, bins)) --idx;
  while (idx < bins - 1 && c > boundary(idx + 1, bins)) ++idx;
  return idx;
}

double weighted_gap(const std::vector<BinStats>& stats, std::size_t n) {
  double total = 0.0;
  for (const auto& s : stats) {
    if (s.count > 0) total += static_cast<double>(s.count) / static_cast<double>(n) * std::abs(s.accuracy - s.confidence);
  }
  return total;
}

}  // namespace

std::vector<Bin> bin_equal_width(std::span<const double> conf, int bins) {
  check_bins(bins);
  check_confidences(conf);
  std::vector<Bin> out(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i) {
    out[i].lo = boundary(i, bins);
    out[i].hi = boundary(i + 1, bins);
  }
  for (std::size_t j = 0; j < conf.size(); ++j) out[width_bin(conf[j], bins)].members.push_back(j);
  return out;
}

std::vector<Bin> bin_equal_mass(std::span<const double> conf, int bins) {
  check_bins(bins);
  check_confidences(conf);
  const std::size_t n = conf.size();
  if (static_cast<std::size_t>(bins) > n) throw std::invalid_argument("more bins than samples");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return conf[a] < conf[b]; });

  const std::size_t base = n / bins;
  const std::size_t extra = n % bins;
  std::vector<Bin> out(static_cast<std::size_t>(bins));
  std::size_t pos = 0;
  double previous = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t size = base + (i < extra ? 1 : 0);
    out[i].members.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                          order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
    out[i].lo = previous;
    out[i].hi = conf[out[i].members.back()];
    previous = out[i].hi;
  }
  return out;
}

std::vector<BinStats> summarize_bins(const std::vector<Bin>& bins, std::span<const double> conf,
                                     std::span<const double> hits) {
  if (conf.size() != hits.size()) throw std::invalid_argument("summarize_bins: size mismatch");
  std::vector<BinStats> out;
  out.reserve(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i) {
    BinStats s;
    s.index = static_cast<int>(i) + 1;
    s.lo = bins[i].lo;
    s.hi = bins[i].hi;
    s.count = bins[i].members.size();
    if (s.count > 0) {
      double acc = 0.0;
      double c = 0.0;
      for (std::size_t j : bins[i].members) {
        acc += hits[j];
        c += conf[j];
      }
      s.accuracy = acc / static_cast<double>(s.count);
      s.confidence = c / static_cast<double>(s.count);
    }
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

double ece(const EvalSet& eval, int bins) {
  const auto conf = eval.confidences();
  const auto hits = eval.hits();
  return weighted_gap(summarize_bins(bin_equal_width(conf, bins), conf, hits), eval.size());
}

double adaece(const EvalSet& eval, int bins) {
  const auto conf = eval.confidences();
  const auto hits = eval.hits();
  return weighted_gap(summarize_bins(bin_equal_mass(conf, bins), conf, hits), eval.size());
}

double classwise_ece(const EvalSet& eval, int bins) {
  const std::size_t n = eval.size();
  const std::size_t k = eval.classes();
  std::vector<double> conf(n);
  std::vector<double> hits(n);
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      conf[i] = eval.row(i)[j];
      hits[i] = eval.label(i) == static_cast<int>(j) ? 1.0 : 0.0;
    }
    total += weighted_gap(summarize_bins(bin_equal_width(conf, bins), conf, hits), n);
  }
  return total / static_cast<double>(k);
}

double mce(const EvalSet& eval, int bins) {
  const auto conf = eval.confidences();
  const auto hits = eval.hits();
  double worst = 0.0;
  for (const auto& s : summarize_bins(bin_equal_width(conf, bins), conf, hits)) {
    if (s.count > 0) worst = std::max(worst, std::abs(s.accuracy - s.confidence));
  }
  return worst;
}

double nll(const EvalSet& eval) {
  double total = 0.0;
  for (std::size_t i = 0; i < eval.size(); ++i) total -= safe_log(eval.row(i)[eval.label(i)]);
  return total / static_cast<double>(eval.size());
}

double brier_score(const EvalSet& eval) {
  double total = 0.0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto r = eval.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double d = r[j] - (static_cast<int>(j) == eval.label(i) ? 1.0 : 0.0);
      total += d * d;
    }
  }
  return total / static_cast<double>(eval.size());
}

double top_k_accuracy(const EvalSet& eval, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > eval.classes()) throw std::invalid_argument("top-k: k out of range");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto r = eval.row(i);
    const auto y = static_cast<std::size_t>(eval.label(i));
    // Rank of the label with ties going to the lower class index.
    std::size_t rank = 0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] > r[y] || (r[j] == r[y] && j < y)) ++rank;
    }
    if (rank < static_cast<std::size_t>(k)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(eval.size());
}

std::vector<ReliabilityRow> reliability_data(const EvalSet& eval, int bins) {
  const auto conf = eval.confidences();
  const auto hits = eval.hits();
  std::vector<ReliabilityRow> rows;
  for (const auto& s : summarize_bins(bin_equal_width(conf, bins), conf, hits)) {
    rows.push_back({s, 100.0 * static_cast<double>(s.count) / static_cast<double>(eval.size())});
  }
  return rows;
}

void write_reliability_csv(std::ostream& out, const std::vector<ReliabilityRow>& rows) {
  out << "bin_lo,bin_hi,count,accuracy,confidence,pct_samples\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : rows) {
    out << r.stats.lo << ',' << r.stats.hi << ',' << r.stats.count << ',' << r.stats.accuracy << ','
        << r.stats.confidence << ',' << r.pct_samples << '\n';
  }
  out.precision(old_precision);
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::ece: return "ece";
    case Metric::adaece: return "adaece";
    case Metric::classwise_ece: return "classwise_ece";
    case Metric::mce: return "mce";
    case Metric::nll: return "nll";
    case Metric::brier: return "brier";
    case Metric::top1_error: return "top1_error";
    case Metric::top5_error: return "top5_error";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  for (Metric m : kAllMetrics) {
    if (metric_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

double evaluate_metric(const EvalSet& eval, Metric metric, int bins) {
  switch (metric) {
    case Metric::ece: return ece(eval, bins);
    case Metric::adaece: return adaece(eval, std::min(bins, static_cast<int>(eval.size())));
    case Metric::classwise_ece: return classwise_ece(eval, bins);
    case Metric::mce: return mce(eval, bins);
    case Metric::nll: return nll(eval);
    case Metric::brier: return brier_score(eval);
    case Metric::top1_error: return 1.0 - top_k_accuracy(eval, 1);
    case Metric::top5_error: return 1.0 - top_k_accuracy(eval, static_cast<int>(std::min<std::size_t>(5, eval.classes())));
  }
  throw std::invalid_argument("unknown metric");
}

MetricValues evaluate_all(const EvalSet& eval, int bins) {
  MetricValues out;
  for (Metric m : kAllMetrics) out[m] = evaluate_metric(eval, m, bins);
  return out;
}

// ---------------------------------------------------------------------------
// Bootstrap

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

void check_bootstrap_args(int replicates, double level) {
  if (replicates < 1) throw std::invalid_argument("bootstrap needs at least one replicate");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap level must lie in (0, 1)");
}

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, int replicate) {
  RandomStream stream(seed, static_cast<std::uint64_t>(replicate));
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(stream.uniform_index(n));
  return idx;
}

Interval make_interval(std::vector<double> values, double point, double level) {
  std::sort(values.begin(), values.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(values, tail), quantile_sorted(values, 1.0 - tail), point, level};
}

}  // namespace

Interval bootstrap_ci(const EvalSet& eval, Metric metric, int bins, int replicates, double level,
                      std::uint64_t seed) {
  check_bootstrap_args(replicates, level);
  std::vector<double> values(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    const auto idx = resample_indices(eval.size(), seed, r);
    values[r] = evaluate_metric(eval.subset(idx), metric, bins);
  }
  return make_interval(std::move(values), evaluate_metric(eval, metric, bins), level);
}

std::map<Metric, Interval> bootstrap_all(const EvalSet& eval, int bins, int replicates, double level,
                                         std::uint64_t seed) {
  check_bootstrap_args(replicates, level);
  std::map<Metric, std::vector<double>> values;
  for (int r = 0; r < replicates; ++r) {
    const auto idx = resample_indices(eval.size(), seed, r);
    const EvalSet sample = eval.subset(idx);
    for (Metric m : kAllMetrics) values[m].push_back(evaluate_metric(sample, m, bins));
  }
  std::map<Metric, Interval> out;
  for (Metric m : kAllMetrics) out[m] = make_interval(std::move(values[m]), evaluate_metric(eval, m, bins), level);
  return out;
}

}  // namespace focalcal
