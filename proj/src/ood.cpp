#include "focalcal/ood.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "focalcal/numerics.hpp"

namespace focalcal {

namespace {

void check_populations(const ScoredPopulations& pops) {
  if (pops.in_scores.empty() || pops.out_scores.empty()) throw std::invalid_argument("empty population");
  for (const auto* v : {&pops.in_scores, &pops.out_scores}) {
    for (double s : *v) {
      if (!std::isfinite(s)) throw std::invalid_argument("non-finite score");
    }
  }
}

// Cumulative (false positive, true positive) counts after admitting every
// score >= each distinct threshold, descending, starting from (0, 0).
std::vector<std::pair<std::uint64_t, std::uint64_t>> roc_counts(const ScoredPopulations& pops) {
  check_populations(pops);
  std::vector<std::pair<double, bool>> scored;  // (score, is_out)
  scored.reserve(pops.in_scores.size() + pops.out_scores.size());
  for (double s : pops.in_scores) scored.emplace_back(s, false);
  for (double s : pops.out_scores) scored.emplace_back(s, true);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<std::pair<std::uint64_t, std::uint64_t>> counts{{0, 0}};
  std::uint64_t fp = 0;
  std::uint64_t tp = 0;
  for (std::size_t i = 0; i < scored.size();) {
    const double threshold = scored[i].first;
    for (; i < scored.size() && scored[i].first == threshold; ++i) {
      if (scored[i].second) {
        ++tp;
      } else {
        ++fp;
      }
    }
    counts.emplace_back(fp, tp);
  }
  return counts;
}

}  // namespace

std::vector<double> entropy_scores(const EvalSet& eval) {
  std::vector<double> out(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i) out[i] = entropy(eval.row(i));
  return out;
}

std::vector<RocPoint> roc_curve(const ScoredPopulations& pops) {
  const auto counts = roc_counts(pops);
  const auto negatives = static_cast<double>(pops.in_scores.size());
  const auto positives = static_cast<double>(pops.out_scores.size());
  std::vector<RocPoint> curve;
  curve.reserve(counts.size());
  for (const auto& [fp, tp] : counts) curve.push_back({static_cast<double>(fp) / negatives, static_cast<double>(tp) / positives});
  return curve;
}

double auroc(const ScoredPopulations& pops) {
  const auto counts = roc_counts(pops);
  // Twice the trapezoid area in units of one (negative, positive) pair.
  std::uint64_t twice_area = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    twice_area += (counts[i].first - counts[i - 1].first) * (counts[i].second + counts[i - 1].second);
  }
  const auto pairs = static_cast<double>(pops.in_scores.size()) * static_cast<double>(pops.out_scores.size());
  return static_cast<double>(twice_area) / (2.0 * pairs);
}

void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& curve) {
  out << "fpr,tpr\n";
  const auto old_precision = out.precision(17);
  for (const auto& p : curve) out << p.fpr << ',' << p.tpr << '\n';
  out.precision(old_precision);
}

}  // namespace focalcal
