#pragma once

#include <ostream>
#include <vector>

#include "focalcal/metrics.hpp"

namespace focalcal {

/// Scores for in-distribution and out-of-distribution samples, where a
/// higher score means "more likely OoD". OoD is the positive class.
struct ScoredPopulations {
  std::vector<double> in_scores;
  std::vector<double> out_scores;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Softmax entropy (nats) of each row.
std::vector<double> entropy_scores(const EvalSet& eval);

/// ROC curve with one threshold per distinct score, descending. Starts at
/// (0, 0) and ends at (1, 1); tied in/out scores give diagonal segments.
std::vector<RocPoint> roc_curve(const ScoredPopulations& pops);

/// Trapezoidal area under roc_curve. Accumulated in integer pair counts, so
/// it equals the Mann-Whitney statistic with half credit for ties exactly.
double auroc(const ScoredPopulations& pops);

/// CSV with header `fpr,tpr`.
void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& curve);

}  // namespace focalcal
