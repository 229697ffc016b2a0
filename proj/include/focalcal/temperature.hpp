#pragma once

#include <string_view>
#include <vector>

#include "focalcal/logit_set.hpp"
#include "focalcal/metrics.hpp"

namespace focalcal {

enum class TemperatureCriterion { ece_grid, nll_descent };

std::string_view criterion_name(TemperatureCriterion c);

struct TemperatureFit {
  double temperature = 1.0;
  TemperatureCriterion criterion = TemperatureCriterion::ece_grid;
  /// Criterion value at the fitted temperature.
  double value = 0.0;
  /// Number of temperatures evaluated.
  int evaluations = 0;
};

/// Row-wise softmax(z / T). Throws for T <= 0 ("non-positive temperature").
EvalSet apply_temperature(const LogitSet& logits, double temperature);

/// The ECE search grid 0.1, 0.2, ..., 10.0 (T = 0 is undefined).
std::vector<double> temperature_grid();

/// Grid search for the ECE-minimizing temperature on a validation set.
/// Ties resolve to the smallest temperature.
TemperatureFit fit_temperature_ece(const LogitSet& val, int bins = kDefaultBins);

inline constexpr double kNllMinTemperature = 0.01;
inline constexpr double kNllMaxTemperature = 100.0;

/// Golden-section search on log T over [0.01, 100] for the NLL-minimizing
/// temperature. Never returns a temperature whose NLL exceeds the NLL at T = 1.
TemperatureFit fit_temperature_nll(const LogitSet& val);

}  // namespace focalcal
