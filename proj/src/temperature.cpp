#include "focalcal/temperature.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "focalcal/numerics.hpp"

namespace focalcal {

LogitSet::LogitSet(std::size_t classes, std::vector<double> logits, std::vector<int> labels)
    : classes_(classes), logits_(std::move(logits)), labels_(std::move(labels)) {
  if (classes_ < 2) throw std::invalid_argument("LogitSet needs at least two classes");
  if (labels_.empty()) throw std::invalid_argument("LogitSet needs at least one sample");
  if (logits_.size() != labels_.size() * classes_) throw std::invalid_argument("LogitSet: logit matrix shape mismatch");
  for (double z : logits_) {
    if (!std::isfinite(z)) throw std::invalid_argument("LogitSet: non-finite logit");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= classes_) {
      throw std::invalid_argument("LogitSet: label out of range at row " + std::to_string(i));
    }
  }
}

std::string_view criterion_name(TemperatureCriterion c) {
  return c == TemperatureCriterion::ece_grid ? "ece" : "nll";
}

EvalSet apply_temperature(const LogitSet& logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw std::invalid_argument("non-positive temperature");
  const std::size_t k = logits.classes();
  std::vector<double> probs(logits.size() * k);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    softmax_into(logits.row(i), temperature, std::span<double>(probs.data() + i * k, k));
  }
  return EvalSet(k, std::move(probs), logits.labels());
}

std::vector<double> temperature_grid() {
  std::vector<double> grid;
  grid.reserve(100);
  for (int i = 1; i <= 100; ++i) grid.push_back(static_cast<double>(i) / 10.0);
  return grid;
}

TemperatureFit fit_temperature_ece(const LogitSet& val, int bins) {
  TemperatureFit fit;
  fit.criterion = TemperatureCriterion::ece_grid;
  bool first = true;
  for (double t : temperature_grid()) {
    const double value = ece(apply_temperature(val, t), bins);
    ++fit.evaluations;
    if (first || value < fit.value) {
      fit.temperature = t;
      fit.value = value;
      first = false;
    }
  }
  return fit;
}

TemperatureFit fit_temperature_nll(const LogitSet& val) {
  TemperatureFit fit;
  fit.criterion = TemperatureCriterion::nll_descent;
  auto objective = [&](double log_t) {
    ++fit.evaluations;
    return nll(apply_temperature(val, std::exp(log_t)));
  };
  const double lo = std::log(kNllMinTemperature);
  const double hi = std::log(kNllMaxTemperature);
  const double best = minimize_1d(objective, lo, hi, 1e-7);
  // Report the bounds exactly instead of exp(log(bound)).
  fit.temperature = best == lo ? kNllMinTemperature : best == hi ? kNllMaxTemperature : std::exp(best);
  fit.value = nll(apply_temperature(val, fit.temperature));
  if (const double at_one = nll(apply_temperature(val, 1.0)); at_one < fit.value) {
    fit.temperature = 1.0;
    fit.value = at_one;
  }
  return fit;
}

}  // namespace focalcal
