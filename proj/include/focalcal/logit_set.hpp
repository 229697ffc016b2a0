#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace focalcal {

/// N x K raw logits (row-major) with integer labels in [0, K).
/// Validated at construction: K >= 2, N >= 1, finite logits.
class LogitSet {
public:
  LogitSet(std::size_t classes, std::vector<double> logits, std::vector<int> labels);

  std::size_t size() const { return labels_.size(); }
  std::size_t classes() const { return classes_; }
  std::span<const double> row(std::size_t i) const { return {logits_.data() + i * classes_, classes_}; }
  int label(std::size_t i) const { return labels_[i]; }

  const std::vector<double>& logits() const { return logits_; }
  const std::vector<int>& labels() const { return labels_; }

  bool operator==(const LogitSet&) const = default;

private:
  std::size_t classes_;
  std::vector<double> logits_;
  std::vector<int> labels_;
};

}  // namespace focalcal
