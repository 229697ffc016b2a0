#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace focalcal {

enum class GammaPolicyKind { fixed, sample_thresholds, epoch_schedule };

/// Rule that picks the focal-loss gamma for a sample.
///
/// - fixed: one gamma for everything.
/// - sample_thresholds: entries (upper bound, gamma) with strictly increasing
///   bounds ending at 1. Interval i is [bound_{i-1}, bound_i) with the first
///   starting at 0 and the last closed at 1.
/// - epoch_schedule: entries (last epoch, gamma) with strictly increasing
///   epochs. Epochs are 1-based; epochs past the final boundary keep the
///   final gamma.
///
/// Policies are immutable and validated at construction.
class GammaPolicy {
public:
  using Entry = std::pair<double, double>;

  static GammaPolicy fixed(double gamma);
  static GammaPolicy sample_thresholds(std::vector<Entry> entries);
  static GammaPolicy epoch_schedule(std::vector<Entry> entries);

  /// gamma = 5 on [0, 0.2), 3 on [0.2, 1].
  static GammaPolicy flsd_53();
  /// gamma = 5 on [0, 0.2), 3 on [0.2, 0.5), 2 on [0.5, 1].
  static GammaPolicy flsd_532();
  /// gamma = 5, 3, 1 over epochs 1-100, 101-250, 251-350.
  static GammaPolicy scheduled_531();
  /// gamma = 5, 3, 2 over epochs 1-100, 101-250, 251-350.
  static GammaPolicy scheduled_532();

  GammaPolicyKind kind() const { return kind_; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// gamma for a sample whose true-class probability is `p_true` at the
  /// given (1-based) epoch.
  double gamma_for(double p_true, int epoch) const;

  bool operator==(const GammaPolicy&) const = default;

private:
  GammaPolicy(GammaPolicyKind kind, std::vector<Entry> entries);

  GammaPolicyKind kind_;
  std::vector<Entry> entries_;
};

inline double gamma_for_sample(const GammaPolicy& policy, double p_true, int epoch) {
  return policy.gamma_for(p_true, epoch);
}

/// Smallest gamma with g(p, gamma) <= 1 for every p in [p0, 1], from the
/// closed form through the lower Lambert-W branch. Returns 0 for p0 >= 0.5,
/// where every positive gamma already satisfies the bound. The result is
/// checked against g before returning.
double gamma_star(double p0);

/// Builds a sample_thresholds policy from (threshold, p0) cut points, with
/// each interval's gamma set to gamma_star(p0) at full precision.
GammaPolicy derive_threshold_policy(const std::vector<std::pair<double, double>>& cuts);

/// Parses the command-line grammar `fixed:3`, `sample:0.2=5,1.0=3`,
/// `epoch:100=5,250=3,350=2`, or one of the names `flsd-53`, `flsd-532`,
/// `flsc-531`, `flsc-532`.
GammaPolicy parse_gamma_policy(std::string_view spec);

/// Parses "a=b,c=d" into pairs.
std::vector<std::pair<double, double>> parse_pairs(std::string_view text);

std::string_view kind_name(GammaPolicyKind kind);

nlohmann::json to_json(const GammaPolicy& policy);
GammaPolicy gamma_policy_from_json(const nlohmann::json& j);

}  // namespace focalcal
