#include "focalcal/gamma_policy.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

#include "focalcal/losses.hpp"
#include "focalcal/numerics.hpp"

namespace focalcal {

namespace {

void require_gamma_value(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma policy: gamma must be >= 0");
}

double parse_number(std::string_view text) {
  // from_chars rejects a leading '+', which is harmless to accept here.
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("invalid number '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

GammaPolicy::GammaPolicy(GammaPolicyKind kind, std::vector<Entry> entries)
    : kind_(kind), entries_(std::move(entries)) {}

GammaPolicy GammaPolicy::fixed(double gamma) {
  require_gamma_value(gamma);
  return GammaPolicy(GammaPolicyKind::fixed, {{1.0, gamma}});
}

GammaPolicy GammaPolicy::sample_thresholds(std::vector<Entry> entries) {
  if (entries.empty()) throw std::invalid_argument("gamma policy: no thresholds");
  double previous = 0.0;
  for (const auto& [bound, gamma] : entries) {
    if (!(bound > previous)) throw std::invalid_argument("gamma policy: thresholds must increase strictly within (0, 1]");
    require_gamma_value(gamma);
    previous = bound;
  }
  if (entries.back().first != 1.0) throw std::invalid_argument("gamma policy: final threshold must be 1");
  return GammaPolicy(GammaPolicyKind::sample_thresholds, std::move(entries));
}

GammaPolicy GammaPolicy::epoch_schedule(std::vector<Entry> entries) {
  if (entries.empty()) throw std::invalid_argument("gamma policy: empty epoch schedule");
  double previous = 0.0;
  for (const auto& [last_epoch, gamma] : entries) {
    if (last_epoch != std::floor(last_epoch) || !(last_epoch > previous)) {
      throw std::invalid_argument("gamma policy: epoch boundaries must be increasing positive integers");
    }
    require_gamma_value(gamma);
    previous = last_epoch;
  }
  return GammaPolicy(GammaPolicyKind::epoch_schedule, std::move(entries));
}

GammaPolicy GammaPolicy::flsd_53() { return sample_thresholds({{0.2, 5.0}, {1.0, 3.0}}); }
GammaPolicy GammaPolicy::flsd_532() { return sample_thresholds({{0.2, 5.0}, {0.5, 3.0}, {1.0, 2.0}}); }
GammaPolicy GammaPolicy::scheduled_531() { return epoch_schedule({{100, 5.0}, {250, 3.0}, {350, 1.0}}); }
GammaPolicy GammaPolicy::scheduled_532() { return epoch_schedule({{100, 5.0}, {250, 3.0}, {350, 2.0}}); }

double GammaPolicy::gamma_for(double p_true, int epoch) const {
  switch (kind_) {
    case GammaPolicyKind::fixed:
      return entries_.front().second;
    case GammaPolicyKind::sample_thresholds:
      for (const auto& [bound, gamma] : entries_) {
        if (p_true < bound) return gamma;
      }
      return entries_.back().second;
    case GammaPolicyKind::epoch_schedule:
      for (const auto& [last_epoch, gamma] : entries_) {
        if (static_cast<double>(epoch) <= last_epoch) return gamma;
      }
      return entries_.back().second;
  }
  return entries_.back().second;
}

double gamma_star(double p0) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::domain_error("gamma_star: p0 must lie in (0, 1)");
  const double a = 1.0 - p0;
  const double b = p0 * std::log(p0);
  const double log_a = std::log(a);
  const double ratio = a / b;
  double arg = -std::exp((1.0 - ratio) * log_a) / b * log_a;

  // The argument bottoms out at -1/e (p0 = 0.5); rounding can push it just past.
  constexpr double kBranchPoint = -0.36787944117144232159552377016146;
  if (arg < kBranchPoint) {
    if (arg < kBranchPoint - 1e-12) throw std::domain_error("gamma_star: outside branch domain");
    arg = kBranchPoint;
  }
  double gamma = ratio + lambert_w(LambertBranch::negative, arg) / log_a;
  if (gamma < 1e-12) gamma = 0.0;

  if (gamma > 0.0) {
    if (std::abs(g_ratio(p0, gamma) - 1.0) > 1e-6) {
      throw std::runtime_error("gamma_star: g(p0, gamma*) != 1 for p0 = " + std::to_string(p0));
    }
    constexpr int kChecks = 200;
    for (int i = 1; i <= kChecks; ++i) {
      const double p = p0 + (1.0 - p0) * i / kChecks;
      if (!(g_ratio(p, gamma) < 1.0)) {
        throw std::runtime_error("gamma_star: g(p, gamma*) >= 1 above p0 = " + std::to_string(p0));
      }
    }
  }
  return gamma;
}

GammaPolicy derive_threshold_policy(const std::vector<std::pair<double, double>>& cuts) {
  if (cuts.empty()) throw std::invalid_argument("derive_threshold_policy: no cut points");
  std::vector<GammaPolicy::Entry> entries;
  entries.reserve(cuts.size());
  for (const auto& [threshold, p0] : cuts) entries.emplace_back(threshold, gamma_star(p0));
  return GammaPolicy::sample_thresholds(std::move(entries));
}

std::vector<std::pair<double, double>> parse_pairs(std::string_view text) {
  std::vector<std::pair<double, double>> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("expected key=value, got '" + std::string(item) + "'");
    out.emplace_back(parse_number(item.substr(0, eq)), parse_number(item.substr(eq + 1)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
    if (text.empty()) throw std::invalid_argument("trailing comma");
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

GammaPolicy parse_gamma_policy(std::string_view spec) {
  if (spec == "flsd-53") return GammaPolicy::flsd_53();
  if (spec == "flsd-532") return GammaPolicy::flsd_532();
  if (spec == "flsc-531") return GammaPolicy::scheduled_531();
  if (spec == "flsc-532") return GammaPolicy::scheduled_532();

  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("invalid gamma policy '" + std::string(spec) + "'");
  const std::string_view kind = spec.substr(0, colon);
  const std::string_view body = spec.substr(colon + 1);
  try {
    if (kind == "fixed") return GammaPolicy::fixed(parse_number(body));
    if (kind == "sample") return GammaPolicy::sample_thresholds(parse_pairs(body));
    if (kind == "epoch") return GammaPolicy::epoch_schedule(parse_pairs(body));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("invalid gamma policy '" + std::string(spec) + "': " + e.what());
  }
  throw std::invalid_argument("invalid gamma policy kind '" + std::string(kind) + "'");
}

std::string_view kind_name(GammaPolicyKind kind) {
  switch (kind) {
    case GammaPolicyKind::fixed: return "fixed";
    case GammaPolicyKind::sample_thresholds: return "sample";
    case GammaPolicyKind::epoch_schedule: return "epoch";
  }
  return "fixed";
}

nlohmann::json to_json(const GammaPolicy& policy) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [bound, gamma] : policy.entries()) entries.push_back({bound, gamma});
  return {{"kind", kind_name(policy.kind())}, {"entries", entries}};
}

GammaPolicy gamma_policy_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  std::vector<GammaPolicy::Entry> entries;
  for (const auto& e : j.at("entries")) {
    if (!e.is_array() || e.size() != 2) throw std::invalid_argument("gamma policy entry must be [bound, gamma]");
    entries.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  if (kind == "fixed") {
    if (entries.size() != 1) throw std::invalid_argument("fixed gamma policy takes one entry");
    return GammaPolicy::fixed(entries.front().second);
  }
  if (kind == "sample") return GammaPolicy::sample_thresholds(std::move(entries));
  if (kind == "epoch") return GammaPolicy::epoch_schedule(std::move(entries));
  throw std::invalid_argument("unknown gamma policy kind '" + kind + "'");
}

}  // namespace focalcal
