#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "focalcal/logit_set.hpp"
#include "focalcal/metrics.hpp"
#include "focalcal/temperature.hpp"

namespace focalcal {

/// Malformed or unreadable input. The message carries the source name and,
/// for parse errors, the 1-based line number.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Reads a logit CSV: header `label,logit_0,...,logit_{K-1}`, then one row
/// per sample. Blank lines are skipped; a trailing CR is tolerated.
LogitSet parse_logit_csv(std::istream& in, std::string_view source = "<stream>");
LogitSet read_logit_csv(const std::filesystem::path& path);

/// Writes a logit CSV with shortest round-trip decimal formatting.
void write_logit_csv(std::ostream& out, const LogitSet& logits);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

struct CalibrationReport {
  std::size_t n = 0;
  std::size_t k = 0;
  int bins = kDefaultBins;
  MetricValues metrics;
  std::optional<TemperatureFit> temperature;
  std::map<Metric, Interval> intervals;
  std::optional<double> auroc;
};

/// All metrics of `eval` at the given bin count.
CalibrationReport make_report(const EvalSet& eval, int bins);

/// Report JSON. With `percent`, the calibration errors, classification
/// errors, their intervals and AUROC are multiplied by 100; NLL and Brier
/// stay as they are.
nlohmann::json to_json(const CalibrationReport& report, bool percent = false);
nlohmann::json metrics_json(const MetricValues& metrics, bool percent = false);
nlohmann::json to_json(const TemperatureFit& fit);

}  // namespace focalcal
