#include "focalcal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace focalcal {

namespace {

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
  throw InputError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_scaled(Metric m) { return m != Metric::nll && m != Metric::brier; }

}  // namespace

LogitSet parse_logit_csv(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t classes = 0;
  bool have_header = false;
  std::vector<double> logits;
  std::vector<int> labels;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto fields = split_fields(text);

    if (!have_header) {
      if (trim(fields[0]) != "label") fail(source, line_no, "header must start with 'label'");
      for (std::size_t j = 1; j < fields.size(); ++j) {
        if (trim(fields[j]) != "logit_" + std::to_string(j - 1)) {
          fail(source, line_no, "expected column 'logit_" + std::to_string(j - 1) + "'");
        }
      }
      classes = fields.size() - 1;
      if (classes < 2) fail(source, line_no, "need at least two logit columns (K >= 2)");
      have_header = true;
      continue;
    }

    if (fields.size() != classes + 1) {
      fail(source, line_no, "expected " + std::to_string(classes + 1) + " fields, got " + std::to_string(fields.size()));
    }
    const std::string_view label_text = trim(fields[0]);
    int label = -1;
    const auto lres = std::from_chars(label_text.data(), label_text.data() + label_text.size(), label);
    if (lres.ec != std::errc() || lres.ptr != label_text.data() + label_text.size()) {
      fail(source, line_no, "invalid label '" + std::string(label_text) + "'");
    }
    if (label < 0 || static_cast<std::size_t>(label) >= classes) fail(source, line_no, "label out of range [0, K)");
    labels.push_back(label);

    for (std::size_t j = 1; j <= classes; ++j) {
      std::string_view f = trim(fields[j]);
      if (!f.empty() && f.front() == '+') f.remove_prefix(1);
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || f.empty()) {
        fail(source, line_no, "invalid number '" + std::string(trim(fields[j])) + "'");
      }
      if (!std::isfinite(v)) fail(source, line_no, "non-finite logit");
      logits.push_back(v);
    }
  }
  if (in.bad()) throw InputError(std::string(source) + ": read error");
  if (!have_header) throw InputError(std::string(source) + ": empty file");
  if (labels.empty()) throw InputError(std::string(source) + ": no data rows");
  return LogitSet(classes, std::move(logits), std::move(labels));
}

LogitSet read_logit_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open file");
  return parse_logit_csv(in, path.string());
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_logit_csv(std::ostream& out, const LogitSet& logits) {
  out << "label";
  for (std::size_t j = 0; j < logits.classes(); ++j) out << ",logit_" << j;
  out << '\n';
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out << logits.label(i);
    for (double z : logits.row(i)) out << ',' << format_double(z);
    out << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(tmp.string() + ": cannot open for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

CalibrationReport make_report(const EvalSet& eval, int bins) {
  CalibrationReport r;
  r.n = eval.size();
  r.k = eval.classes();
  r.bins = bins;
  r.metrics = evaluate_all(eval, bins);
  return r;
}

nlohmann::json metrics_json(const MetricValues& metrics, bool percent) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [m, v] : metrics) j[std::string(metric_name(m))] = percent && is_scaled(m) ? 100.0 * v : v;
  return j;
}

nlohmann::json to_json(const TemperatureFit& fit) {
  return {{"temperature", fit.temperature}, {"criterion", criterion_name(fit.criterion)}, {"value", fit.value}};
}

nlohmann::json to_json(const CalibrationReport& report, bool percent) {
  nlohmann::json j;
  j["n"] = report.n;
  j["k"] = report.k;
  j["bins"] = report.bins;
  j["metrics"] = metrics_json(report.metrics, percent);
  if (report.temperature) j["temperature"] = to_json(*report.temperature);
  if (!report.intervals.empty()) {
    nlohmann::json iv = nlohmann::json::object();
    for (const auto& [m, i] : report.intervals) {
      const double s = percent && is_scaled(m) ? 100.0 : 1.0;
      iv[std::string(metric_name(m))] = {s * i.lo, s * i.hi, i.level};
    }
    j["intervals"] = iv;
  }
  if (report.auroc) j["auroc"] = percent ? 100.0 * *report.auroc : *report.auroc;
  return j;
}

}  // namespace focalcal
