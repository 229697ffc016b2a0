#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace focalcal::cli {

/// Process exit codes shared by every command.
enum ExitCode : int { kOk = 0, kNumericFailure = 1, kUsageError = 2 };

/// Seed from the FOCALCAL_SEED environment variable, else kDefaultSeed.
std::uint64_t default_seed();

struct MetricsOptions {
  std::filesystem::path logits;
  int bins = 15;
  int bootstrap = 0;
  double level = 0.9;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  bool percent = false;
};

struct TempScaleOptions {
  std::filesystem::path val;
  std::filesystem::path test;
  std::string criterion = "ece";
  int bins = 15;
  bool percent = false;
};

struct OodOptions {
  std::filesystem::path in;
  std::filesystem::path out;
  double temperature = 1.0;
  std::filesystem::path roc = "roc.csv";
  bool percent = false;
};

struct TrainToyOptions {
  std::string experiment = "logistic";
  std::string loss = "ce";
  std::string gamma_policy = "fixed:1";
  double smoothing = 0.05;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  /// Overrides the experiment's epoch count when positive.
  int epochs = 0;
};

struct GammaStarOptions {
  std::optional<double> p0;
  std::optional<std::string> policy_from;
};

struct ReliabilityOptions {
  std::filesystem::path logits;
  int bins = 15;
  double temperature = 1.0;
};

/// Each command writes its primary output to `out`, diagnostics to `err`,
/// and returns an ExitCode. Files are written only after every computation
/// has succeeded.
int cmd_metrics(const MetricsOptions& opt, std::ostream& out, std::ostream& err);
int cmd_temp_scale(const TempScaleOptions& opt, std::ostream& out, std::ostream& err);
int cmd_ood(const OodOptions& opt, std::ostream& out, std::ostream& err);
int cmd_train_toy(const TrainToyOptions& opt, std::ostream& out, std::ostream& err);
int cmd_gamma_star(const GammaStarOptions& opt, std::ostream& out, std::ostream& err);
int cmd_reliability(const ReliabilityOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace focalcal::cli
