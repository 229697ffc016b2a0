#include "focalcal/commands.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string_view>

#include "focalcal/gamma_policy.hpp"
#include "focalcal/io.hpp"
#include "focalcal/ood.hpp"
#include "focalcal/temperature.hpp"
#include "focalcal/trainer.hpp"

namespace focalcal::cli {

namespace {

// Runs `body`, mapping exceptions to exit codes. Input and argument problems
// are usage errors; anything else is a numeric failure.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  }
}

void require_bins(int bins) {
  if (bins < 1) throw std::invalid_argument("--bins must be >= 1");
}

}  // namespace

std::uint64_t default_seed() {
  if (const char* env = std::getenv("FOCALCAL_SEED")) {
    std::uint64_t seed = 0;
    const std::string_view text(env);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (res.ec == std::errc() && res.ptr == text.data() + text.size()) return seed;
  }
  return kDefaultSeed;
}

int cmd_metrics(const MetricsOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_bins(opt.bins);
    if (opt.bootstrap < 0) throw std::invalid_argument("--bootstrap must be >= 0");
    const LogitSet logits = read_logit_csv(opt.logits);
    const EvalSet eval = apply_temperature(logits, opt.temperature);
    CalibrationReport report = make_report(eval, opt.bins);
    if (opt.bootstrap > 0) report.intervals = bootstrap_all(eval, opt.bins, opt.bootstrap, opt.level, opt.seed);
    auto j = to_json(report, opt.percent);
    if (opt.temperature != 1.0) j["applied_temperature"] = opt.temperature;
    out << j.dump(2) << '\n';
    return kOk;
  });
}

int cmd_temp_scale(const TempScaleOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_bins(opt.bins);
    if (opt.criterion != "ece" && opt.criterion != "nll") throw std::invalid_argument("--criterion must be 'ece' or 'nll'");
    const LogitSet val = read_logit_csv(opt.val);
    const LogitSet test = read_logit_csv(opt.test);
    if (val.classes() != test.classes()) throw std::invalid_argument("validation and test files have different K");

    const TemperatureFit fit = opt.criterion == "ece" ? fit_temperature_ece(val, opt.bins) : fit_temperature_nll(val);

    CalibrationReport report = make_report(apply_temperature(test, 1.0), opt.bins);
    report.temperature = fit;
    auto j = to_json(report, opt.percent);
    j["post_metrics"] = metrics_json(evaluate_all(apply_temperature(test, fit.temperature), opt.bins), opt.percent);
    j["validation"] = {
        {"n", val.size()},
        {"metrics", metrics_json(evaluate_all(apply_temperature(val, 1.0), opt.bins), opt.percent)},
        {"post_metrics", metrics_json(evaluate_all(apply_temperature(val, fit.temperature), opt.bins), opt.percent)}};
    out << j.dump(2) << '\n';
    return kOk;
  });
}

int cmd_ood(const OodOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const LogitSet in = read_logit_csv(opt.in);
    const LogitSet ood = read_logit_csv(opt.out);
    if (in.classes() != ood.classes()) throw std::invalid_argument("in-distribution and OoD files have different K");
    ScoredPopulations pops{entropy_scores(apply_temperature(in, opt.temperature)),
                           entropy_scores(apply_temperature(ood, opt.temperature))};
    const double area = auroc(pops);
    std::ostringstream roc;
    write_roc_csv(roc, roc_curve(pops));
    write_file_atomic(opt.roc, roc.str());
    const nlohmann::json j = {{"auroc", opt.percent ? 100.0 * area : area},
                              {"n_in", in.size()},
                              {"n_out", ood.size()},
                              {"temperature", opt.temperature},
                              {"roc", opt.roc.string()}};
    out << j.dump(2) << '\n';
    return kOk;
  });
}

int cmd_train_toy(const TrainToyOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.out_dir.empty()) throw std::invalid_argument("--out is required");
    if (opt.experiment != "logistic" && opt.experiment != "appendix-c" && opt.experiment != "mlp") {
      throw std::invalid_argument("--experiment must be 'logistic' or 'mlp'");
    }
    const LossType loss = parse_loss_type(opt.loss);
    const GammaPolicy policy = parse_gamma_policy(opt.gamma_policy);

    SyntheticSpec spec;
    spec.seed = opt.seed;
    const TwoClusterData data = generate_two_cluster(spec);

    const bool linear = opt.experiment != "mlp";
    TrainConfig cfg = linear ? linear_experiment_config(loss, policy) : mlp_experiment_config(loss, policy);
    cfg.seed = opt.seed;
    cfg.smoothing = opt.smoothing;
    if (opt.epochs > 0) cfg.epochs = opt.epochs;

    RandomStream init(opt.seed, 3);
    ToyModel model = linear ? ToyModel::linear(2, 2) : ToyModel::mlp(2, kMlpHidden, 2, init);
    const TrainResult result = train(std::move(model), TrainData{data.train, data.test, std::nullopt}, cfg);

    std::ostringstream epochs_csv;
    write_epoch_csv(epochs_csv, result.logs);

    const auto hist = misclassification_confidence_histogram(result.model, data.test);
    std::ostringstream hist_csv;
    hist_csv << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < hist.size(); ++b) {
      const double n = static_cast<double>(hist.size());
      hist_csv << format_double(static_cast<double>(b) / n) << ',' << format_double(static_cast<double>(b + 1) / n) << ','
               << hist[b] << '\n';
    }
    const std::string model_json = to_json(result.model).dump(2) + "\n";

    std::filesystem::create_directories(opt.out_dir);
    write_file_atomic(opt.out_dir / "epochs.csv", epochs_csv.str());
    write_file_atomic(opt.out_dir / "model.json", model_json);
    write_file_atomic(opt.out_dir / "histogram.csv", hist_csv.str());

    const EpochLog& last = result.logs.back();
    const double mis_conf = mean_misclassified_confidence(result.model, data.test);
    const nlohmann::json summary = {{"epochs", last.epoch},
                                    {"weight_norm", last.weight_norm},
                                    {"logit_norm", last.logit_norm},
                                    {"test_error", last.test_error},
                                    {"test_ece", last.test_ece},
                                    {"mean_misclassified_confidence", std::isnan(mis_conf) ? nlohmann::json() : nlohmann::json(mis_conf)}};
    out << summary.dump(2) << '\n';
    return kOk;
  });
}

int cmd_gamma_star(const GammaStarOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.p0.has_value() == opt.policy_from.has_value()) {
      throw std::invalid_argument("give exactly one of --p0 and --policy-from");
    }
    if (opt.p0) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f", gamma_star(*opt.p0));
      out << buf << '\n';
    } else {
      out << to_json(derive_threshold_policy(parse_pairs(*opt.policy_from))).dump() << '\n';
    }
    return kOk;
  });
}

int cmd_reliability(const ReliabilityOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_bins(opt.bins);
    const EvalSet eval = apply_temperature(read_logit_csv(opt.logits), opt.temperature);
    std::ostringstream csv;
    write_reliability_csv(csv, reliability_data(eval, opt.bins));
    out << csv.str();
    return kOk;
  });
}

}  // namespace focalcal::cli
