#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "focalcal/commands.hpp"

using namespace focalcal::cli;

int main(int argc, char** argv) {
  CLI::App app{"focalcal: calibration metrics, temperature scaling, OoD scoring and toy focal-loss training"};
  app.require_subcommand(1);

  const std::uint64_t seed = default_seed();
  const std::string seed_help = "RNG seed (default: $FOCALCAL_SEED or " + std::to_string(seed) + ")";

  MetricsOptions metrics;
  metrics.seed = seed;
  auto* m = app.add_subcommand("metrics", "Compute the full metric suite for a logit CSV at T=1 (or --temperature)");
  m->add_option("--logits", metrics.logits, "Logit CSV: header label,logit_0,...,logit_{K-1}")->required();
  m->add_option("--bins", metrics.bins, "Number of calibration bins")->capture_default_str();
  m->add_option("--bootstrap", metrics.bootstrap, "Bootstrap replicates for confidence intervals (0 disables)")->capture_default_str();
  m->add_option("--level", metrics.level, "Confidence level of bootstrap intervals")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  m->add_option("--seed", metrics.seed, seed_help);
  m->add_option("--temperature", metrics.temperature, "Temperature applied before evaluation")->capture_default_str();
  m->add_flag("--percent", metrics.percent, "Report errors and calibration errors in percent");

  TempScaleOptions temp;
  auto* t = app.add_subcommand("temp-scale", "Fit a temperature on validation logits and report test metrics before and after");
  t->add_option("--val", temp.val, "Validation logit CSV")->required();
  t->add_option("--test", temp.test, "Test logit CSV")->required();
  t->add_option("--criterion", temp.criterion, "Fitting criterion: ece (grid 0.1..10) or nll (1-D search)")->capture_default_str();
  t->add_option("--bins", temp.bins, "Number of calibration bins")->capture_default_str();
  t->add_flag("--percent", temp.percent, "Report errors and calibration errors in percent");

  OodOptions ood;
  auto* o = app.add_subcommand("ood", "Entropy-based OoD AUROC; writes the ROC curve as CSV");
  o->add_option("--in", ood.in, "In-distribution logit CSV")->required();
  o->add_option("--out", ood.out, "Out-of-distribution logit CSV")->required();
  o->add_option("--temperature", ood.temperature, "Temperature applied before scoring")->capture_default_str();
  o->add_option("--roc", ood.roc, "Output path of the ROC CSV (fpr,tpr)")->capture_default_str();
  o->add_flag("--percent", ood.percent, "Report AUROC in percent");

  TrainToyOptions train;
  train.seed = seed;
  auto* tr = app.add_subcommand("train-toy", "Train a toy model on synthetic two-cluster data");
  tr->add_option("--experiment", train.experiment, "logistic (2-parameter, no bias) or mlp")->capture_default_str();
  tr->add_option("--loss", train.loss, "Loss: ce, focal, brier or ls")->capture_default_str();
  tr->add_option("--gamma-policy", train.gamma_policy,
                 "Focal gamma policy: fixed:G, sample:P=G,..., epoch:E=G,..., flsd-53, flsd-532, flsc-531, flsc-532")
      ->capture_default_str();
  tr->add_option("--smoothing", train.smoothing, "Label smoothing alpha for --loss ls")->capture_default_str();
  tr->add_option("--seed", train.seed, seed_help);
  tr->add_option("--out", train.out_dir, "Output directory for epochs.csv, model.json, histogram.csv")->required();
  tr->add_option("--epochs", train.epochs, "Override the experiment's epoch count");

  GammaStarOptions gstar;
  auto* g = app.add_subcommand("gamma-star", "Smallest gamma keeping the gradient ratio below 1 above p0");
  auto* p0 = g->add_option("--p0", gstar.p0, "Probability threshold in (0, 1)");
  auto* cuts = g->add_option("--policy-from", gstar.policy_from, "Cut points THRESHOLD=P0,...; prints a sample-threshold policy with gamma*(P0) per interval");
  p0->excludes(cuts);

  ReliabilityOptions rel;
  auto* r = app.add_subcommand("reliability", "Reliability-diagram data as CSV");
  r->add_option("--logits", rel.logits, "Logit CSV")->required();
  r->add_option("--bins", rel.bins, "Number of equal-width bins")->capture_default_str();
  r->add_option("--temperature", rel.temperature, "Temperature applied before binning")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (m->parsed()) return cmd_metrics(metrics, std::cout, std::cerr);
  if (t->parsed()) return cmd_temp_scale(temp, std::cout, std::cerr);
  if (o->parsed()) return cmd_ood(ood, std::cout, std::cerr);
  if (tr->parsed()) return cmd_train_toy(train, std::cout, std::cerr);
  if (g->parsed()) return cmd_gamma_star(gstar, std::cout, std::cerr);
  if (r->parsed()) return cmd_reliability(rel, std::cout, std::cerr);
  return kUsageError;
}
