#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

#include "focalcal/gamma_policy.hpp"
#include "focalcal/losses.hpp"
#include "focalcal/metrics.hpp"
#include "focalcal/random.hpp"

namespace focalcal {

inline constexpr std::uint64_t kDefaultSeed = 20200218;

/// Dense labeled data: N x D features, row-major.
struct Dataset {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }

  bool operator==(const Dataset&) const = default;
};

/// Two Gaussian clusters per class in 2-D, centred on the vertices of a
/// square of side `side_length` around the origin. Class 0 owns the two
/// vertices with x1 < 0 and class 1 the two with x1 > 0, so the means are
/// separable by a line through the origin. With `mix_covariance`, each
/// cluster draws a 2 x 2 matrix with entries uniform on [-1, 1] and applies
/// it to its (centred, std `cluster_std`) samples. A `flip_rate` fraction of
/// labels is flipped, drawn per sample.
struct SyntheticSpec {
  double side_length = 4.0;
  double cluster_std = 1.0;
  double flip_rate = 0.10;
  std::size_t n_train = 4000;
  std::size_t n_test = 1000;
  bool mix_covariance = true;
  std::uint64_t seed = kDefaultSeed;
};

struct TwoClusterData {
  Dataset train;
  Dataset test;
  std::size_t flipped_train = 0;
  std::size_t flipped_test = 0;
};

/// Cluster mixing matrices come from substream 0 of `stream`'s seed, the
/// training rows from substream 1, test rows from substream 2.
TwoClusterData generate_two_cluster(const SyntheticSpec& spec);

enum class ModelKind { linear, mlp };

/// Desk-scale classifier with a flat parameter vector.
///
/// linear, 2 classes: logits (0, w.x) with one weight per input and no
///   bias, i.e. P(class 1) = sigmoid(w.x).
/// linear, K > 2 classes: logits W x with W of shape K x D.
/// mlp: logits W2 relu(W1 x + b1) + b2 with W1 H x D and W2 K x H.
class ToyModel {
public:
  static ToyModel linear(std::size_t dim, std::size_t classes);
  /// Weights and biases uniform on +-1/sqrt(fan_in).
  static ToyModel mlp(std::size_t dim, std::size_t hidden, std::size_t classes, RandomStream& init);

  ModelKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t classes() const { return classes_; }
  std::size_t hidden() const { return hidden_; }

  std::span<const double> params() const { return params_; }
  std::span<double> params() { return params_; }

  /// Writes the logits for x; for mlp, `features` (size hidden()) receives
  /// the post-activation hidden layer.
  void forward(std::span<const double> x, std::span<double> logits, std::span<double> features = {}) const;

  /// Adds dL/dparams to `grad` given dL/dlogits at input x. `features` must
  /// be the values forward() produced for x (ignored for linear models).
  void backward(std::span<const double> x, std::span<const double> features, std::span<const double> dlogits,
                std::span<double> grad) const;

  /// Frobenius norm of the weights feeding the logits (biases excluded).
  double last_layer_weight_norm() const;

  bool operator==(const ToyModel&) const = default;

private:
  ToyModel(ModelKind kind, std::size_t dim, std::size_t hidden, std::size_t classes);

  ModelKind kind_;
  std::size_t dim_;
  std::size_t hidden_;
  std::size_t classes_;
  std::vector<double> params_;
};

nlohmann::json to_json(const ToyModel& model);

/// Loss for one sample (one-hot target) under `kind`, adding the parameter
/// gradient to `grad`. Returns the loss value and, via `p_true`, the
/// model's probability for the label.
double sample_loss_and_grad(const ToyModel& model, std::span<const double> x, int label, LossKind kind,
                            std::span<double> grad, double* p_true = nullptr);

struct TrainConfig {
  LossType loss = LossType::cross_entropy;
  /// gamma source for focal loss; ignored otherwise.
  GammaPolicy gamma = GammaPolicy::fixed(1.0);
  /// alpha for label smoothing.
  double smoothing = 0.05;
  double momentum = 0.9;
  /// (last epoch, learning rate) steps; epochs beyond the last keep its rate.
  std::vector<std::pair<int, double>> lr_schedule = {{150, 0.1}, {250, 0.01}, {350, 0.001}};
  std::size_t batch_size = 128;
  int epochs = 350;
  double weight_decay = 0.0;
  std::uint64_t seed = kDefaultSeed;
};

double learning_rate_at(const TrainConfig& cfg, int epoch);

struct TrainData {
  Dataset train;
  Dataset test;
  std::optional<Dataset> val;
};

/// Per-epoch instrumentation. Splits over correctly/incorrectly classified
/// samples are NaN when that group is empty; feature_norm is NaN for linear
/// models; val_* are empty when no validation set was given.
struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double train_nll = 0.0;
  double train_nll_correct = 0.0;
  double train_nll_incorrect = 0.0;
  double train_error = 0.0;
  double test_nll = 0.0;
  double test_nll_correct = 0.0;
  double test_nll_incorrect = 0.0;
  double test_error = 0.0;
  double test_ece = 0.0;
  double test_entropy_correct = 0.0;
  double test_entropy_incorrect = 0.0;
  double weight_norm = 0.0;
  double feature_norm = 0.0;
  double logit_norm = 0.0;
  std::optional<double> val_nll;
  std::optional<double> val_error;
  std::optional<double> val_ece;

  bool operator==(const EpochLog&) const = default;
};

class TrainingDiverged : public std::runtime_error {
public:
  TrainingDiverged(int epoch, const std::string& what) : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

private:
  int epoch_;
};

struct TrainResult {
  ToyModel model;
  std::vector<EpochLog> logs;
};

/// Minibatch SGD with momentum (v <- mu v + g, theta <- theta - lr v).
/// Each epoch shuffles with RandomStream(cfg.seed, epoch) unless the batch
/// covers the whole training set. Focal gamma is chosen per sample from the
/// policy using the model's current true-class probability. Throws
/// TrainingDiverged on a non-finite loss.
TrainResult train(ToyModel model, const TrainData& data, const TrainConfig& cfg);

/// Model predictions on a dataset as an EvalSet.
EvalSet predict(const ToyModel& model, const Dataset& data);

/// Counts of misclassified samples per equal-width confidence bin.
std::vector<std::size_t> misclassification_confidence_histogram(const ToyModel& model, const Dataset& data,
                                                                int bins = 10);

/// Mean confidence over misclassified samples (NaN when there are none).
double mean_misclassified_confidence(const ToyModel& model, const Dataset& data);

enum class StoppingCriterion { val_ece, val_nll, val_error };

/// Epoch number with the smallest criterion value, earliest on ties.
/// Throws if a log lacks the validation field.
int select_early_stopping(const std::vector<EpochLog>& logs, StoppingCriterion criterion);

/// Column order of the epoch CSV.
inline constexpr const char* kEpochCsvHeader =
    "epoch,learning_rate,train_loss,train_nll,train_nll_correct,train_nll_incorrect,train_error,"
    "test_nll,test_nll_correct,test_nll_incorrect,test_error,test_ece,test_entropy_correct,"
    "test_entropy_incorrect,weight_norm,feature_norm,logit_norm,val_nll,val_error,val_ece";

void write_epoch_csv(std::ostream& out, const std::vector<EpochLog>& logs);

// ---------------------------------------------------------------------------
// Canned experiments

/// Two-parameter logistic model setup: full-batch gradient descent, lr 0.1,
/// no momentum, 2000 iterations.
TrainConfig linear_experiment_config(LossType loss, GammaPolicy gamma);

/// One-hidden-layer MLP setup: batch 128, momentum 0.9, lr 0.1 / 0.01 / 0.001
/// for epochs 1-150 / 151-250 / 251-350.
TrainConfig mlp_experiment_config(LossType loss, GammaPolicy gamma);

inline constexpr std::size_t kMlpHidden = 32;

}  // namespace focalcal
