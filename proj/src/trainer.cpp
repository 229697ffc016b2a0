#include "focalcal/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "focalcal/numerics.hpp"

namespace focalcal {

// ---------------------------------------------------------------------------
// Synthetic data

TwoClusterData generate_two_cluster(const SyntheticSpec& spec) {
  if (!(spec.flip_rate >= 0.0 && spec.flip_rate < 1.0)) throw std::invalid_argument("flip rate must lie in [0, 1)");
  if (spec.n_train == 0 || spec.n_test == 0) throw std::invalid_argument("sample counts must be positive");
  if (!(spec.cluster_std > 0.0) || !(spec.side_length > 0.0)) throw std::invalid_argument("cluster geometry must be positive");

  constexpr int kClusters = 4;
  const double h = spec.side_length / 2.0;
  const double means[kClusters][2] = {{-h, -h}, {-h, h}, {h, -h}, {h, h}};

  double mixing[kClusters][2][2];
  RandomStream mix_stream(spec.seed, 0);
  for (auto& a : mixing) {
    for (auto& r : a) {
      for (double& v : r) v = spec.mix_covariance ? mix_stream.uniform(-1.0, 1.0) : 0.0;
    }
    if (!spec.mix_covariance) a[0][0] = a[1][1] = 1.0;
  }

  auto make = [&](std::size_t n, std::uint64_t substream, std::size_t& flipped) {
    RandomStream stream(spec.seed, substream);
    Dataset d;
    d.dim = 2;
    d.classes = 2;
    d.features.resize(2 * n);
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<int>(i % kClusters);
      const double z0 = spec.cluster_std * stream.normal();
      const double z1 = spec.cluster_std * stream.normal();
      d.features[2 * i] = means[c][0] + mixing[c][0][0] * z0 + mixing[c][0][1] * z1;
      d.features[2 * i + 1] = means[c][1] + mixing[c][1][0] * z0 + mixing[c][1][1] * z1;
      int label = c / 2;
      if (stream.uniform() < spec.flip_rate) {
        label = 1 - label;
        ++flipped;
      }
      d.labels[i] = label;
    }
    return d;
  };

  TwoClusterData out;
  out.train = make(spec.n_train, 1, out.flipped_train);
  out.test = make(spec.n_test, 2, out.flipped_test);
  return out;
}

// ---------------------------------------------------------------------------
// ToyModel

ToyModel::ToyModel(ModelKind kind, std::size_t dim, std::size_t hidden, std::size_t classes)
    : kind_(kind), dim_(dim), hidden_(hidden), classes_(classes) {
  if (dim == 0) throw std::invalid_argument("model input dimension must be positive");
  if (classes < 2) throw std::invalid_argument("model needs at least two classes");
  std::size_t count = 0;
  if (kind == ModelKind::linear) {
    count = classes == 2 ? dim : classes * dim;
  } else {
    if (hidden == 0) throw std::invalid_argument("mlp hidden width must be positive");
    count = hidden * dim + hidden + classes * hidden + classes;
  }
  params_.assign(count, 0.0);
}

ToyModel ToyModel::linear(std::size_t dim, std::size_t classes) { return ToyModel(ModelKind::linear, dim, 0, classes); }

ToyModel ToyModel::mlp(std::size_t dim, std::size_t hidden, std::size_t classes, RandomStream& init) {
  ToyModel m(ModelKind::mlp, dim, hidden, classes);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(dim));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  const std::size_t layer1 = hidden * dim + hidden;
  for (std::size_t i = 0; i < m.params_.size(); ++i) {
    const double bound = i < layer1 ? bound1 : bound2;
    m.params_[i] = init.uniform(-bound, bound);
  }
  return m;
}

void ToyModel::forward(std::span<const double> x, std::span<double> logits, std::span<double> features) const {
  const double* p = params_.data();
  if (kind_ == ModelKind::linear) {
    if (classes_ == 2) {
      logits[0] = 0.0;
      logits[1] = std::inner_product(x.begin(), x.end(), p, 0.0);
      return;
    }
    for (std::size_t c = 0; c < classes_; ++c) logits[c] = std::inner_product(x.begin(), x.end(), p + c * dim_, 0.0);
    return;
  }
  const double* w1 = p;
  const double* b1 = w1 + hidden_ * dim_;
  const double* w2 = b1 + hidden_;
  const double* b2 = w2 + classes_ * hidden_;
  for (std::size_t h = 0; h < hidden_; ++h) {
    features[h] = std::max(0.0, std::inner_product(x.begin(), x.end(), w1 + h * dim_, b1[h]));
  }
  for (std::size_t c = 0; c < classes_; ++c) {
    logits[c] = std::inner_product(features.begin(), features.end(), w2 + c * hidden_, b2[c]);
  }
}

void ToyModel::backward(std::span<const double> x, std::span<const double> features, std::span<const double> dlogits,
                        std::span<double> grad) const {
  if (kind_ == ModelKind::linear) {
    if (classes_ == 2) {
      for (std::size_t j = 0; j < dim_; ++j) grad[j] += dlogits[1] * x[j];
      return;
    }
    for (std::size_t c = 0; c < classes_; ++c) {
      for (std::size_t j = 0; j < dim_; ++j) grad[c * dim_ + j] += dlogits[c] * x[j];
    }
    return;
  }
  const double* w2 = params_.data() + hidden_ * dim_ + hidden_;
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + hidden_ * dim_;
  double* g_w2 = g_b1 + hidden_;
  double* g_b2 = g_w2 + classes_ * hidden_;
  for (std::size_t c = 0; c < classes_; ++c) {
    for (std::size_t h = 0; h < hidden_; ++h) g_w2[c * hidden_ + h] += dlogits[c] * features[h];
    g_b2[c] += dlogits[c];
  }
  for (std::size_t h = 0; h < hidden_; ++h) {
    if (features[h] <= 0.0) continue;
    double d = 0.0;
    for (std::size_t c = 0; c < classes_; ++c) d += w2[c * hidden_ + h] * dlogits[c];
    for (std::size_t j = 0; j < dim_; ++j) g_w1[h * dim_ + j] += d * x[j];
    g_b1[h] += d;
  }
}

double ToyModel::last_layer_weight_norm() const {
  std::span<const double> w = params_;
  if (kind_ == ModelKind::mlp) w = w.subspan(hidden_ * dim_ + hidden_, classes_ * hidden_);
  return std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
}

nlohmann::json to_json(const ToyModel& model) {
  return {{"kind", model.kind() == ModelKind::linear ? "linear" : "mlp"},
          {"dim", model.dim()},
          {"hidden", model.hidden()},
          {"classes", model.classes()},
          {"weight_norm", model.last_layer_weight_norm()},
          {"params", std::vector<double>(model.params().begin(), model.params().end())}};
}

// ---------------------------------------------------------------------------
// Per-sample loss

namespace {

struct Workspace {
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<double> features;
  std::vector<double> dlogits;

  explicit Workspace(const ToyModel& m)
      : logits(m.classes()), probs(m.classes()), features(m.hidden()), dlogits(m.classes()) {}
};

LossKind resolve_loss(const TrainConfig& cfg, double p_true, int epoch) {
  switch (cfg.loss) {
    case LossType::cross_entropy: return LossKind::ce();
    case LossType::focal: return LossKind::focal(cfg.gamma.gamma_for(p_true, epoch));
    case LossType::brier: return LossKind::brier();
    case LossType::label_smoothing: return LossKind::label_smoothing(cfg.smoothing);
  }
  throw std::invalid_argument("unknown loss kind");
}

// Forward pass, loss and backward pass for one sample. `choose` maps the
// true-class probability to the loss to apply.
template <typename Choose>
double sample_step(const ToyModel& model, std::span<const double> x, int label, Choose&& choose, Workspace& ws,
                   std::span<double> grad, double* p_true) {
  model.forward(x, ws.logits, ws.features);
  softmax_into(ws.logits, 1.0, ws.probs);
  const double py = ws.probs[static_cast<std::size_t>(label)];
  if (p_true) *p_true = py;
  const LossKind kind = choose(py);
  const auto target = ProbVector::one_hot(model.classes(), static_cast<std::size_t>(label));
  const double loss = loss_and_logit_grad(ws.probs, target, kind, ws.dlogits);
  model.backward(x, ws.features, ws.dlogits, grad);
  return loss;
}

}  // namespace

double sample_loss_and_grad(const ToyModel& model, std::span<const double> x, int label, LossKind kind,
                            std::span<double> grad, double* p_true) {
  if (x.size() != model.dim() || grad.size() != model.params().size()) {
    throw std::invalid_argument("sample_loss_and_grad: dimension mismatch");
  }
  if (label < 0 || static_cast<std::size_t>(label) >= model.classes()) throw std::invalid_argument("label out of range");
  Workspace ws(model);
  return sample_step(model, x, label, [&](double) { return kind; }, ws, grad, p_true);
}

// ---------------------------------------------------------------------------
// Training

double learning_rate_at(const TrainConfig& cfg, int epoch) {
  if (cfg.lr_schedule.empty()) throw std::invalid_argument("empty learning-rate schedule");
  for (const auto& [last, lr] : cfg.lr_schedule) {
    if (epoch <= last) return lr;
  }
  return cfg.lr_schedule.back().second;
}

EvalSet predict(const ToyModel& model, const Dataset& data) {
  const std::size_t k = model.classes();
  std::vector<double> probs(data.size() * k);
  Workspace ws(model);
  for (std::size_t i = 0; i < data.size(); ++i) {
    model.forward(data.row(i), ws.logits, ws.features);
    softmax_into(ws.logits, 1.0, std::span<double>(probs.data() + i * k, k));
  }
  return EvalSet(k, std::move(probs), data.labels);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SetSummary {
  double nll = 0.0;
  double nll_correct = kNaN;
  double nll_incorrect = kNaN;
  double error = 0.0;
  double ece = 0.0;
  double entropy_correct = kNaN;
  double entropy_incorrect = kNaN;
  double feature_norm = kNaN;
  double logit_norm = 0.0;
};

SetSummary summarize(const ToyModel& model, const Dataset& data) {
  const std::size_t k = model.classes();
  std::vector<double> probs(data.size() * k);
  Workspace ws(model);
  double feature_norm = 0.0;
  double logit_norm = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    model.forward(data.row(i), ws.logits, ws.features);
    softmax_into(ws.logits, 1.0, std::span<double>(probs.data() + i * k, k));
    logit_norm += std::sqrt(std::inner_product(ws.logits.begin(), ws.logits.end(), ws.logits.begin(), 0.0));
    feature_norm += std::sqrt(std::inner_product(ws.features.begin(), ws.features.end(), ws.features.begin(), 0.0));
  }
  const EvalSet eval(k, std::move(probs), data.labels);
  const auto n = static_cast<double>(data.size());

  SetSummary s;
  s.logit_norm = logit_norm / n;
  if (model.kind() == ModelKind::mlp) s.feature_norm = feature_norm / n;
  s.ece = ece(eval);

  double nll_sum[2] = {0.0, 0.0};      // [incorrect, correct]
  double entropy_sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const int bucket = eval.correct(i) ? 1 : 0;
    nll_sum[bucket] -= safe_log(eval.row(i)[eval.label(i)]);
    entropy_sum[bucket] += entropy(eval.row(i));
    ++count[bucket];
  }
  s.nll = (nll_sum[0] + nll_sum[1]) / n;
  s.error = static_cast<double>(count[0]) / n;
  if (count[1] > 0) {
    s.nll_correct = nll_sum[1] / static_cast<double>(count[1]);
    s.entropy_correct = entropy_sum[1] / static_cast<double>(count[1]);
  }
  if (count[0] > 0) {
    s.nll_incorrect = nll_sum[0] / static_cast<double>(count[0]);
    s.entropy_incorrect = entropy_sum[0] / static_cast<double>(count[0]);
  }
  return s;
}

void check_dataset(const ToyModel& model, const Dataset& d, const char* name) {
  if (d.size() == 0) throw std::invalid_argument(std::string(name) + " set is empty");
  if (d.dim != model.dim() || d.features.size() != d.size() * d.dim) {
    throw std::invalid_argument(std::string(name) + " set dimension does not match the model");
  }
  for (int y : d.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= model.classes()) {
      throw std::invalid_argument(std::string(name) + " set label out of range");
    }
  }
}

}  // namespace

TrainResult train(ToyModel model, const TrainData& data, const TrainConfig& cfg) {
  check_dataset(model, data.train, "training");
  check_dataset(model, data.test, "test");
  if (data.val) check_dataset(model, *data.val, "validation");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  for (const auto& [last, lr] : cfg.lr_schedule) {
    if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  }

  const std::size_t n = data.train.size();
  const std::size_t batch = std::min(cfg.batch_size, n);
  const std::size_t num_params = model.params().size();
  std::vector<double> velocity(num_params, 0.0);
  std::vector<double> grad(num_params);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Workspace ws(model);

  TrainResult result{model, {}};
  ToyModel& m = result.model;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = learning_rate_at(cfg, epoch);
    if (batch < n) {
      RandomStream shuffle(cfg.seed, static_cast<std::uint64_t>(epoch));
      for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle.uniform_index(i + 1)]);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        batch_loss += sample_step(
            m, data.train.row(i), data.train.labels[i], [&](double p) { return resolve_loss(cfg, p, epoch); }, ws,
            grad, nullptr);
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingDiverged(epoch, "training diverged at epoch " + std::to_string(epoch));
      }
      epoch_loss += batch_loss;

      const double scale = 1.0 / static_cast<double>(stop - start);
      auto params = m.params();
      for (std::size_t p = 0; p < num_params; ++p) {
        const double g = grad[p] * scale + cfg.weight_decay * params[p];
        velocity[p] = cfg.momentum * velocity[p] + g;
        params[p] -= lr * velocity[p];
      }
    }

    for (double v : m.params()) {
      if (!std::isfinite(v)) throw TrainingDiverged(epoch, "non-finite parameters at epoch " + std::to_string(epoch));
    }

    const SetSummary tr = summarize(m, data.train);
    const SetSummary te = summarize(m, data.test);
    EpochLog log;
    log.epoch = epoch;
    log.learning_rate = lr;
    log.train_loss = epoch_loss / static_cast<double>(n);
    log.train_nll = tr.nll;
    log.train_nll_correct = tr.nll_correct;
    log.train_nll_incorrect = tr.nll_incorrect;
    log.train_error = tr.error;
    log.test_nll = te.nll;
    log.test_nll_correct = te.nll_correct;
    log.test_nll_incorrect = te.nll_incorrect;
    log.test_error = te.error;
    log.test_ece = te.ece;
    log.test_entropy_correct = te.entropy_correct;
    log.test_entropy_incorrect = te.entropy_incorrect;
    log.weight_norm = m.last_layer_weight_norm();
    log.feature_norm = te.feature_norm;
    log.logit_norm = te.logit_norm;
    if (data.val) {
      const SetSummary va = summarize(m, *data.val);
      log.val_nll = va.nll;
      log.val_error = va.error;
      log.val_ece = va.ece;
    }
    result.logs.push_back(log);
  }
  return result;
}

std::vector<std::size_t> misclassification_confidence_histogram(const ToyModel& model, const Dataset& data, int bins) {
  const EvalSet eval = predict(model, data);
  std::vector<double> wrong;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    if (!eval.correct(i)) wrong.push_back(eval.confidence(i));
  }
  std::vector<std::size_t> counts;
  for (const auto& bin : bin_equal_width(wrong, bins)) counts.push_back(bin.members.size());
  return counts;
}

double mean_misclassified_confidence(const ToyModel& model, const Dataset& data) {
  const EvalSet eval = predict(model, data);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    if (!eval.correct(i)) {
      total += eval.confidence(i);
      ++count;
    }
  }
  return count == 0 ? kNaN : total / static_cast<double>(count);
}

int select_early_stopping(const std::vector<EpochLog>& logs, StoppingCriterion criterion) {
  if (logs.empty()) throw std::invalid_argument("select_early_stopping: no logs");
  int best_epoch = 0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& log : logs) {
    const std::optional<double>& field = criterion == StoppingCriterion::val_ece   ? log.val_ece
                                         : criterion == StoppingCriterion::val_nll ? log.val_nll
                                                                                   : log.val_error;
    if (!field) throw std::invalid_argument("select_early_stopping: epoch " + std::to_string(log.epoch) + " has no validation metrics");
    if (best_epoch == 0 || *field < best) {
      best = *field;
      best_epoch = log.epoch;
    }
  }
  return best_epoch;
}

namespace {

void put_number(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "nan";
    return;
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

void put_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) put_number(out, *v);
}

}  // namespace

void write_epoch_csv(std::ostream& out, const std::vector<EpochLog>& logs) {
  out << kEpochCsvHeader << '\n';
  for (const auto& l : logs) {
    out << l.epoch;
    for (double v : {l.learning_rate, l.train_loss, l.train_nll, l.train_nll_correct, l.train_nll_incorrect,
                     l.train_error, l.test_nll, l.test_nll_correct, l.test_nll_incorrect, l.test_error, l.test_ece,
                     l.test_entropy_correct, l.test_entropy_incorrect, l.weight_norm, l.feature_norm, l.logit_norm}) {
      out << ',';
      put_number(out, v);
    }
    for (const auto* v : {&l.val_nll, &l.val_error, &l.val_ece}) {
      out << ',';
      put_optional(out, *v);
    }
    out << '\n';
  }
}

TrainConfig linear_experiment_config(LossType loss, GammaPolicy gamma) {
  TrainConfig cfg;
  cfg.loss = loss;
  cfg.gamma = std::move(gamma);
  cfg.momentum = 0.0;
  cfg.lr_schedule = {{2000, 0.1}};
  cfg.batch_size = std::numeric_limits<std::size_t>::max();
  cfg.epochs = 2000;
  return cfg;
}

TrainConfig mlp_experiment_config(LossType loss, GammaPolicy gamma) {
  TrainConfig cfg;
  cfg.loss = loss;
  cfg.gamma = std::move(gamma);
  return cfg;
}

}  // namespace focalcal
