#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "focalcal/numerics.hpp"

namespace focalcal {

/// Target distribution q over K classes. A one-hot target is the usual case.
using TargetDistribution = ProbVector;

enum class LossType { cross_entropy, focal, brier, label_smoothing };

/// A loss and its single hyperparameter: gamma for focal, alpha for label
/// smoothing, unused otherwise.
struct LossKind {
  LossType type = LossType::cross_entropy;
  double param = 0.0;

  static LossKind ce() { return {LossType::cross_entropy, 0.0}; }
  static LossKind focal(double gamma) { return {LossType::focal, gamma}; }
  static LossKind brier() { return {LossType::brier, 0.0}; }
  static LossKind label_smoothing(double alpha) { return {LossType::label_smoothing, alpha}; }
};

/// Parses "ce", "focal", "brier" or "ls". Throws std::invalid_argument on
/// anything else ("unknown loss kind").
LossType parse_loss_type(std::string_view name);
std::string_view loss_type_name(LossType type);

struct LossGradient {
  double value = 0.0;
  std::vector<double> grad_logits;
};

/// -sum q_y log p_y, with p_y floored at kProbFloor.
double cross_entropy(const ProbVector& p, const TargetDistribution& q);

/// -sum (1 - p_y)^gamma q_y log p_y. Equal to cross_entropy at gamma = 0.
double focal_loss(const ProbVector& p, const TargetDistribution& q, double gamma);

/// sum_i (p_i - q_i)^2 for one sample.
double brier_loss(const ProbVector& p, const TargetDistribution& q);

/// (1 - alpha) q + alpha (1 - q) / (K - 1) for a one-hot q and alpha in [0, 1).
TargetDistribution label_smooth(const TargetDistribution& q, double alpha);

/// Ratio of the focal and cross-entropy derivatives with respect to the
/// true-class probability:
///   g(p, gamma) = (1 - p)^gamma - gamma p (1 - p)^(gamma - 1) log p.
/// At p = 1 the removable singularity for gamma < 1 takes its limit 0.
double g_ratio(double p, double gamma);

/// d/dp of -(1 - p)^gamma log p, differentiated directly (not through g).
double focal_derivative_wrt_prob(double p, double gamma);

/// d/dp of -log p.
inline double ce_derivative_wrt_prob(double p) { return -1.0 / p; }

/// Loss at softmax(logits) and its exact gradient with respect to the logits.
///
/// Every loss is differentiated through dL/dp and the softmax Jacobian:
/// with a_y = p_y dL/dp_y the logit gradient is a_j - p_j sum_y a_y. For
/// focal loss dL/dp_y = (dLc/dp_y) g(p_y, gamma). Label smoothing is
/// cross-entropy against the smoothed target.
LossGradient loss_with_grad(std::span<const double> logits, const TargetDistribution& q, LossKind kind);

/// Same as loss_with_grad, but with the softmax already computed. `grad`
/// receives dL/dz. Used by the trainer's inner loop.
double loss_and_logit_grad(std::span<const double> probs, const TargetDistribution& q, LossKind kind,
                           std::span<double> grad);

/// Binary focal objective -(1-x)^gamma q log x - x^gamma (1-q) log(1-x).
double binary_focal_objective(double x, double q, double gamma);

/// argmin of binary_focal_objective over x in [eps, 1 - eps].
double binary_focal_optimum(double q, double gamma);

}  // namespace focalcal
