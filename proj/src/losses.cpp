#include "focalcal/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace focalcal {

namespace {

void require_same_size(const ProbVector& p, const TargetDistribution& q) {
  if (p.size() != q.size()) throw std::invalid_argument("dimension mismatch between prediction and target");
}

void require_gamma(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("focal gamma must be >= 0");
}

// g(p, gamma) extended to p = 0 by its limit 1; no argument checks.
double g_unchecked(double p, double gamma) {
  if (gamma == 0.0 || p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  const double one_minus = 1.0 - p;
  return std::pow(one_minus, gamma) - gamma * p * std::pow(one_minus, gamma - 1.0) * std::log(p);
}

}  // namespace

LossType parse_loss_type(std::string_view name) {
  if (name == "ce") return LossType::cross_entropy;
  if (name == "focal") return LossType::focal;
  if (name == "brier") return LossType::brier;
  if (name == "ls") return LossType::label_smoothing;
  throw std::invalid_argument("unknown loss kind: " + std::string(name));
}

std::string_view loss_type_name(LossType type) {
  switch (type) {
    case LossType::cross_entropy: return "ce";
    case LossType::focal: return "focal";
    case LossType::brier: return "brier";
    case LossType::label_smoothing: return "ls";
  }
  throw std::invalid_argument("unknown loss kind");
}

double cross_entropy(const ProbVector& p, const TargetDistribution& q) {
  require_same_size(p, q);
  double loss = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    if (q[y] > 0.0) loss -= q[y] * safe_log(p[y]);
  }
  return loss;
}

double focal_loss(const ProbVector& p, const TargetDistribution& q, double gamma) {
  require_gamma(gamma);
  require_same_size(p, q);
  double loss = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    if (q[y] > 0.0) loss -= std::pow(1.0 - p[y], gamma) * q[y] * safe_log(p[y]);
  }
  return loss;
}

double brier_loss(const ProbVector& p, const TargetDistribution& q) {
  require_same_size(p, q);
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - q[i];
    loss += d * d;
  }
  return loss;
}

TargetDistribution label_smooth(const TargetDistribution& q, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("label smoothing alpha must lie in [0, 1)");
  std::size_t hot = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 1.0) {
      ++hot;
    } else if (q[i] != 0.0) {
      throw std::invalid_argument("label smoothing needs a one-hot target");
    }
  }
  if (hot != 1) throw std::invalid_argument("label smoothing needs a one-hot target");
  const double off = alpha / static_cast<double>(q.size() - 1);
  std::vector<double> s(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) s[i] = (1.0 - alpha) * q[i] + off * (1.0 - q[i]);
  return TargetDistribution(std::move(s));
}

double g_ratio(double p, double gamma) {
  if (!(p > 0.0)) throw std::invalid_argument("g_ratio: p must be > 0");
  if (p > 1.0) throw std::invalid_argument("g_ratio: p must be <= 1");
  require_gamma(gamma);
  return g_unchecked(p, gamma);
}

double focal_derivative_wrt_prob(double p, double gamma) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("focal derivative: p must lie in (0, 1]");
  require_gamma(gamma);
  if (p == 1.0) return gamma == 0.0 ? -1.0 : 0.0;
  const double one_minus = 1.0 - p;
  const double log_term = gamma == 0.0 ? 0.0 : gamma * std::pow(one_minus, gamma - 1.0) * std::log(p);
  return -std::pow(one_minus, gamma) / p + log_term;
}

double loss_and_logit_grad(std::span<const double> probs, const TargetDistribution& q, LossKind kind,
                           std::span<double> grad) {
  const std::size_t k = probs.size();
  if (q.size() != k || grad.size() != k) throw std::invalid_argument("dimension mismatch between logits and target");

  // a[y] = p_y * dL/dp_y, then dL/dz_j = a_j - p_j * sum_y a_y.
  double loss = 0.0;
  double a_sum = 0.0;
  switch (kind.type) {
    case LossType::cross_entropy:
    case LossType::focal: {
      const double gamma = kind.type == LossType::focal ? kind.param : 0.0;
      require_gamma(gamma);
      for (std::size_t y = 0; y < k; ++y) {
        double a = 0.0;
        if (q[y] > 0.0) {
          const double weight = gamma == 0.0 ? 1.0 : std::pow(1.0 - probs[y], gamma);
          loss -= weight * q[y] * safe_log(probs[y]);
          a = -q[y] * g_unchecked(probs[y], gamma);
        }
        grad[y] = a;
        a_sum += a;
      }
      break;
    }
    case LossType::brier: {
      for (std::size_t y = 0; y < k; ++y) {
        const double d = probs[y] - q[y];
        loss += d * d;
        grad[y] = 2.0 * d * probs[y];
        a_sum += grad[y];
      }
      break;
    }
    case LossType::label_smoothing: {
      const TargetDistribution smooth = label_smooth(q, kind.param);
      return loss_and_logit_grad(probs, smooth, LossKind::ce(), grad);
    }
    default:
      throw std::invalid_argument("unknown loss kind");
  }
  for (std::size_t j = 0; j < k; ++j) grad[j] -= probs[j] * a_sum;
  return loss;
}

LossGradient loss_with_grad(std::span<const double> logits, const TargetDistribution& q, LossKind kind) {
  const ProbVector p = softmax_t(logits, 1.0);
  LossGradient out;
  out.grad_logits.resize(logits.size());
  out.value = loss_and_logit_grad(p.values(), q, kind, out.grad_logits);
  return out;
}

double binary_focal_objective(double x, double q, double gamma) {
  double value = 0.0;
  if (q > 0.0) value -= std::pow(1.0 - x, gamma) * q * std::log(x);
  if (q < 1.0) value -= std::pow(x, gamma) * (1.0 - q) * std::log(1.0 - x);
  return value;
}

double binary_focal_optimum(double q, double gamma) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("binary focal optimum: q must lie in [0, 1]");
  require_gamma(gamma);
  constexpr double kEdge = 1e-12;
  return minimize_1d([&](double x) { return binary_focal_objective(x, q, gamma); }, kEdge, 1.0 - kEdge, 1e-10);
}

}  // namespace focalcal
