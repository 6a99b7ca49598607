#include "objconf/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "objconf/detail/loss_kernels.hpp"

namespace objconf {

namespace {

void require_n_pos(std::size_t n_pos, const char* fn) {
  if (n_pos == 0) throw std::domain_error(std::string(fn) + ": n_pos is 0, loss is undefined");
}

void require_same_size(std::size_t a, std::size_t b, const char* fn) {
  if (a != b) {
    throw std::invalid_argument(std::string(fn) + ": length mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

void require_finite_logits(std::span<const double> logits, const char* fn) {
  for (double z : logits) {
    if (!std::isfinite(z)) throw std::invalid_argument(std::string(fn) + ": non-finite logit");
  }
}

void check_confidence_inputs(const ConfLoss& loss, std::span<const double> logits,
                             std::span<const double> targets, std::span<const SampleLabel> labels,
                             std::size_t n_pos, const char* fn) {
  require_n_pos(n_pos, fn);
  require_same_size(logits.size(), targets.size(), fn);
  require_same_size(logits.size(), labels.size(), fn);
  require_finite_logits(logits, fn);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (labels[i] != SampleLabel::Positive) continue;
    if (!(targets[i] >= 0.0 && targets[i] <= 1.0)) {
      throw std::invalid_argument(std::string(fn) + ": target " + std::to_string(i) +
                                  " outside [0, 1]");
    }
  }
  switch (loss.kind) {
    case ConfLoss::Kind::GFocal:
      if (!(loss.param >= 0.0)) throw std::invalid_argument("gfocal beta must be >= 0");
      break;
    case ConfLoss::Kind::WeightedCE:
      if (!(loss.param >= 0.0)) throw std::invalid_argument("weighted CE weight w must be >= 0");
      break;
    case ConfLoss::Kind::SmoothL1:
      if (!(loss.param > 0.0)) throw std::invalid_argument("smooth L1 threshold must be > 0");
      break;
    default: break;
  }
}

void check_focal_inputs(std::span<const double> logits, std::span<const SampleLabel> labels,
                        std::size_t n_pos, const FocalParams& params) {
  require_n_pos(n_pos, "focal_loss");
  require_same_size(logits.size(), labels.size(), "focal_loss");
  require_finite_logits(logits, "focal_loss");
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0) || !(params.gamma >= 0.0)) {
    throw std::invalid_argument("focal_loss: need alpha in [0, 1] and gamma >= 0");
  }
}

}  // namespace

double sigmoid(double z) { return detail::sigmoid(z); }

double focal_loss(std::span<const double> logits, std::span<const SampleLabel> labels,
                  std::size_t n_pos, const FocalParams& params) {
  check_focal_inputs(logits, labels, n_pos, params);
  return detail::focal_batch(logits, labels, n_pos, params);
}

std::vector<double> focal_loss_grad(std::span<const double> logits,
                                    std::span<const SampleLabel> labels, std::size_t n_pos,
                                    const FocalParams& params) {
  check_focal_inputs(logits, labels, n_pos, params);
  std::vector<double> grad(logits.size(), 0.0);
  const double norm = 1.0 / static_cast<double>(n_pos);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] == SampleLabel::Ignore) continue;
    grad[i] = norm * detail::focal_dz(logits[i], labels[i] == SampleLabel::Positive, params.alpha,
                                      params.gamma);
  }
  return grad;
}

double l1_localization_loss(std::span<const BoxDelta> pred, std::span<const BoxDelta> target,
                            std::size_t n_pos) {
  require_n_pos(n_pos, "l1_localization_loss");
  require_same_size(pred.size(), target.size(), "l1_localization_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sum += std::abs(pred[i].tx - target[i].tx) + std::abs(pred[i].ty - target[i].ty) +
           std::abs(pred[i].tw - target[i].tw) + std::abs(pred[i].th - target[i].th);
  }
  return sum / static_cast<double>(n_pos);
}

std::vector<BoxDelta> l1_localization_grad(std::span<const BoxDelta> pred,
                                           std::span<const BoxDelta> target, std::size_t n_pos) {
  require_n_pos(n_pos, "l1_localization_grad");
  require_same_size(pred.size(), target.size(), "l1_localization_grad");
  const double norm = 1.0 / static_cast<double>(n_pos);
  auto sgn = [norm](double d) { return d > 0.0 ? norm : (d < 0.0 ? -norm : 0.0); };
  std::vector<BoxDelta> grad;
  grad.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    grad.push_back({sgn(pred[i].tx - target[i].tx), sgn(pred[i].ty - target[i].ty),
                    sgn(pred[i].tw - target[i].tw), sgn(pred[i].th - target[i].th)});
  }
  return grad;
}

double confidence_loss(const ConfLoss& loss, std::span<const double> logits,
                       std::span<const double> targets, std::span<const SampleLabel> labels,
                       std::size_t n_pos) {
  check_confidence_inputs(loss, logits, targets, labels, n_pos, "confidence_loss");
  return detail::confidence_batch(loss, logits, targets, labels, n_pos);
}

std::vector<double> confidence_loss_grad(const ConfLoss& loss, std::span<const double> logits,
                                         std::span<const double> targets,
                                         std::span<const SampleLabel> labels, std::size_t n_pos) {
  check_confidence_inputs(loss, logits, targets, labels, n_pos, "confidence_loss_grad");
  std::vector<double> grad(logits.size(), 0.0);
  const double norm = 1.0 / static_cast<double>(n_pos);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    grad[i] = norm * detail::confidence_term_dz(loss, logits[i], targets[i], labels[i]);
  }
  return grad;
}

double ce_confidence_loss(std::span<const double> logits, std::span<const double> targets,
                          std::span<const SampleLabel> labels, std::size_t n_pos) {
  return confidence_loss(ConfLoss::ce(), logits, targets, labels, n_pos);
}

double weighted_ce_confidence_loss(std::span<const double> logits, std::span<const double> targets,
                                   std::span<const SampleLabel> labels, double w,
                                   std::size_t n_pos) {
  return confidence_loss(ConfLoss::weighted_ce(w), logits, targets, labels, n_pos);
}

double gfocal_loss(std::span<const double> logits, std::span<const double> targets,
                   std::span<const SampleLabel> labels, std::size_t n_pos, double beta) {
  return confidence_loss(ConfLoss::gfocal(beta), logits, targets, labels, n_pos);
}

double sigmoid_regression_loss(RegressionLoss kind, double y, double z) {
  if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("regression target must be in [0, 1]");
  switch (kind) {
    case RegressionLoss::L1: return detail::l1_prob(z, y);
    case RegressionLoss::L2: return detail::l2_prob(z, y);
    case RegressionLoss::CE: return detail::bce(z, y);
  }
  throw std::invalid_argument("unknown regression loss kind");
}

std::vector<double> sigmoid_regression_grad(RegressionLoss kind, double y, double z,
                                            std::span<const double> x) {
  if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("regression target must be in [0, 1]");
  if (!std::isfinite(z)) throw std::invalid_argument("sigmoid_regression_grad: non-finite z");
  const double h = detail::sigmoid(z);
  const double dh = h * detail::sigmoid(-z);
  double scale = 0.0;
  switch (kind) {
    case RegressionLoss::L1: scale = h > y ? dh : (h < y ? -dh : 0.0); break;
    case RegressionLoss::L2: scale = (h - y) * dh; break;
    case RegressionLoss::CE: scale = h - y; break;
  }
  std::vector<double> grad(x.begin(), x.end());
  for (double& g : grad) g *= scale;
  return grad;
}

LossBreakdown total_loss(double classification, double localization, double object_confidence) {
  for (double v : {classification, localization, object_confidence}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("total_loss: components must be finite and non-negative");
    }
  }
  return {classification, localization, object_confidence,
          classification + localization + object_confidence};
}

}  // namespace objconf
