#pragma once

// Detection losses evaluated on pre-sigmoid logits, each paired with its
// analytic gradient with respect to those logits.
//
// Batch losses are normalised by the caller-supplied positive count n_pos and
// throw std::domain_error when n_pos == 0; the caller chooses the fallback.
// Probabilities inside logarithms are clamped to [1e-12, 1 - 1e-12].

#include <cstddef>
#include <span>
#include <vector>

#include "objconf/geometry.hpp"
#include "objconf/loss_types.hpp"

namespace objconf {

/// Stable for any finite z; never overflows.
double sigmoid(double z);

/// RetinaNet focal loss:
///   (1/n_pos) sum_i alpha_t (1 - p_t)^gamma (-log p_t)
/// with p_t = p, alpha_t = alpha for positives and p_t = 1 - p,
/// alpha_t = 1 - alpha for negatives. Ignore labels contribute nothing.
double focal_loss(std::span<const double> logits, std::span<const SampleLabel> labels,
                  std::size_t n_pos, const FocalParams& params = {});
std::vector<double> focal_loss_grad(std::span<const double> logits,
                                    std::span<const SampleLabel> labels, std::size_t n_pos,
                                    const FocalParams& params = {});

/// (1/n_pos) sum_i sum_m |pred_i^m - target_i^m| over the four offsets.
double l1_localization_loss(std::span<const BoxDelta> pred, std::span<const BoxDelta> target,
                            std::size_t n_pos);
/// Subgradient with respect to `pred`; 0 where a residual is exactly 0.
std::vector<BoxDelta> l1_localization_grad(std::span<const BoxDelta> pred,
                                           std::span<const BoxDelta> target, std::size_t n_pos);

/// Positives-only binary cross-entropy against continuous IoU targets:
///   -(1/n_pos) sum_{i in pos} [y_i log p_i + (1 - y_i) log(1 - p_i)]
/// Entries whose label is not Positive are masked out.
double ce_confidence_loss(std::span<const double> logits, std::span<const double> targets,
                          std::span<const SampleLabel> labels, std::size_t n_pos);

/// Cross-entropy over positives (target y_i) plus negatives (target 0)
/// weighted by w, still normalised by n_pos. w = 0 reduces to
/// ce_confidence_loss.
double weighted_ce_confidence_loss(std::span<const double> logits, std::span<const double> targets,
                                   std::span<const SampleLabel> labels, double w,
                                   std::size_t n_pos);

/// (1/n_pos) sum_{i in pos} |y_i - p_i|^beta CE(p_i, y_i); zero exactly when
/// p = y on every positive.
double gfocal_loss(std::span<const double> logits, std::span<const double> targets,
                   std::span<const SampleLabel> labels, std::size_t n_pos, double beta = 2.0);

/// Any member of the object-confidence family. Regression-style kinds (L1,
/// SmoothL1, L2) act on the probability residual p - y of positives.
double confidence_loss(const ConfLoss& loss, std::span<const double> logits,
                       std::span<const double> targets, std::span<const SampleLabel> labels,
                       std::size_t n_pos);
std::vector<double> confidence_loss_grad(const ConfLoss& loss, std::span<const double> logits,
                                         std::span<const double> targets,
                                         std::span<const SampleLabel> labels, std::size_t n_pos);

/// Loss of h = sigmoid(z) against y: |y - h|, (y - h)^2 / 2, or cross-entropy.
double sigmoid_regression_loss(RegressionLoss kind, double y, double z);

/// Gradient with respect to theta when z = theta . x:
///   L1 -> sign(h - y) h (1 - h) x   (0 at h == y)
///   L2 -> (h - y) h (1 - h) x
///   CE -> (h - y) x
std::vector<double> sigmoid_regression_grad(RegressionLoss kind, double y, double z,
                                            std::span<const double> x);

struct LossBreakdown {
  double classification = 0.0;
  double localization = 0.0;
  double object_confidence = 0.0;
  double total = 0.0;
};

/// Unit-weight sum. Throws std::invalid_argument on negative or non-finite
/// components.
LossBreakdown total_loss(double classification, double localization, double object_confidence);

}  // namespace objconf
