#pragma once

// Per-sample loss kernels, generic over the floating type so the same value
// code can be evaluated in extended precision by gradient checks.
// Every kernel takes the pre-sigmoid logit z.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>

#include "objconf/loss_types.hpp"

namespace objconf::detail {

inline constexpr double kProbClamp = 1e-12;

template <std::floating_point T>
T sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

// log(sigmoid(z)) without forming sigmoid(z).
template <std::floating_point T>
T log_sigmoid(T z) {
  if (z >= T(0)) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

// log p with p clamped to [kProbClamp, 1 - kProbClamp]; `clamped` reports
// whether the bound was active (the term is then constant in z).
template <std::floating_point T>
T clamped_log_sigmoid(T z, bool* clamped = nullptr) {
  static const T lo = std::log(T(kProbClamp));
  static const T hi = std::log1p(-T(kProbClamp));
  const T v = log_sigmoid(z);
  const bool c = v < lo || v > hi;
  if (clamped) *clamped = c;
  return std::clamp(v, lo, hi);
}

// Binary cross-entropy against a continuous target y in [0, 1].
template <std::floating_point T>
T bce(T z, T y) {
  return -(y * clamped_log_sigmoid(z) + (T(1) - y) * clamped_log_sigmoid(-z));
}

template <std::floating_point T>
T bce_dz(T z, T y) {
  bool cp = false;
  bool cq = false;
  clamped_log_sigmoid(z, &cp);
  clamped_log_sigmoid(-z, &cq);
  const T p = sigmoid(z);
  const T q = sigmoid(-z);
  return -(cp ? T(0) : y * q) + (cq ? T(0) : (T(1) - y) * p);
}

// Focal term alpha_t (1 - p_t)^gamma (-log p_t); p_t = p for positives and
// 1 - p for negatives.
template <std::floating_point T>
T focal(T z, bool positive, T alpha, T gamma) {
  const T zt = positive ? z : -z;
  const T at = positive ? alpha : T(1) - alpha;
  bool clamped = false;
  const T log_pt = clamped_log_sigmoid(zt, &clamped);
  const T pt = clamped ? std::exp(log_pt) : sigmoid(zt);
  const T one_minus_pt = clamped ? T(1) - pt : sigmoid(-zt);
  return at * std::pow(one_minus_pt, gamma) * -log_pt;
}

template <std::floating_point T>
T focal_dz(T z, bool positive, T alpha, T gamma) {
  const T zt = positive ? z : -z;
  const T at = positive ? alpha : T(1) - alpha;
  bool clamped = false;
  const T log_pt = clamped_log_sigmoid(zt, &clamped);
  if (clamped) return T(0);
  const T pt = sigmoid(zt);
  const T qt = sigmoid(-zt);
  // d/dzt [ at qt^g (-log pt) ] = at qt^g (g pt log pt - qt); dzt/dz = +-1.
  const T d = at * std::pow(qt, gamma) * (gamma * pt * log_pt - qt);
  return positive ? d : -d;
}

// |y - p|^beta * BCE(p, y), with 0^0 = 1.
template <std::floating_point T>
T gfocal(T z, T y, T beta) {
  const T diff = std::abs(y - sigmoid(z));
  return std::pow(diff, beta) * bce(z, y);
}

template <std::floating_point T>
T gfocal_dz(T z, T y, T beta) {
  const T p = sigmoid(z);
  const T d = p - y;
  if (d == T(0)) return T(0);
  const T ad = std::abs(d);
  const T sign = d > T(0) ? T(1) : T(-1);
  const T modulating = std::pow(ad, beta);
  const T dmod = beta == T(0) ? T(0) : beta * std::pow(ad, beta - T(1)) * sign * p * sigmoid(-z);
  return dmod * bce(z, y) + modulating * bce_dz(z, y);
}

template <std::floating_point T>
T l1_prob(T z, T y) {
  return std::abs(sigmoid(z) - y);
}

template <std::floating_point T>
T l1_prob_dz(T z, T y) {
  const T p = sigmoid(z);
  if (p == y) return T(0);
  return (p > y ? T(1) : T(-1)) * p * sigmoid(-z);
}

template <std::floating_point T>
T l2_prob(T z, T y) {
  const T d = y - sigmoid(z);
  return T(0.5) * d * d;
}

template <std::floating_point T>
T l2_prob_dz(T z, T y) {
  const T p = sigmoid(z);
  return (p - y) * p * sigmoid(-z);
}

// Smooth L1 on the probability residual, quadratic below `threshold`.
template <std::floating_point T>
T smooth_l1_prob(T z, T y, T threshold) {
  const T d = std::abs(sigmoid(z) - y);
  return d < threshold ? T(0.5) * d * d / threshold : d - T(0.5) * threshold;
}

template <std::floating_point T>
T smooth_l1_prob_dz(T z, T y, T threshold) {
  const T p = sigmoid(z);
  const T d = p - y;
  const T hp = p * sigmoid(-z);
  if (std::abs(d) < threshold) return d / threshold * hp;
  if (d == T(0)) return T(0);
  return (d > T(0) ? T(1) : T(-1)) * hp;
}


// Batch reductions shared by the double API and extended-precision checks.
// Sums run in index order so results are bit-reproducible.

template <std::floating_point T>
T confidence_term(const ConfLoss& loss, T z, T y, SampleLabel label) {
  switch (loss.kind) {
    case ConfLoss::Kind::L1: return label == SampleLabel::Positive ? l1_prob(z, y) : T(0);
    case ConfLoss::Kind::SmoothL1:
      return label == SampleLabel::Positive ? smooth_l1_prob(z, y, T(loss.param)) : T(0);
    case ConfLoss::Kind::L2: return label == SampleLabel::Positive ? l2_prob(z, y) : T(0);
    case ConfLoss::Kind::GFocal:
      return label == SampleLabel::Positive ? gfocal(z, y, T(loss.param)) : T(0);
    case ConfLoss::Kind::CE: return label == SampleLabel::Positive ? bce(z, y) : T(0);
    case ConfLoss::Kind::WeightedCE:
      if (label == SampleLabel::Positive) return bce(z, y);
      if (label == SampleLabel::Negative) return T(loss.param) * bce(z, T(0));
      return T(0);
  }
  return T(0);
}

template <std::floating_point T>
T confidence_term_dz(const ConfLoss& loss, T z, T y, SampleLabel label) {
  switch (loss.kind) {
    case ConfLoss::Kind::L1: return label == SampleLabel::Positive ? l1_prob_dz(z, y) : T(0);
    case ConfLoss::Kind::SmoothL1:
      return label == SampleLabel::Positive ? smooth_l1_prob_dz(z, y, T(loss.param)) : T(0);
    case ConfLoss::Kind::L2: return label == SampleLabel::Positive ? l2_prob_dz(z, y) : T(0);
    case ConfLoss::Kind::GFocal:
      return label == SampleLabel::Positive ? gfocal_dz(z, y, T(loss.param)) : T(0);
    case ConfLoss::Kind::CE: return label == SampleLabel::Positive ? bce_dz(z, y) : T(0);
    case ConfLoss::Kind::WeightedCE:
      if (label == SampleLabel::Positive) return bce_dz(z, y);
      if (label == SampleLabel::Negative) return T(loss.param) * bce_dz(z, T(0));
      return T(0);
  }
  return T(0);
}

template <std::floating_point T>
T confidence_batch(const ConfLoss& loss, std::span<const T> logits, std::span<const T> targets,
                   std::span<const SampleLabel> labels, std::size_t n_pos) {
  T sum = T(0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    sum += confidence_term(loss, logits[i], targets[i], labels[i]);
  }
  return sum / static_cast<T>(n_pos);
}

template <std::floating_point T>
T focal_batch(std::span<const T> logits, std::span<const SampleLabel> labels, std::size_t n_pos,
              const FocalParams& params) {
  T sum = T(0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] == SampleLabel::Ignore) continue;
    sum += focal(logits[i], labels[i] == SampleLabel::Positive, T(params.alpha), T(params.gamma));
  }
  return sum / static_cast<T>(n_pos);
}

}  // namespace objconf::detail
