#pragma once

#include <cstdint>

namespace objconf {

enum class SampleLabel : std::uint8_t { Positive, Negative, Ignore };

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

/// Object-confidence loss family. `param` is the GFocal exponent beta, the
/// WeightedCE negative-sample weight w, or the SmoothL1 threshold.
struct ConfLoss {
  enum class Kind : std::uint8_t { L1, SmoothL1, L2, GFocal, WeightedCE, CE };

  Kind kind = Kind::CE;
  double param = 0.0;

  static constexpr ConfLoss l1() { return {Kind::L1, 0.0}; }
  static constexpr ConfLoss smooth_l1(double threshold = 1.0) { return {Kind::SmoothL1, threshold}; }
  static constexpr ConfLoss l2() { return {Kind::L2, 0.0}; }
  static constexpr ConfLoss gfocal(double beta = 2.0) { return {Kind::GFocal, beta}; }
  static constexpr ConfLoss weighted_ce(double w) { return {Kind::WeightedCE, w}; }
  static constexpr ConfLoss ce() { return {Kind::CE, 0.0}; }
};

/// Losses of a sigmoid output h = sigmoid(theta . x) against a target y.
enum class RegressionLoss : std::uint8_t { L1, L2, CE };

}  // namespace objconf
