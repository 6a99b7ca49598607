#pragma once

#include <optional>
#include <span>
#include <vector>

#include "objconf/detection.hpp"

namespace objconf {

enum class FusionMode {
  Product,        ///< obj^alpha * cls^(1 - alpha)
  PlainMultiply,  ///< obj * cls
  ClsOnly,        ///< cls
};

struct FusionParams {
  FusionMode mode = FusionMode::Product;
  double alpha = 0.4;
  /// When set, detections must have obj_score strictly above this value.
  std::optional<double> obj_gate;
};

void validate(const FusionParams& params);

/// Score that ranks detections for NMS. Both inputs must lie in [0, 1];
/// 0^0 is taken as 1 so alpha = 0 and alpha = 1 are exact at zero scores.
double fuse(double cls, double obj, const FusionParams& params);

/// Keeps detections with obj_score > threshold, preserving order. Throws if
/// any detection lacks an obj_score.
std::vector<Detection> gate(std::span<const Detection> dets, double threshold);

/// Sets fused_score on every detection. obj_score is required unless the
/// mode is ClsOnly.
void apply_fusion(std::span<Detection> dets, const FusionParams& params);

}  // namespace objconf
