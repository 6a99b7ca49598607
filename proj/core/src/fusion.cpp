#include "objconf/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace objconf {

namespace {

bool is_score(double s) { return s >= 0.0 && s <= 1.0; }

}  // namespace

void validate(const FusionParams& params) {
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) {
    throw std::invalid_argument("fusion alpha must be in [0, 1]");
  }
  if (params.obj_gate && !std::isfinite(*params.obj_gate)) {
    throw std::invalid_argument("fusion obj_gate must be finite");
  }
}

double fuse(double cls, double obj, const FusionParams& params) {
  if (!is_score(cls) || !is_score(obj)) {
    throw std::invalid_argument("fuse: scores must be in [0, 1] (cls=" + std::to_string(cls) +
                                ", obj=" + std::to_string(obj) + ")");
  }
  switch (params.mode) {
    case FusionMode::ClsOnly: return cls;
    case FusionMode::PlainMultiply: return obj * cls;
    case FusionMode::Product: break;
  }
  validate(params);
  // std::pow(0, 0) == 1, which is the convention wanted at the boundaries.
  if (params.alpha == 0.0) return cls;
  if (params.alpha == 1.0) return obj;
  if (obj == cls) return cls;
  const double fused = std::pow(obj, params.alpha) * std::pow(cls, 1.0 - params.alpha);
  // A weighted geometric mean lies between its bases; pow rounding can
  // step an ulp outside.
  return std::clamp(fused, std::min(cls, obj), std::max(cls, obj));
}

std::vector<Detection> gate(std::span<const Detection> dets, double threshold) {
  std::vector<Detection> kept;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!dets[i].obj_score) {
      throw std::invalid_argument("gate: detection " + std::to_string(i) + " has no obj_score");
    }
    if (*dets[i].obj_score > threshold) kept.push_back(dets[i]);
  }
  return kept;
}

void apply_fusion(std::span<Detection> dets, const FusionParams& params) {
  validate(params);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    Detection& d = dets[i];
    if (params.mode == FusionMode::ClsOnly) {
      d.fused_score = fuse(d.cls_score, d.obj_score.value_or(d.cls_score), params);
      continue;
    }
    if (!d.obj_score) {
      throw std::invalid_argument("fusion: detection " + std::to_string(i) +
                                  " has no obj_score but the fusion mode needs one");
    }
    d.fused_score = fuse(d.cls_score, *d.obj_score, params);
  }
}

}  // namespace objconf
