#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objconf/detection.hpp"
#include "objconf/fusion.hpp"

namespace objconf {

enum class ScoreField { Cls, Fused };

struct NmsParams {
  double iou_threshold = 0.5;
  double score_threshold = 0.05;
  ScoreField score_field = ScoreField::Fused;
  /// Optional cap on detections entering NMS (highest driving scores first).
  std::optional<std::size_t> top_k;
};

void validate(const NmsParams& params);

/// Driving score of a detection. Throws std::invalid_argument if the field
/// is absent.
double score_of(const Detection& det, ScoreField field);

/// Keeps detections whose `field` score is strictly greater than `threshold`,
/// in input order.
std::vector<Detection> score_filter(std::span<const Detection> dets, double threshold,
                                    ScoreField field);

/// Greedy per-class NMS on one image. Candidates are visited by descending
/// driving score (ties by input index); a candidate is suppressed when its
/// IoU with an already kept box of the same class is strictly greater than
/// iou_threshold. Output is ordered by descending score, ties by input index.
/// top_k is not applied here. Throws on mixed image ids.
std::vector<Detection> nms(std::span<const Detection> dets, const NmsParams& params);

/// Optional obj gate, fusion, score filter on the driving field, top-k cap,
/// then NMS. Every survivor carries a fused_score.
std::vector<Detection> inference_pipeline(std::span<const Detection> dets,
                                          const FusionParams& fusion, const NmsParams& params);

/// Splits detections by image_id, ordered by first appearance; relative order
/// within an image is preserved.
std::vector<std::vector<Detection>> group_by_image(std::span<const Detection> dets);

}  // namespace objconf
