#pragma once

// File formats: JSON lines for detections and ground truth, JSON for anchor
// configs and proportion reports. Readers throw ParseError with the 1-based
// line number of the offending record.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "objconf/analysis.hpp"
#include "objconf/assignment.hpp"
#include "objconf/detection.hpp"
#include "objconf/geometry.hpp"

namespace objconf {

/// {"image_id": str, "box": [x1,y1,x2,y2], "class_id": int,
///  "cls_score": float, "obj_score": float|null, "fused_score": float?}
/// Blank lines are skipped.
std::vector<Detection> read_detections(std::istream& in);
void write_detection(std::ostream& out, const Detection& det);
void write_detections(std::ostream& out, std::span<const Detection> dets);

struct LabeledGroundTruth {
  std::string image_id;
  GroundTruthBox gt;
};

/// {"image_id": str, "box": [x1,y1,x2,y2], "class_id": int}
std::vector<LabeledGroundTruth> read_ground_truth(std::istream& in);

/// Ground truth of one image, in file order.
std::vector<GroundTruthBox> ground_truth_for(std::span<const LabeledGroundTruth> all,
                                             const std::string& image_id);

/// {"strides": [...], "base_sizes": [...], "scales": [...], "ratios": [...]}
/// Missing keys fall back to the RetinaNet defaults. Throws ParseError.
AnchorGridConfig parse_anchor_config(std::string_view json_text);
std::string anchor_config_to_json(const AnchorGridConfig& config);

/// One JSON object per anchor: {"level", "row", "col", "box"}.
void write_anchors(std::ostream& out, std::span<const Anchor> anchors);

/// One JSON object per anchor: {"anchor", "label", "gt_index",
/// "matched_iou", "confidence_target"}; positives also carry "delta".
void write_assignment(std::ostream& out, const std::string& image_id,
                      std::span<const Anchor> anchors, std::span<const GroundTruthBox> gts,
                      const AssignmentResult& result);

/// {"reports": [{"condition", "rows": [...], "average_delta_pp", "rejected"}]}
/// with percentages rounded to two decimals.
void write_proportion_reports(std::ostream& out, std::span<const ProportionReport> reports);

}  // namespace objconf
