#include "objconf/assignment.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace objconf {

void validate(const AssignerConfig& cfg) {
  if (!(cfg.neg_iou >= 0.0 && cfg.neg_iou <= cfg.pos_iou && cfg.pos_iou <= 1.0)) {
    throw std::invalid_argument("assigner thresholds must satisfy 0 <= neg_iou <= pos_iou <= 1");
  }
  if (cfg.num_classes <= 0) throw std::invalid_argument("assigner num_classes must be positive");
}

AssignmentResult assign(std::span<const Anchor> anchors, std::span<const GroundTruthBox> gts,
                        const AssignerConfig& cfg) {
  validate(cfg);
  if (anchors.empty()) throw std::invalid_argument("assign: anchor list is empty");
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gts[g].class_id < 0 || gts[g].class_id >= cfg.num_classes) {
      throw std::invalid_argument("assign: gt " + std::to_string(g) + " has class_id " +
                                  std::to_string(gts[g].class_id) + " outside [0, " +
                                  std::to_string(cfg.num_classes) + ")");
    }
    validate(gts[g].box);
    if (!(gts[g].box.area() > 0.0)) {
      throw std::invalid_argument("assign: gt " + std::to_string(g) + " has zero area");
    }
  }

  AssignmentResult result;
  result.n_total = anchors.size();
  result.labels.assign(anchors.size(), AnchorLabel{});
  result.matched_iou.assign(anchors.size(), 0.0);
  if (gts.empty()) return result;

  std::vector<Box> anchor_boxes;
  anchor_boxes.reserve(anchors.size());
  for (const auto& a : anchors) anchor_boxes.push_back(a.box);
  std::vector<Box> gt_boxes;
  gt_boxes.reserve(gts.size());
  for (const auto& g : gts) gt_boxes.push_back(g.box);

  const IouMatrix ious = iou_matrix(anchor_boxes, gt_boxes);

  for (std::size_t a = 0; a < anchors.size(); ++a) {
    std::size_t best_gt = 0;
    double best = ious(a, 0);
    for (std::size_t g = 1; g < gts.size(); ++g) {
      if (ious(a, g) > best) {
        best = ious(a, g);
        best_gt = g;
      }
    }
    result.matched_iou[a] = best;
    if (best >= cfg.pos_iou) {
      result.labels[a] = {LabelKind::Positive, static_cast<int>(best_gt)};
    } else if (best < cfg.neg_iou) {
      result.labels[a] = {LabelKind::Negative, -1};
    } else {
      result.labels[a] = {LabelKind::Ignore, -1};
    }
  }

  if (cfg.force_match) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      std::size_t best_anchor = 0;
      double best = ious(0, g);
      for (std::size_t a = 1; a < anchors.size(); ++a) {
        if (ious(a, g) > best) {
          best = ious(a, g);
          best_anchor = a;
        }
      }
      if (best > 0.0) {
        result.labels[best_anchor] = {LabelKind::Positive, static_cast<int>(g)};
        result.matched_iou[best_anchor] = best;
      }
    }
  }

  for (const auto& label : result.labels) result.n_pos += label.positive() ? 1 : 0;
  return result;
}

ConfidenceTargets confidence_targets(const AssignmentResult& result) {
  ConfidenceTargets out;
  out.target.assign(result.labels.size(), 0.0);
  out.used.assign(result.labels.size(), false);
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    if (result.labels[i].positive()) {
      out.target[i] = result.matched_iou.at(i);
      out.used[i] = true;
    }
  }
  return out;
}

std::vector<BoxDelta> localization_targets(std::span<const Anchor> anchors,
                                           std::span<const GroundTruthBox> gts,
                                           const AssignmentResult& result) {
  if (result.labels.size() != anchors.size()) {
    throw std::invalid_argument("localization_targets: assignment does not match anchor count");
  }
  std::vector<BoxDelta> out;
  out.reserve(result.n_pos);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const AnchorLabel& label = result.labels[i];
    if (!label.positive()) continue;
    if (label.gt_index < 0 || static_cast<std::size_t>(label.gt_index) >= gts.size()) {
      throw std::invalid_argument("localization_targets: anchor " + std::to_string(i) +
                                  " points at gt " + std::to_string(label.gt_index) +
                                  " but only " + std::to_string(gts.size()) + " gts exist");
    }
    out.push_back(encode(anchors[i].box, gts[static_cast<std::size_t>(label.gt_index)].box));
  }
  return out;
}

}  // namespace objconf
