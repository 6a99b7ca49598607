#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "objconf/geometry.hpp"

namespace objconf {

struct GroundTruthBox {
  Box box;
  int class_id = 0;
};

struct AssignerConfig {
  double pos_iou = 0.5;
  double neg_iou = 0.4;
  /// Give every ground truth at least one positive: its highest-IoU anchor,
  /// provided that IoU is non-zero.
  bool force_match = true;
  int num_classes = 80;
};

void validate(const AssignerConfig& cfg);

enum class LabelKind { Positive, Negative, Ignore };

struct AnchorLabel {
  LabelKind kind = LabelKind::Negative;
  /// Index into the ground-truth list; -1 unless kind == Positive.
  int gt_index = -1;

  bool positive() const noexcept { return kind == LabelKind::Positive; }
  friend bool operator==(const AnchorLabel&, const AnchorLabel&) = default;
};

struct AssignmentResult {
  std::vector<AnchorLabel> labels;
  /// Max IoU over ground truths (IoU with the assigned gt for positives).
  std::vector<double> matched_iou;
  std::size_t n_pos = 0;
  std::size_t n_total = 0;
};

/// Max-IoU assignment: Positive if best IoU >= pos_iou, Negative if below
/// neg_iou, Ignore in between. Equal IoUs resolve to the lowest gt index.
/// With force_match, each gt's best anchor (lowest index on ties) becomes
/// Positive for that gt, processed in gt order so later gts win conflicts.
AssignmentResult assign(std::span<const Anchor> anchors, std::span<const GroundTruthBox> gts,
                        const AssignerConfig& cfg = {});

struct ConfidenceTargets {
  std::vector<double> target;
  /// True where the target enters the positives-only confidence loss.
  std::vector<bool> used;
};

/// Object-confidence regression targets: IoU with the matched gt for
/// positives, 0 (and unused) elsewhere.
ConfidenceTargets confidence_targets(const AssignmentResult& result);

/// encode(anchor, matched gt) for every positive anchor, in anchor order.
std::vector<BoxDelta> localization_targets(std::span<const Anchor> anchors,
                                           std::span<const GroundTruthBox> gts,
                                           const AssignmentResult& result);

}  // namespace objconf
