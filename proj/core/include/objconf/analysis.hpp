#pragma once

// Classification/localization misalignment statistics: box counts under
// score and IoU thresholds before and after NMS, and how the share of boxes
// meeting a condition moves across NMS.

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "objconf/assignment.hpp"
#include "objconf/detection.hpp"
#include "objconf/geometry.hpp"

namespace objconf {

struct Condition {
  enum class Kind { ClsAbove, IouAbove };

  Kind kind = Kind::ClsAbove;
  double threshold = 0.0;

  static Condition cls_above(double t) { return {Kind::ClsAbove, t}; }
  static Condition iou_above(double t) { return {Kind::IouAbove, t}; }

  auto operator<=>(const Condition&) const = default;
  bool operator==(const Condition&) const = default;
};

/// "cls>0.5" / "iou>0.7". Throws std::invalid_argument on malformed text.
Condition parse_condition(std::string_view text);
std::string to_string(const Condition& c);

/// Score threshold that defines a stage's total box count.
inline constexpr double kTotalScoreThreshold = 0.05;

/// The ten conditions used for the per-image count table: cls > 0.05 and
/// 0.5..0.9, iou > 0.5..0.9.
std::vector<Condition> default_conditions();

struct ImageStats {
  std::string image_id;
  /// Anchors whose max IoU with ground truth exceeds positive_iou.
  std::optional<std::size_t> positive_num;
  double positive_iou = 0.5;
  std::map<Condition, std::size_t> before;
  std::map<Condition, std::size_t> after;
  /// Boxes with cls > 0.05 at each stage.
  std::size_t before_total = 0;
  std::size_t after_total = 0;
};

/// Max IoU of `box` over all ground truths regardless of class; 0 if none.
double max_iou(const Box& box, std::span<const GroundTruthBox> gts);

/// Counts detections meeting each condition. IoU conditions use each
/// detection's max IoU over `gts`. Passing anchors fills positive_num.
/// IoU conditions with no ground truth yield zero counts and a warning.
/// Throws if a detection belongs to another image.
ImageStats compute_image_stats(const std::string& image_id, std::span<const Detection> before,
                               std::span<const Detection> after,
                               std::span<const GroundTruthBox> gts,
                               std::optional<std::span<const Anchor>> anchors,
                               std::span<const Condition> conditions,
                               std::vector<std::string>* warnings = nullptr);

/// Violations of count monotonicity (within a condition family, and
/// after <= before). Empty for consistent stats.
std::vector<std::string> consistency_issues(const ImageStats& stats);

struct ProportionRow {
  std::string image_id;
  double before_pct = 0.0;
  double after_pct = 0.0;
  double delta_pp = 0.0;
};

struct RejectedRow {
  std::string image_id;
  std::string reason;
};

struct ProportionReport {
  Condition condition;
  std::vector<ProportionRow> per_image;
  /// Arithmetic mean of delta_pp over accepted rows; NaN when none.
  double average_delta_pp = 0.0;
  std::vector<RejectedRow> rejected;
};

/// before_pct = 100 * before[c] / before_total, likewise after; images with a
/// zero total or without the condition are rejected with a reason.
ProportionReport proportions_from_counts(std::span<const ImageStats> stats, const Condition& c);

/// Two-decimal half-up rounding used when reporting percentages.
double round_pct(double value);

/// Long-form count table: header `image_id,stage,condition,count`, stage in
/// {positive, before, after}. Totals are read from the cls>0.05 rows.
/// Throws ParseError (with line number) on malformed input.
std::vector<ImageStats> parse_count_table(std::istream& in);
std::vector<ImageStats> ingest_count_table(const std::filesystem::path& path);

/// Inverse of parse_count_table. Images in input order; rows per image:
/// positive, then before and after conditions in sorted order.
void emit_count_table(std::ostream& out, std::span<const ImageStats> stats);

/// Wide layout with one column per image and one row per (stage, condition).
void emit_table_layout(std::ostream& out, std::span<const ImageStats> stats);

struct ScatterPoint {
  std::string image_id;
  double iou = 0.0;
  double cls = 0.0;
};

/// One (max IoU, cls score) point per detection, in input order.
std::vector<ScatterPoint> misalignment_summary(std::span<const Detection> dets,
                                               std::span<const GroundTruthBox> gts);
void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points);

/// Shortest round-trip decimal representation of a double.
std::string format_number(double value);

}  // namespace objconf
