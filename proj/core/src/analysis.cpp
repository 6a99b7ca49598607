#include "objconf/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "objconf/error.hpp"

namespace objconf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool satisfies(const Condition& c, double cls, double best_iou) {
  return c.kind == Condition::Kind::ClsAbove ? cls > c.threshold : best_iou > c.threshold;
}

std::size_t count_matching(const Condition& c, std::span<const Detection> dets,
                           std::span<const double> ious) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < dets.size(); ++i) n += satisfies(c, dets[i].cls_score, ious[i]) ? 1 : 0;
  return n;
}

std::vector<double> best_ious(std::span<const Detection> dets, std::span<const GroundTruthBox> gts) {
  std::vector<double> out;
  out.reserve(dets.size());
  for (const auto& d : dets) out.push_back(max_iou(d.box, gts));
  return out;
}

void require_image(std::span<const Detection> dets, const std::string& image_id, const char* which) {
  for (const auto& d : dets) {
    if (d.image_id != image_id) {
      throw std::invalid_argument(std::string("compute_image_stats: ") + which +
                                  " detection from image \"" + d.image_id + "\", expected \"" +
                                  image_id + "\"");
    }
  }
}

// Sorted map of counts for one stage, with the total guaranteed present.
std::map<Condition, std::size_t> with_total(const std::map<Condition, std::size_t>& counts,
                                            std::size_t total) {
  auto out = counts;
  out.try_emplace(Condition::cls_above(kTotalScoreThreshold), total);
  return out;
}

void check_family_monotone(const std::map<Condition, std::size_t>& counts, const char* stage,
                           const std::string& image_id, std::vector<std::string>& issues) {
  // std::map orders by (kind, threshold) so each family is contiguous and ascending.
  const Condition* prev = nullptr;
  std::size_t prev_count = 0;
  for (const auto& [cond, count] : counts) {
    if (prev && prev->kind == cond.kind && count > prev_count) {
      issues.push_back(image_id + ": " + stage + " count for " + to_string(cond) + " (" +
                       std::to_string(count) + ") exceeds " + to_string(*prev) + " (" +
                       std::to_string(prev_count) + ")");
    }
    prev = &cond;
    prev_count = count;
  }
}

}  // namespace

Condition parse_condition(std::string_view text) {
  text = trim(text);
  Condition c;
  if (text.starts_with("cls>")) {
    c.kind = Condition::Kind::ClsAbove;
  } else if (text.starts_with("iou>")) {
    c.kind = Condition::Kind::IouAbove;
  } else {
    throw std::invalid_argument("condition \"" + std::string(text) +
                                "\" must look like cls>T or iou>T");
  }
  const std::string_view num = text.substr(4);
  const auto* end = num.data() + num.size();
  auto [ptr, ec] = std::from_chars(num.data(), end, c.threshold);
  if (ec != std::errc{} || ptr != end || num.empty()) {
    throw std::invalid_argument("condition \"" + std::string(text) + "\" has a malformed threshold");
  }
  if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) {
    throw std::invalid_argument("condition \"" + std::string(text) + "\" threshold outside [0, 1]");
  }
  return c;
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, ptr);
}

std::string to_string(const Condition& c) {
  return (c.kind == Condition::Kind::ClsAbove ? "cls>" : "iou>") + format_number(c.threshold);
}

std::vector<Condition> default_conditions() {
  std::vector<Condition> out{Condition::cls_above(kTotalScoreThreshold)};
  for (double t : {0.5, 0.6, 0.7, 0.8, 0.9}) out.push_back(Condition::cls_above(t));
  for (double t : {0.5, 0.6, 0.7, 0.8, 0.9}) out.push_back(Condition::iou_above(t));
  return out;
}

double max_iou(const Box& box, std::span<const GroundTruthBox> gts) {
  double best = 0.0;
  for (const auto& g : gts) best = std::max(best, iou(box, g.box));
  return best;
}

ImageStats compute_image_stats(const std::string& image_id, std::span<const Detection> before,
                               std::span<const Detection> after,
                               std::span<const GroundTruthBox> gts,
                               std::optional<std::span<const Anchor>> anchors,
                               std::span<const Condition> conditions,
                               std::vector<std::string>* warnings) {
  require_image(before, image_id, "before-NMS");
  require_image(after, image_id, "after-NMS");

  ImageStats stats;
  stats.image_id = image_id;

  const bool needs_iou = std::any_of(conditions.begin(), conditions.end(), [](const Condition& c) {
    return c.kind == Condition::Kind::IouAbove;
  });
  if (needs_iou && gts.empty() && warnings) {
    warnings->push_back("image " + image_id +
                        ": IoU conditions requested without ground truth; IoU counts are zero");
  }

  const std::vector<double> iou_before = best_ious(before, gts);
  const std::vector<double> iou_after = best_ious(after, gts);
  for (const auto& c : conditions) {
    stats.before[c] = count_matching(c, before, iou_before);
    stats.after[c] = count_matching(c, after, iou_after);
  }
  const Condition total = Condition::cls_above(kTotalScoreThreshold);
  stats.before_total = count_matching(total, before, iou_before);
  stats.after_total = count_matching(total, after, iou_after);

  if (anchors) {
    std::size_t positives = 0;
    for (const auto& a : *anchors) positives += max_iou(a.box, gts) > stats.positive_iou ? 1 : 0;
    stats.positive_num = positives;
  }
  return stats;
}

std::vector<std::string> consistency_issues(const ImageStats& stats) {
  std::vector<std::string> issues;
  const auto before = with_total(stats.before, stats.before_total);
  const auto after = with_total(stats.after, stats.after_total);
  check_family_monotone(before, "before", stats.image_id, issues);
  check_family_monotone(after, "after", stats.image_id, issues);
  for (const auto& [cond, count] : after) {
    auto it = before.find(cond);
    if (it != before.end() && count > it->second) {
      issues.push_back(stats.image_id + ": after-NMS count for " + to_string(cond) + " (" +
                       std::to_string(count) + ") exceeds before-NMS (" +
                       std::to_string(it->second) + ")");
    }
  }
  return issues;
}

ProportionReport proportions_from_counts(std::span<const ImageStats> stats, const Condition& c) {
  ProportionReport report;
  report.condition = c;
  double sum = 0.0;
  for (const auto& s : stats) {
    if (s.before_total == 0 || s.after_total == 0) {
      report.rejected.push_back({s.image_id, "zero cls>0.05 total (before " +
                                                 std::to_string(s.before_total) + ", after " +
                                                 std::to_string(s.after_total) + ")"});
      continue;
    }
    const auto before = with_total(s.before, s.before_total);
    const auto after = with_total(s.after, s.after_total);
    const auto b = before.find(c);
    const auto a = after.find(c);
    if (b == before.end() || a == after.end()) {
      report.rejected.push_back({s.image_id, "no count for " + to_string(c)});
      continue;
    }
    ProportionRow row;
    row.image_id = s.image_id;
    row.before_pct = 100.0 * static_cast<double>(b->second) / static_cast<double>(s.before_total);
    row.after_pct = 100.0 * static_cast<double>(a->second) / static_cast<double>(s.after_total);
    row.delta_pp = row.after_pct - row.before_pct;
    sum += row.delta_pp;
    report.per_image.push_back(std::move(row));
  }
  report.average_delta_pp = report.per_image.empty()
                                ? std::numeric_limits<double>::quiet_NaN()
                                : sum / static_cast<double>(report.per_image.size());
  return report;
}

double round_pct(double value) { return std::floor(value * 100.0 + 0.5) / 100.0; }

std::vector<ImageStats> parse_count_table(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  // Skip leading blank lines, then require the header.
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ParseError(line_no, "count table is empty (missing header)");
  const auto header = split_csv(line);
  if (header != std::vector<std::string_view>{"image_id", "stage", "condition", "count"}) {
    throw ParseError(line_no, "expected header image_id,stage,condition,count");
  }

  std::vector<ImageStats> stats;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::size_t> first_line;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 4) {
      throw ParseError(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
    }
    const std::string image_id(fields[0]);
    if (image_id.empty()) throw ParseError(line_no, "empty image_id");

    Condition cond;
    try {
      cond = parse_condition(fields[2]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }

    std::size_t count = 0;
    {
      const auto f = fields[3];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), count);
      if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size()) {
        throw ParseError(line_no, "count \"" + std::string(f) + "\" is not a non-negative integer");
      }
    }

    auto [it, inserted] = index.try_emplace(image_id, stats.size());
    if (inserted) {
      stats.emplace_back().image_id = image_id;
      first_line.push_back(line_no);
    }
    ImageStats& s = stats[it->second];

    auto put = [&](std::map<Condition, std::size_t>& m) {
      if (!m.emplace(cond, count).second) {
        throw ParseError(line_no, "duplicate row for " + image_id + " " + std::string(fields[1]) +
                                      " " + to_string(cond));
      }
    };
    if (fields[1] == "positive") {
      if (cond.kind != Condition::Kind::IouAbove) {
        throw ParseError(line_no, "positive stage needs an iou condition");
      }
      if (s.positive_num) throw ParseError(line_no, "duplicate positive row for " + image_id);
      s.positive_num = count;
      s.positive_iou = cond.threshold;
    } else if (fields[1] == "before") {
      put(s.before);
    } else if (fields[1] == "after") {
      put(s.after);
    } else {
      throw ParseError(line_no, "unknown stage \"" + std::string(fields[1]) +
                                    "\" (expected positive, before or after)");
    }
  }

  const Condition total = Condition::cls_above(kTotalScoreThreshold);
  for (std::size_t i = 0; i < stats.size(); ++i) {
    auto& s = stats[i];
    const auto b = s.before.find(total);
    const auto a = s.after.find(total);
    if (b == s.before.end() || a == s.after.end()) {
      throw ParseError(first_line[i], "image " + s.image_id +
                                          " has no cls>0.05 row for one of its stages; totals undefined");
    }
    s.before_total = b->second;
    s.after_total = a->second;
  }
  return stats;
}

std::vector<ImageStats> ingest_count_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open count table " + path.string());
  return parse_count_table(in);
}

void emit_count_table(std::ostream& out, std::span<const ImageStats> stats) {
  out << "image_id,stage,condition,count\n";
  for (const auto& s : stats) {
    if (s.positive_num) {
      out << s.image_id << ",positive," << to_string(Condition::iou_above(s.positive_iou)) << ','
          << *s.positive_num << '\n';
    }
    for (const auto& [cond, count] : with_total(s.before, s.before_total)) {
      out << s.image_id << ",before," << to_string(cond) << ',' << count << '\n';
    }
    for (const auto& [cond, count] : with_total(s.after, s.after_total)) {
      out << s.image_id << ",after," << to_string(cond) << ',' << count << '\n';
    }
  }
}

void emit_table_layout(std::ostream& out, std::span<const ImageStats> stats) {
  std::set<Condition> before_conds;
  std::set<Condition> after_conds;
  std::set<double> positive_ious;
  for (const auto& s : stats) {
    for (const auto& [c, n] : with_total(s.before, s.before_total)) before_conds.insert(c);
    for (const auto& [c, n] : with_total(s.after, s.after_total)) after_conds.insert(c);
    if (s.positive_num) positive_ious.insert(s.positive_iou);
  }

  out << "stage,condition";
  for (const auto& s : stats) out << ',' << s.image_id;
  out << '\n';

  for (double t : positive_ious) {
    out << "Positive_NUM," << to_string(Condition::iou_above(t));
    for (const auto& s : stats) {
      out << ',';
      if (s.positive_num && s.positive_iou == t) out << *s.positive_num;
    }
    out << '\n';
  }
  auto stage_rows = [&](const char* label, const std::set<Condition>& conds, bool is_before) {
    for (const auto& c : conds) {
      out << label << ',' << to_string(c);
      for (const auto& s : stats) {
        const auto m = is_before ? with_total(s.before, s.before_total)
                                 : with_total(s.after, s.after_total);
        out << ',';
        if (auto it = m.find(c); it != m.end()) out << it->second;
      }
      out << '\n';
    }
  };
  stage_rows("Before NMS", before_conds, true);
  stage_rows("After NMS", after_conds, false);
}

std::vector<ScatterPoint> misalignment_summary(std::span<const Detection> dets,
                                               std::span<const GroundTruthBox> gts) {
  std::vector<ScatterPoint> points;
  points.reserve(dets.size());
  for (const auto& d : dets) points.push_back({d.image_id, max_iou(d.box, gts), d.cls_score});
  return points;
}

void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points) {
  out << "image_id,iou,cls_score\n";
  for (const auto& p : points) {
    out << p.image_id << ',' << format_number(p.iou) << ',' << format_number(p.cls) << '\n';
  }
}

}  // namespace objconf
