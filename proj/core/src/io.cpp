#include "objconf/io.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "objconf/error.hpp"
#include "objconf/fusion.hpp"

namespace objconf {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing key \"") + key + "\"");
  return *it;
}

double as_number(const json& v, const char* key, std::size_t line) {
  if (!v.is_number()) throw ParseError(line, std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

int as_int(const json& v, const char* key, std::size_t line) {
  if (!v.is_number_integer()) throw ParseError(line, std::string("\"") + key + "\" must be an integer");
  return v.get<int>();
}

Box box_from(const json& v, std::size_t line) {
  if (!v.is_array() || v.size() != 4) throw ParseError(line, "\"box\" must be [x1, y1, x2, y2]");
  Box b{as_number(v[0], "box", line), as_number(v[1], "box", line), as_number(v[2], "box", line),
        as_number(v[3], "box", line)};
  try {
    validate(b);
  } catch (const std::invalid_argument& e) {
    throw ParseError(line, e.what());
  }
  return b;
}

ordered_json box_to(const Box& b) { return ordered_json::array({b.x1, b.y1, b.x2, b.y2}); }

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "record must be a JSON object");
    fn(obj, line_no);
  }
}

std::string image_id_from(const json& obj, std::size_t line) {
  const json& v = require(obj, "image_id", line);
  if (v.is_string()) return v.get<std::string>();
  // COCO-style numeric ids are accepted and kept as their decimal text.
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(line, "\"image_id\" must be a string");
}

template <typename T>
std::vector<T> list_or(const json& obj, const char* key, std::vector<T> fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_array()) throw ParseError(0, std::string("anchor config \"") + key + "\" must be an array");
  std::vector<T> out;
  for (const auto& v : *it) {
    if (!v.is_number()) throw ParseError(0, std::string("anchor config \"") + key + "\" must hold numbers");
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) {
        throw ParseError(0, std::string("anchor config \"") + key + "\" must hold integers");
      }
    }
    out.push_back(v.get<T>());
  }
  return out;
}

const char* label_name(LabelKind k) {
  switch (k) {
    case LabelKind::Positive: return "positive";
    case LabelKind::Negative: return "negative";
    case LabelKind::Ignore: return "ignore";
  }
  return "negative";
}

ordered_json rounded_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_pct(v);
}

}  // namespace

std::vector<Detection> read_detections(std::istream& in) {
  std::vector<Detection> dets;
  for_each_json_line(in, [&](const json& obj, std::size_t line) {
    Detection d;
    d.image_id = image_id_from(obj, line);
    d.box = box_from(require(obj, "box", line), line);
    d.class_id = as_int(require(obj, "class_id", line), "class_id", line);
    d.cls_score = as_number(require(obj, "cls_score", line), "cls_score", line);
    if (auto it = obj.find("obj_score"); it != obj.end() && !it->is_null()) {
      d.obj_score = as_number(*it, "obj_score", line);
    }
    if (auto it = obj.find("fused_score"); it != obj.end() && !it->is_null()) {
      d.fused_score = as_number(*it, "fused_score", line);
    }
    try {
      validate(d);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
    dets.push_back(std::move(d));
  });
  return dets;
}

void write_detection(std::ostream& out, const Detection& det) {
  ordered_json j;
  j["image_id"] = det.image_id;
  j["box"] = box_to(det.box);
  j["class_id"] = det.class_id;
  j["cls_score"] = det.cls_score;
  j["obj_score"] = det.obj_score ? ordered_json(*det.obj_score) : ordered_json(nullptr);
  if (det.fused_score) j["fused_score"] = *det.fused_score;
  out << j.dump() << '\n';
}

void write_detections(std::ostream& out, std::span<const Detection> dets) {
  for (const auto& d : dets) write_detection(out, d);
}

std::vector<LabeledGroundTruth> read_ground_truth(std::istream& in) {
  std::vector<LabeledGroundTruth> out;
  for_each_json_line(in, [&](const json& obj, std::size_t line) {
    LabeledGroundTruth g;
    g.image_id = image_id_from(obj, line);
    g.gt.box = box_from(require(obj, "box", line), line);
    g.gt.class_id = as_int(require(obj, "class_id", line), "class_id", line);
    if (g.gt.class_id < 0) throw ParseError(line, "\"class_id\" must be non-negative");
    out.push_back(std::move(g));
  });
  return out;
}

std::vector<GroundTruthBox> ground_truth_for(std::span<const LabeledGroundTruth> all,
                                             const std::string& image_id) {
  std::vector<GroundTruthBox> out;
  for (const auto& g : all) {
    if (g.image_id == image_id) out.push_back(g.gt);
  }
  return out;
}

AnchorGridConfig parse_anchor_config(std::string_view json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("anchor config is not valid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(0, "anchor config must be a JSON object");
  const AnchorGridConfig def = AnchorGridConfig::retinanet();
  AnchorGridConfig cfg;
  cfg.strides = list_or<int>(obj, "strides", def.strides);
  if (obj.contains("base_sizes") || !obj.contains("strides")) {
    cfg.base_sizes = list_or<double>(obj, "base_sizes", def.base_sizes);
  } else {
    for (int s : cfg.strides) cfg.base_sizes.push_back(4.0 * s);
  }
  cfg.scales = list_or<double>(obj, "scales", def.scales);
  cfg.ratios = list_or<double>(obj, "ratios", def.ratios);
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, e.what());
  }
  return cfg;
}

std::string anchor_config_to_json(const AnchorGridConfig& config) {
  ordered_json j;
  j["strides"] = config.strides;
  j["base_sizes"] = config.base_sizes;
  j["scales"] = config.scales;
  j["ratios"] = config.ratios;
  return j.dump();
}

void write_anchors(std::ostream& out, std::span<const Anchor> anchors) {
  for (const auto& a : anchors) {
    ordered_json j;
    j["level"] = a.level;
    j["row"] = a.row;
    j["col"] = a.col;
    j["box"] = box_to(a.box);
    out << j.dump() << '\n';
  }
}

void write_assignment(std::ostream& out, const std::string& image_id,
                      std::span<const Anchor> anchors, std::span<const GroundTruthBox> gts,
                      const AssignmentResult& result) {
  const ConfidenceTargets conf = confidence_targets(result);
  const std::vector<BoxDelta> deltas = localization_targets(anchors, gts, result);
  std::size_t next_delta = 0;
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    const AnchorLabel& label = result.labels[i];
    ordered_json j;
    j["image_id"] = image_id;
    j["anchor"] = i;
    j["label"] = label_name(label.kind);
    j["gt_index"] = label.positive() ? ordered_json(label.gt_index) : ordered_json(nullptr);
    j["matched_iou"] = result.matched_iou[i];
    j["confidence_target"] = conf.used[i] ? ordered_json(conf.target[i]) : ordered_json(nullptr);
    if (label.positive()) {
      const BoxDelta& d = deltas[next_delta++];
      j["delta"] = ordered_json::array({d.tx, d.ty, d.tw, d.th});
    }
    out << j.dump() << '\n';
  }
}

void write_proportion_reports(std::ostream& out, std::span<const ProportionReport> reports) {
  ordered_json root;
  root["reports"] = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json jr;
    jr["condition"] = to_string(r.condition);
    jr["rows"] = ordered_json::array();
    for (const auto& row : r.per_image) {
      ordered_json jrow;
      jrow["image_id"] = row.image_id;
      jrow["before_pct"] = round_pct(row.before_pct);
      jrow["after_pct"] = round_pct(row.after_pct);
      jrow["delta_pp"] = round_pct(row.delta_pp);
      jr["rows"].push_back(std::move(jrow));
    }
    jr["average_delta_pp"] = rounded_or_null(r.average_delta_pp);
    jr["rejected"] = ordered_json::array();
    for (const auto& rej : r.rejected) {
      jr["rejected"].push_back({{"image_id", rej.image_id}, {"reason", rej.reason}});
    }
    root["reports"].push_back(std::move(jr));
  }
  out << root.dump(2) << '\n';
}

}  // namespace objconf
