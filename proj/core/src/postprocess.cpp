#include "objconf/postprocess.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace objconf {

namespace {

// Indices of `dets` sorted by descending score, ties by ascending index.
std::vector<std::size_t> rank_by_score(std::span<const Detection> dets, ScoreField field) {
  std::vector<double> scores(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) scores[i] = score_of(dets[i], field);
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

void validate(const NmsParams& params) {
  if (!(params.iou_threshold >= 0.0 && params.iou_threshold <= 1.0) ||
      !(params.score_threshold >= 0.0 && params.score_threshold <= 1.0)) {
    throw std::invalid_argument("NMS thresholds must be in [0, 1]");
  }
}

double score_of(const Detection& det, ScoreField field) {
  if (field == ScoreField::Cls) return det.cls_score;
  if (!det.fused_score) throw std::invalid_argument("detection has no fused_score");
  return *det.fused_score;
}

std::vector<Detection> score_filter(std::span<const Detection> dets, double threshold,
                                    ScoreField field) {
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    if (score_of(d, field) > threshold) kept.push_back(d);
  }
  return kept;
}

std::vector<Detection> nms(std::span<const Detection> dets, const NmsParams& params) {
  validate(params);
  if (dets.empty()) return {};
  for (const auto& d : dets) {
    if (d.image_id != dets.front().image_id) {
      throw std::invalid_argument("nms: detections from more than one image (\"" +
                                  dets.front().image_id + "\" and \"" + d.image_id + "\")");
    }
    validate(d.box);
  }

  const std::vector<std::size_t> order = rank_by_score(dets, params.score_field);

  // Kept boxes per class; classes never interact.
  std::unordered_map<int, std::vector<Box>> kept_by_class;
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    const Detection& cand = dets[idx];
    auto& same_class = kept_by_class[cand.class_id];
    const bool suppressed = std::any_of(same_class.begin(), same_class.end(), [&](const Box& k) {
      return iou(k, cand.box) > params.iou_threshold;
    });
    if (suppressed) continue;
    same_class.push_back(cand.box);
    kept.push_back(idx);
  }

  // `order` is already global score order, so `kept` is too.
  std::vector<Detection> out;
  out.reserve(kept.size());
  for (std::size_t idx : kept) out.push_back(dets[idx]);
  return out;
}

std::vector<Detection> inference_pipeline(std::span<const Detection> dets,
                                          const FusionParams& fusion, const NmsParams& params) {
  validate(fusion);
  validate(params);
  for (const auto& d : dets) validate(d);

  std::vector<Detection> work = fusion.obj_gate ? gate(dets, *fusion.obj_gate)
                                                : std::vector<Detection>(dets.begin(), dets.end());
  apply_fusion(work, fusion);
  work = score_filter(work, params.score_threshold, params.score_field);

  if (params.top_k && work.size() > *params.top_k) {
    std::vector<std::size_t> order = rank_by_score(work, params.score_field);
    order.resize(*params.top_k);
    std::sort(order.begin(), order.end());
    std::vector<Detection> capped;
    capped.reserve(order.size());
    for (std::size_t idx : order) capped.push_back(std::move(work[idx]));
    work = std::move(capped);
  }
  return nms(work, params);
}

std::vector<std::vector<Detection>> group_by_image(std::span<const Detection> dets) {
  std::vector<std::vector<Detection>> groups;
  std::map<std::string, std::size_t> slot;
  for (const auto& d : dets) {
    auto [it, inserted] = slot.try_emplace(d.image_id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(d);
  }
  return groups;
}

}  // namespace objconf
