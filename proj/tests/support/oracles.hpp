#pragma once

// Independent reference implementations used only by tests. None of these
// call into the code paths they check.

#include <algorithm>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "objconf/detection.hpp"
#include "objconf/geometry.hpp"

namespace objconf::testing {

// IoU from 1-D interval overlaps.
inline double oracle_iou(const Box& a, const Box& b) {
  auto overlap = [](double lo1, double hi1, double lo2, double hi2) {
    const double lo = lo1 > lo2 ? lo1 : lo2;
    const double hi = hi1 < hi2 ? hi1 : hi2;
    return hi > lo ? hi - lo : 0.0;
  };
  const double inter = overlap(a.x1, a.x2, b.x1, b.x2) * overlap(a.y1, a.y2, b.y1, b.y2);
  const double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
  const double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// O(n^2) greedy NMS: repeatedly take the highest-scoring live box (lowest
// index on ties), then kill every live same-class box overlapping it by more
// than the threshold.
inline std::vector<std::size_t> oracle_nms(const std::vector<Box>& boxes,
                                           const std::vector<int>& classes,
                                           const std::vector<double>& scores, double iou_thr) {
  const std::size_t n = boxes.size();
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> kept;
  while (true) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      if (best == n || scores[i] > scores[best]) best = i;
    }
    if (best == n) break;
    kept.push_back(best);
    alive[best] = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (alive[j] && classes[j] == classes[best] && oracle_iou(boxes[best], boxes[j]) > iou_thr) {
        alive[j] = false;
      }
    }
  }
  return kept;
}

inline Box random_box(std::mt19937_64& rng, double extent = 100.0, double max_size = 40.0) {
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> size(1.0, max_size);
  const double x = pos(rng);
  const double y = pos(rng);
  return {x, y, x + size(rng), y + size(rng)};
}

inline std::vector<Detection> random_detections(std::mt19937_64& rng, std::size_t n,
                                                int num_classes, const std::string& image_id = "img") {
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, num_classes - 1);
  std::vector<Detection> dets;
  dets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Detection d;
    d.image_id = image_id;
    d.box = random_box(rng);
    d.class_id = cls(rng);
    d.cls_score = score(rng);
    d.obj_score = score(rng);
    dets.push_back(d);
  }
  return dets;
}

}  // namespace objconf::testing
