#include "objconf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace objconf {

namespace {

void require_positive_size(const Box& box, const char* what) {
  validate(box);
  if (!(box.width() > 0.0) || !(box.height() > 0.0)) {
    throw std::invalid_argument(std::string(what) + " box must have positive width and height");
  }
}

std::size_t ceil_div(int value, int divisor) {
  return static_cast<std::size_t>((value + divisor - 1) / divisor);
}

}  // namespace

void validate(const Box& box) {
  if (!std::isfinite(box.x1) || !std::isfinite(box.y1) || !std::isfinite(box.x2) ||
      !std::isfinite(box.y2)) {
    throw std::invalid_argument("box coordinates must be finite");
  }
  if (box.x2 < box.x1 || box.y2 < box.y1) {
    throw std::invalid_argument("box corners are inverted (need x2 >= x1 and y2 >= y1)");
  }
}

double iou(const Box& a, const Box& b) {
  validate(a);
  validate(b);
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

IouMatrix iou_matrix(std::span<const Box> as, std::span<const Box> bs) {
  for (const auto& b : bs) validate(b);
  IouMatrix out(as.size(), bs.size());
  for (std::size_t i = 0; i < as.size(); ++i) {
    const Box& a = as[i];
    validate(a);
    const double area_a = a.area();
    for (std::size_t j = 0; j < bs.size(); ++j) {
      const Box& b = bs[j];
      const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
      const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
      const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
      const double uni = area_a + b.area() - inter;
      out(i, j) = uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
    }
  }
  return out;
}

AnchorGridConfig AnchorGridConfig::retinanet() {
  AnchorGridConfig cfg;
  cfg.strides = {8, 16, 32, 64, 128};
  for (int s : cfg.strides) cfg.base_sizes.push_back(4.0 * s);
  cfg.scales = {1.0, std::pow(2.0, 1.0 / 3.0), std::pow(2.0, 2.0 / 3.0)};
  cfg.ratios = {0.5, 1.0, 2.0};
  return cfg;
}

void validate(const AnchorGridConfig& config) {
  if (config.strides.empty()) throw std::invalid_argument("anchor config needs at least one level");
  if (config.base_sizes.size() != config.strides.size()) {
    throw std::invalid_argument("anchor config: base_sizes and strides differ in length");
  }
  for (std::size_t i = 0; i < config.strides.size(); ++i) {
    if (config.strides[i] <= 0) throw std::invalid_argument("anchor config: strides must be positive");
    if (i > 0 && config.strides[i] <= config.strides[i - 1]) {
      throw std::invalid_argument("anchor config: strides must be strictly increasing");
    }
    if (!(config.base_sizes[i] > 0.0) || !std::isfinite(config.base_sizes[i])) {
      throw std::invalid_argument("anchor config: base_sizes must be positive");
    }
  }
  if (config.scales.empty() || config.ratios.empty()) {
    throw std::invalid_argument("anchor config: scales and ratios must be non-empty");
  }
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!std::all_of(config.scales.begin(), config.scales.end(), positive) ||
      !std::all_of(config.ratios.begin(), config.ratios.end(), positive)) {
    throw std::invalid_argument("anchor config: scales and ratios must be positive");
  }
}

std::size_t anchor_count(const AnchorGridConfig& config, int image_w, int image_h) {
  validate(config);
  if (image_w <= 0 || image_h <= 0) throw std::invalid_argument("image dimensions must be positive");
  std::size_t total = 0;
  for (int stride : config.strides) {
    total += ceil_div(image_h, stride) * ceil_div(image_w, stride);
  }
  return total * config.anchors_per_cell();
}

std::vector<Anchor> generate_anchors(const AnchorGridConfig& config, int image_w, int image_h) {
  std::vector<Anchor> anchors;
  anchors.reserve(anchor_count(config, image_w, image_h));

  // Shapes are shared by every cell of a level.
  struct Shape {
    double w;
    double h;
  };
  std::vector<Shape> shapes;
  shapes.reserve(config.anchors_per_cell());

  for (std::size_t level = 0; level < config.strides.size(); ++level) {
    const int stride = config.strides[level];
    const double base = config.base_sizes[level];
    shapes.clear();
    for (double ratio : config.ratios) {
      const double hr = std::sqrt(ratio);
      for (double scale : config.scales) {
        shapes.push_back({base * scale / hr, base * scale * hr});
      }
    }
    const auto rows = static_cast<int>(ceil_div(image_h, stride));
    const auto cols = static_cast<int>(ceil_div(image_w, stride));
    for (int r = 0; r < rows; ++r) {
      const double cy = (r + 0.5) * stride;
      for (int c = 0; c < cols; ++c) {
        const double cx = (c + 0.5) * stride;
        for (const Shape& s : shapes) {
          anchors.push_back({Box{cx - 0.5 * s.w, cy - 0.5 * s.h, cx + 0.5 * s.w, cy + 0.5 * s.h},
                             static_cast<int>(level), r, c});
        }
      }
    }
  }
  return anchors;
}

BoxDelta encode(const Box& anchor, const Box& target) {
  require_positive_size(anchor, "anchor");
  require_positive_size(target, "target");
  const double wa = anchor.width();
  const double ha = anchor.height();
  return {(target.center_x() - anchor.center_x()) / wa, (target.center_y() - anchor.center_y()) / ha,
          std::log(target.width() / wa), std::log(target.height() / ha)};
}

Box decode(const Box& anchor, const BoxDelta& delta) {
  require_positive_size(anchor, "anchor");
  if (!std::isfinite(delta.tx) || !std::isfinite(delta.ty) || !std::isfinite(delta.tw) ||
      !std::isfinite(delta.th)) {
    throw std::invalid_argument("box delta must be finite");
  }
  const double wa = anchor.width();
  const double ha = anchor.height();
  const double w = wa * std::exp(delta.tw);
  const double h = ha * std::exp(delta.th);
  const double cx = anchor.center_x() + delta.tx * wa;
  const double cy = anchor.center_y() + delta.ty * ha;
  if (!std::isfinite(w) || !std::isfinite(h) || !std::isfinite(cx) || !std::isfinite(cy)) {
    throw std::overflow_error("decode: delta (tw=" + std::to_string(delta.tw) +
                              ", th=" + std::to_string(delta.th) + ") overflows the box size");
  }
  const Box out{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
  if (!std::isfinite(out.x1) || !std::isfinite(out.x2) || !std::isfinite(out.y1) ||
      !std::isfinite(out.y2)) {
    throw std::overflow_error("decode: decoded box coordinates overflow");
  }
  return out;
}

}  // namespace objconf
