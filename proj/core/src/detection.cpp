#include "objconf/detection.hpp"

#include <stdexcept>

namespace objconf {

namespace {

bool is_score(double s) { return s >= 0.0 && s <= 1.0; }

}  // namespace

void validate(const Detection& det) {
  validate(det.box);
  if (!is_score(det.cls_score)) throw std::invalid_argument("detection cls_score outside [0, 1]");
  if (det.obj_score && !is_score(*det.obj_score)) {
    throw std::invalid_argument("detection obj_score outside [0, 1]");
  }
  if (det.fused_score && !is_score(*det.fused_score)) {
    throw std::invalid_argument("detection fused_score outside [0, 1]");
  }
}

}  // namespace objconf
