#pragma once

#include <optional>
#include <string>

#include "objconf/geometry.hpp"

namespace objconf {

/// One predicted box. The fused score is stored alongside, never in place of,
/// the raw classification and object-confidence scores.
struct Detection {
  std::string image_id;
  Box box;
  int class_id = 0;
  double cls_score = 0.0;
  std::optional<double> obj_score;
  std::optional<double> fused_score;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Throws std::invalid_argument if the box is invalid or any present score
/// lies outside [0, 1].
void validate(const Detection& det);

}  // namespace objconf
