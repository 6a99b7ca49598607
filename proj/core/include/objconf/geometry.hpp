#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace objconf {

/// Axis-aligned box in continuous pixel coordinates, corner convention.
/// Width is x2 - x1 with no +1 pixel correction.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  double center_x() const noexcept { return 0.5 * (x1 + x2); }
  double center_y() const noexcept { return 0.5 * (y1 + y2); }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Throws std::invalid_argument unless all coordinates are finite and
/// x2 >= x1, y2 >= y1.
void validate(const Box& box);

/// Intersection over union. Symmetric, in [0, 1]. Two boxes whose union has
/// zero area (both degenerate) give 0.
double iou(const Box& a, const Box& b);

/// Dense row-major matrix of pairwise IoUs.
class IouMatrix {
public:
  IouMatrix() = default;
  IouMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

IouMatrix iou_matrix(std::span<const Box> as, std::span<const Box> bs);

struct Anchor {
  Box box;
  int level = 0;
  int row = 0;
  int col = 0;
};

/// Per-level anchor tiling. Level l has stride strides[l] and base size
/// base_sizes[l]; every cell carries |scales| * |ratios| anchors, with ratio
/// meaning height / width.
struct AnchorGridConfig {
  std::vector<int> strides;
  std::vector<double> base_sizes;
  std::vector<double> scales;
  std::vector<double> ratios;

  /// Five-level RetinaNet layout: strides 8..128, base 4 * stride,
  /// three octave scales and ratios {0.5, 1, 2}.
  static AnchorGridConfig retinanet();

  std::size_t anchors_per_cell() const noexcept { return scales.size() * ratios.size(); }
};

void validate(const AnchorGridConfig& config);

/// Closed-form anchor count: sum over levels of
/// ceil(h / s) * ceil(w / s) * |scales| * |ratios|.
std::size_t anchor_count(const AnchorGridConfig& config, int image_w, int image_h);

/// Anchors ordered by level, then row, col, then ratio, then scale.
/// Cell (row, col) is centred at ((col + 0.5) * stride, (row + 0.5) * stride).
std::vector<Anchor> generate_anchors(const AnchorGridConfig& config, int image_w, int image_h);

/// Centre-offset / log-size regression target. No variance scaling.
struct BoxDelta {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;

  friend bool operator==(const BoxDelta&, const BoxDelta&) = default;
};

BoxDelta encode(const Box& anchor, const Box& target);

/// Inverse of encode. Throws std::overflow_error if exp(tw) or exp(th)
/// leaves the finite range.
Box decode(const Box& anchor, const BoxDelta& delta);

}  // namespace objconf
