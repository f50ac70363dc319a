#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "facefake/errors.hpp"

namespace facefake {

/// Axis-aligned box in continuous pixel coordinates, x2 > x1 and y2 > y1.
struct BoundingBox {
  float x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  float confidence = 0;

  float width() const { return x2 - x1; }
  float height() const { return y2 - y1; }
  float area() const { return width() * height(); }
  bool valid() const {
    return x2 > x1 && y2 > y1 && confidence >= 0 && confidence <= 1;
  }
};

/// Five named facial keypoints, each (x, y) in frame pixels.
struct Landmarks {
  Eigen::Vector2f left_eye{0, 0};
  Eigen::Vector2f right_eye{0, 0};
  Eigen::Vector2f nose{0, 0};
  Eigen::Vector2f mouth_left{0, 0};
  Eigen::Vector2f mouth_right{0, 0};

  std::array<Eigen::Vector2f, 5> points() const {
    return {left_eye, right_eye, nose, mouth_left, mouth_right};
  }
  static Landmarks from_points(const std::array<Eigen::Vector2f, 5>& p) {
    return Landmarks{p[0], p[1], p[2], p[3], p[4]};
  }
};

enum class IouMode { kUnion, kMin };

/// Intersection over union, or over the smaller area in kMin mode.
float iou(const BoundingBox& a, const BoundingBox& b, IouMode mode = IouMode::kUnion);

/// Greedy non-maximum suppression by descending confidence. A box is kept
/// iff its overlap with every already-kept box is <= iou_threshold. Ties in
/// confidence resolve to input order. Output is sorted by descending
/// confidence and is a subset of the input.
std::vector<BoundingBox> nms(const std::vector<BoundingBox>& boxes,
                             float iou_threshold, IouMode mode);

/// Shifts box edges by offsets expressed as fractions of box width/height:
/// (x1 + dx1*w, y1 + dy1*h, x2 + dx2*w, y2 + dy2*h). Confidence preserved.
/// Throws DegenerateBoxError when the result has non-positive extent.
BoundingBox apply_box_regression(const BoundingBox& box,
                                 const Eigen::Vector4f& offsets);

/// Expands the shorter side so the box becomes square with side
/// max(w, h) around the same center. Confidence preserved.
BoundingBox square_pad(const BoundingBox& box);

/// Clips box coordinates to [0, width] x [0, height].
BoundingBox clip_to_frame(const BoundingBox& box, int width, int height);

}  // namespace facefake
