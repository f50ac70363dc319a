#include "facefake/geometry.hpp"

#include <algorithm>
#include <numeric>

namespace facefake {

float iou(const BoundingBox& a, const BoundingBox& b, IouMode mode) {
  const float ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const float iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0 || iy <= 0) return 0.0f;
  const float inter = ix * iy;
  const float denom = mode == IouMode::kMin
                          ? std::min(a.area(), b.area())
                          : a.area() + b.area() - inter;
  return inter / denom;
}

std::vector<BoundingBox> nms(const std::vector<BoundingBox>& boxes,
                             float iou_threshold, IouMode mode) {
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return boxes[a].confidence > boxes[b].confidence;
  });
  std::vector<BoundingBox> kept;
  kept.reserve(boxes.size());
  for (int idx : order) {
    const BoundingBox& cand = boxes[idx];
    bool suppressed = false;
    for (const BoundingBox& k : kept) {
      if (iou(cand, k, mode) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

BoundingBox apply_box_regression(const BoundingBox& box,
                                 const Eigen::Vector4f& offsets) {
  const float w = box.width();
  const float h = box.height();
  BoundingBox out;
  out.x1 = box.x1 + offsets[0] * w;
  out.y1 = box.y1 + offsets[1] * h;
  out.x2 = box.x2 + offsets[2] * w;
  out.y2 = box.y2 + offsets[3] * h;
  out.confidence = box.confidence;
  if (out.x2 <= out.x1 || out.y2 <= out.y1) {
    throw DegenerateBoxError("box regression collapsed the box");
  }
  return out;
}

BoundingBox square_pad(const BoundingBox& box) {
  const float side = std::max(box.width(), box.height());
  const float cx = 0.5f * (box.x1 + box.x2);
  const float cy = 0.5f * (box.y1 + box.y2);
  BoundingBox out;
  out.x1 = cx - 0.5f * side;
  out.x2 = cx + 0.5f * side;
  out.y1 = cy - 0.5f * side;
  out.y2 = cy + 0.5f * side;
  out.confidence = box.confidence;
  return out;
}

BoundingBox clip_to_frame(const BoundingBox& box, int width, int height) {
  BoundingBox out = box;
  out.x1 = std::clamp(out.x1, 0.0f, static_cast<float>(width));
  out.x2 = std::clamp(out.x2, 0.0f, static_cast<float>(width));
  out.y1 = std::clamp(out.y1, 0.0f, static_cast<float>(height));
  out.y2 = std::clamp(out.y2, 0.0f, static_cast<float>(height));
  return out;
}

}  // namespace facefake
