#include "facefake/blob_scorer.hpp"

#include <algorithm>
#include <cmath>

namespace facefake {

StageScore BrightBlobScorer::score(const ImageBuffer& patch) const {
  StageScore out;
  const ImageBuffer gray = to_gray(denormalize(patch));
  const int s = gray.width;

  const float lo = gray.data.minCoeff();
  const float hi = gray.data.maxCoeff();
  if (hi - lo < opts_.min_contrast) return out;

  const float thr = 0.5f * (lo + hi);
  int bright = 0;
  int bx1 = s, by1 = s, bx2 = -1, by2 = -1;
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      if (gray.at(y, x, 0) > thr) {
        ++bright;
        bx1 = std::min(bx1, x);
        by1 = std::min(by1, y);
        bx2 = std::max(bx2, x);
        by2 = std::max(by2, y);
      }
    }
  }
  if (bright == 0) return out;

  const float coverage = static_cast<float>(bright) / (s * s);
  float cov_score = 1.0f;
  if (coverage < opts_.min_coverage) {
    cov_score = 1.0f - (opts_.min_coverage - coverage) / opts_.coverage_taper;
  } else if (coverage > opts_.max_coverage) {
    cov_score = 1.0f - (coverage - opts_.max_coverage) / opts_.coverage_taper;
  }
  cov_score = std::clamp(cov_score, 0.0f, 1.0f);

  // The window frames the blob when the bright extent keeps a gap to every
  // patch border. Windows straddling a blob edge lose sides here; windows
  // fully inside a blob never pass the contrast gate.
  const int gap = std::max(1, s / 24);
  int framed_sides = 0;
  framed_sides += bx1 >= gap;
  framed_sides += by1 >= gap;
  framed_sides += (s - 1 - bx2) >= gap;
  framed_sides += (s - 1 - by2) >= gap;
  const float frame_score = framed_sides / 4.0f;

  // Dark ring just outside the bright extent; follows the blob, so it is
  // insensitive to how the crop was quantized.
  const int rw = std::max(1, s / 12);
  const int ry0 = std::max(0, by1 - rw), ry1 = std::min(s - 1, by2 + rw);
  const int rx0 = std::max(0, bx1 - rw), rx1 = std::min(s - 1, bx2 + rw);
  int ring_total = 0, ring_dark = 0;
  for (int y = ry0; y <= ry1; ++y) {
    for (int x = rx0; x <= rx1; ++x) {
      if (x >= bx1 && x <= bx2 && y >= by1 && y <= by2) continue;
      ++ring_total;
      if (gray.at(y, x, 0) <= thr) ++ring_dark;
    }
  }
  const float ring_score =
      ring_total == 0 ? 0.0f : static_cast<float>(ring_dark) / ring_total;

  // Bright center: the middle third of the patch sits inside the blob when
  // the window is placed on it.
  const int c0 = s / 3;
  const int c1 = s - c0;
  int center_total = 0, center_bright = 0;
  for (int y = c0; y < c1; ++y) {
    for (int x = c0; x < c1; ++x) {
      ++center_total;
      if (gray.at(y, x, 0) > thr) ++center_bright;
    }
  }
  const float center_score = static_cast<float>(center_bright) / center_total;

  out.p_face =
      std::clamp(cov_score * frame_score * ring_score * center_score, 0.0f, 1.0f);

  const float fs = static_cast<float>(s);
  const float pad_x = 0.5f * opts_.box_pad * (bx2 + 1 - bx1);
  const float pad_y = 0.5f * opts_.box_pad * (by2 + 1 - by1);
  out.box_offsets =
      Eigen::Vector4f((bx1 - pad_x) / fs, (by1 - pad_y) / fs,
                      (bx2 + 1 + pad_x - fs) / fs, (by2 + 1 + pad_y - fs) / fs);

  if (with_landmarks_) {
    const float bw = static_cast<float>(bx2 + 1 - bx1);
    const float bh = static_cast<float>(by2 + 1 - by1);
    const auto at = [&](float fx, float fy) {
      return Eigen::Vector2f((bx1 + fx * bw) / fs, (by1 + fy * bh) / fs);
    };
    out.landmarks = {{at(0.30f, 0.38f), at(0.70f, 0.38f), at(0.50f, 0.58f),
                      at(0.35f, 0.78f), at(0.65f, 0.78f)}};
  }
  return out;
}

}  // namespace facefake
