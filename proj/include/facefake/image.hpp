#pragma once

#include <Eigen/Core>

#include "facefake/errors.hpp"

namespace facefake {

/// Dense image with interleaved channels, row-major.
///
/// Intensities live in [0, 255] when `normalized` is false and in [0, 1]
/// when it is true. Channel count is 1 (gray) or 3 (RGB).
struct ImageBuffer {
  int height = 0;
  int width = 0;
  int channels = 1;
  bool normalized = false;
  Eigen::ArrayXf data;  // size = height * width * channels

  ImageBuffer() = default;
  ImageBuffer(int h, int w, int c, bool norm = false)
      : height(h), width(w), channels(c), normalized(norm) {
    data = Eigen::ArrayXf::Zero(static_cast<Eigen::Index>(h) * w * c);
  }

  Eigen::Index size() const { return data.size(); }

  float& at(int y, int x, int c) {
    return data[(static_cast<Eigen::Index>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c) const {
    return data[(static_cast<Eigen::Index>(y) * width + x) * channels + c];
  }
};

/// Checks the structural invariants; throws DataError on breach.
void check_image(const ImageBuffer& img);

/// Rescales intensities to [0, 1]. Identity if already normalized.
ImageBuffer normalize(const ImageBuffer& img);

/// Rescales intensities back to [0, 255]. Identity if not normalized.
ImageBuffer denormalize(const ImageBuffer& img);

/// Single-channel luma: 0.299 R + 0.587 G + 0.114 B. Gray input passes through.
ImageBuffer to_gray(const ImageBuffer& img);

/// Bilinear resize to (out_h, out_w). Sampling uses half-pixel centers.
ImageBuffer resize_bilinear(const ImageBuffer& img, int out_h, int out_w);

/// Copies the pixel rectangle [x1, x2) x [y1, y2). Regions outside the
/// source are zero-filled, so callers may crop past the frame edge.
ImageBuffer crop_rect(const ImageBuffer& img, int x1, int y1, int x2, int y2);

}  // namespace facefake
