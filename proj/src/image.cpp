#include "facefake/image.hpp"

#include <algorithm>
#include <cmath>

namespace facefake {

void check_image(const ImageBuffer& img) {
  if (img.height <= 0 || img.width <= 0) {
    throw DataError("image has non-positive dimensions");
  }
  if (img.channels != 1 && img.channels != 3) {
    throw DataError("image channel count must be 1 or 3");
  }
  const Eigen::Index expected =
      static_cast<Eigen::Index>(img.height) * img.width * img.channels;
  if (img.data.size() != expected) {
    throw DataError("image data length does not match dimensions");
  }
  const float hi = img.normalized ? 1.0f : 255.0f;
  if ((img.data < 0.0f).any() || (img.data > hi).any()) {
    throw DataError("image intensities outside declared range");
  }
}

ImageBuffer normalize(const ImageBuffer& img) {
  if (img.normalized) return img;
  ImageBuffer out = img;
  out.normalized = true;
  out.data = img.data / 255.0f;
  return out;
}

ImageBuffer denormalize(const ImageBuffer& img) {
  if (!img.normalized) return img;
  ImageBuffer out = img;
  out.normalized = false;
  out.data = img.data * 255.0f;
  return out;
}

ImageBuffer to_gray(const ImageBuffer& img) {
  if (img.channels == 1) return img;
  ImageBuffer out(img.height, img.width, 1, img.normalized);
  const Eigen::Index n = static_cast<Eigen::Index>(img.height) * img.width;
  for (Eigen::Index i = 0; i < n; ++i) {
    const float r = img.data[i * 3 + 0];
    const float g = img.data[i * 3 + 1];
    const float b = img.data[i * 3 + 2];
    out.data[i] = 0.299f * r + 0.587f * g + 0.114f * b;
  }
  return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw DataError("resize target must be positive");
  if (out_h == img.height && out_w == img.width) return img;
  ImageBuffer out(out_h, out_w, img.channels, img.normalized);
  const float sy = static_cast<float>(img.height) / out_h;
  const float sx = static_cast<float>(img.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    float fy = (y + 0.5f) * sy - 0.5f;
    fy = std::clamp(fy, 0.0f, static_cast<float>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const float wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      float fx = (x + 0.5f) * sx - 0.5f;
      fx = std::clamp(fx, 0.0f, static_cast<float>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const float wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const float top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
        const float bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

ImageBuffer crop_rect(const ImageBuffer& img, int x1, int y1, int x2, int y2) {
  if (x2 <= x1 || y2 <= y1) throw DataError("crop rectangle has non-positive extent");
  ImageBuffer out(y2 - y1, x2 - x1, img.channels, img.normalized);
  const int sy0 = std::max(y1, 0);
  const int sy1 = std::min(y2, img.height);
  const int sx0 = std::max(x1, 0);
  const int sx1 = std::min(x2, img.width);
  for (int y = sy0; y < sy1; ++y) {
    for (int x = sx0; x < sx1; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(y - y1, x - x1, c) = img.at(y, x, c);
      }
    }
  }
  return out;
}

}  // namespace facefake
