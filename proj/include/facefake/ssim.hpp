#pragma once

#include "facefake/image.hpp"

namespace facefake {

/// Windowed structural-similarity parameters. The window slides over every
/// pixel and is clipped at the image border, so the map has full size.
struct SSIMParams {
  int window = 7;  // odd, >= 3
  float k1 = 0.01f;
  float k2 = 0.03f;
  float dynamic_range = 255.0f;
};

/// Per-pixel SSIM between two same-sized images (grayscale-converted
/// internally), returned as a single-channel difference mask rescaled to
/// 255 * (1 - ssim) / 2 so that brighter means more different.
///
/// Identical inputs map to the exact zero mask, and the result is
/// symmetric in its arguments.
ImageBuffer ssim_map(const ImageBuffer& a, const ImageBuffer& b,
                     const SSIMParams& params = {});

/// Mean of the raw pointwise SSIM values in [-1, 1]; handy for quick
/// similarity summaries without building the mask.
double mean_ssim(const ImageBuffer& a, const ImageBuffer& b,
                 const SSIMParams& params = {});

}  // namespace facefake
