#include "facefake/ssim.hpp"

#include <algorithm>
#include <vector>

namespace facefake {

namespace {

// Summed-area table with a zero top row / left column.
class Integral {
 public:
  Integral(const float* v, int h, int w, bool squared, const float* other = nullptr)
      : w_(w), table_(static_cast<size_t>(h + 1) * (w + 1), 0.0) {
    for (int y = 0; y < h; ++y) {
      double row = 0.0;
      for (int x = 0; x < w; ++x) {
        const double a = v[y * w + x];
        const double term = squared ? a * a : (other ? a * other[y * w + x] : a);
        row += term;
        table_[idx(y + 1, x + 1)] = table_[idx(y, x + 1)] + row;
      }
    }
  }

  // Sum over [y0, y1) x [x0, x1).
  double sum(int y0, int x0, int y1, int x1) const {
    return table_[idx(y1, x1)] - table_[idx(y0, x1)] - table_[idx(y1, x0)] +
           table_[idx(y0, x0)];
  }

 private:
  size_t idx(int y, int x) const {
    return static_cast<size_t>(y) * (w_ + 1) + x;
  }
  int w_;
  std::vector<double> table_;
};

struct SsimFields {
  ImageBuffer map;   // raw ssim values in [-1, 1]
  double mean = 0;
};

SsimFields compute(const ImageBuffer& ia, const ImageBuffer& ib,
                   const SSIMParams& params) {
  if (ia.height != ib.height || ia.width != ib.width) {
    throw DataError("ssim_map inputs must have identical dimensions");
  }
  if (params.window < 3 || params.window % 2 == 0) {
    throw ConfigError("SSIM window must be odd and >= 3");
  }
  const ImageBuffer ga = to_gray(denormalize(ia));
  const ImageBuffer gb = to_gray(denormalize(ib));
  const int h = ga.height, w = ga.width;
  const int r = params.window / 2;
  const double c1 = static_cast<double>(params.k1 * params.dynamic_range) *
                    (params.k1 * params.dynamic_range);
  const double c2 = static_cast<double>(params.k2 * params.dynamic_range) *
                    (params.k2 * params.dynamic_range);

  const Integral sa(ga.data.data(), h, w, false);
  const Integral sb(gb.data.data(), h, w, false);
  const Integral saa(ga.data.data(), h, w, true);
  const Integral sbb(gb.data.data(), h, w, true);
  const Integral sab(ga.data.data(), h, w, false, gb.data.data());

  SsimFields out;
  out.map = ImageBuffer(h, w, 1);
  double total = 0;
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r);
    const int y1 = std::min(h, y + r + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - r);
      const int x1 = std::min(w, x + r + 1);
      const double m = static_cast<double>(y1 - y0) * (x1 - x0);
      const double mu_a = sa.sum(y0, x0, y1, x1) / m;
      const double mu_b = sb.sum(y0, x0, y1, x1) / m;
      const double var_a = saa.sum(y0, x0, y1, x1) / m - mu_a * mu_a;
      const double var_b = sbb.sum(y0, x0, y1, x1) / m - mu_b * mu_b;
      const double cov = sab.sum(y0, x0, y1, x1) / m - mu_a * mu_b;
      const double ssim = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                          ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      const double clamped = std::clamp(ssim, -1.0, 1.0);
      out.map.at(y, x, 0) = static_cast<float>(clamped);
      total += clamped;
    }
  }
  out.mean = total / (static_cast<double>(h) * w);
  return out;
}

}  // namespace

ImageBuffer ssim_map(const ImageBuffer& a, const ImageBuffer& b,
                     const SSIMParams& params) {
  SsimFields fields = compute(a, b, params);
  ImageBuffer mask = std::move(fields.map);
  mask.data = 255.0f * (1.0f - mask.data) / 2.0f;
  return mask;
}

double mean_ssim(const ImageBuffer& a, const ImageBuffer& b,
                 const SSIMParams& params) {
  return compute(a, b, params).mean;
}

}  // namespace facefake
