#pragma once

#include <cmath>

#include "rgif/image.hpp"

namespace rgif {

namespace detail {

// Keys cubic convolution kernel, a = -0.5.
inline double keys_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

}  // namespace detail

/// Bicubic resampling (Keys a = -0.5) with half-pixel-centered grid
/// alignment and clamped borders. factor = 1 reproduces the input.
inline Image bicubic_resample(const Image& img, double factor) {
  if (!(factor > 0.0))
    throw ContractError("bicubic_resample: factor must be positive");
  const int out_w = std::max(1, static_cast<int>(std::lround(img.width * factor)));
  const int out_h = std::max(1, static_cast<int>(std::lround(img.height * factor)));
  Image out(out_w, out_h, img.channels);
  out.value_range = img.value_range;
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    const int y0 = static_cast<int>(std::floor(src_y));
    const double fy = src_y - y0;
    double wy[4];
    for (int k = 0; k < 4; ++k) wy[k] = detail::keys_weight(fy - (k - 1));
    for (int x = 0; x < out_w; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      const int x0 = static_cast<int>(std::floor(src_x));
      const double fx = src_x - x0;
      double wx[4];
      for (int k = 0; k < 4; ++k) wx[k] = detail::keys_weight(fx - (k - 1));
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int ky = 0; ky < 4; ++ky)
          for (int kx = 0; kx < 4; ++kx)
            acc += wy[ky] * wx[kx] *
                   img.at_clamped(x0 + kx - 1, y0 + ky - 1, c);
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

}  // namespace rgif
