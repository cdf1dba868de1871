#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rgif {

// Contract violations (bad dimensions, out-of-range parameters).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File/stream level failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unsupported or corrupt image formats, channel/format mismatches.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real-valued raster, row-major and channel-interleaved.
/// value_range records the sample range of the originating format
/// (e.g. [0,255] for 8-bit files) so saving can pick a bit depth.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;
  std::pair<double, double> value_range{0.0, 255.0};

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w <= 0 || h <= 0 || c <= 0)
      throw ContractError("Image: dimensions must be positive");
  }

  std::size_t size() const { return data.size(); }
  std::size_t pixels() const {
    return static_cast<std::size_t>(width) * height;
  }

  double& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  // Clamped access: coordinates outside the domain replicate the border.
  double at_clamped(int x, int y, int c = 0) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return at(x, y, c);
  }

  bool same_dims(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  bool same_spatial_dims(const Image& o) const {
    return width == o.width && height == o.height;
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Inverts `normalize`. For non-degenerate images restore is the affine
/// inverse; constant images record the original constant exactly.
struct NormalizeInfo {
  double lo = 0.0;
  double hi = 255.0;
  bool constant = false;
  double constant_value = 0.0;

  double restore(double v) const {
    if (constant) return constant_value;
    return lo + v * (hi - lo) / 255.0;
  }
  double forward(double v) const {
    if (constant) return 127.5;
    return (v - lo) * 255.0 / (hi - lo);
  }
};

/// Affine map of the sample range onto [0,255]. Constant images map to
/// 127.5 with exact inversion through the returned info.
inline std::pair<Image, NormalizeInfo> normalize(const Image& img) {
  if (img.data.empty()) throw ContractError("normalize: empty image");
  auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
  NormalizeInfo info;
  info.lo = *lo_it;
  info.hi = *hi_it;
  Image out = img;
  if (info.hi <= info.lo) {
    info.constant = true;
    info.constant_value = info.lo;
    std::fill(out.data.begin(), out.data.end(), 127.5);
  } else {
    const double scale = 255.0 / (info.hi - info.lo);
    for (double& v : out.data) v = (v - info.lo) * scale;
  }
  out.value_range = {0.0, 255.0};
  return {std::move(out), info};
}

/// Rescale by the recorded sample range (the format range) instead of the
/// data min/max. Identity for data already on [0,255]; preset magnitudes
/// assume that scale, and contrast stretching would distort them.
inline std::pair<Image, NormalizeInfo> range_normalize(const Image& img) {
  if (img.data.empty()) throw ContractError("range_normalize: empty image");
  NormalizeInfo info;
  info.lo = img.value_range.first;
  info.hi = img.value_range.second;
  if (!(info.hi > info.lo)) return normalize(img);
  Image out = img;
  const double scale = 255.0 / (info.hi - info.lo);
  for (double& v : out.data) v = (v - info.lo) * scale;
  out.value_range = {0.0, 255.0};
  return {std::move(out), info};
}

inline Image denormalize(const Image& img, const NormalizeInfo& info) {
  Image out = img;
  for (double& v : out.data) v = info.restore(v);
  out.value_range = {info.lo, info.hi};
  if (info.constant) out.value_range = {info.constant_value, info.constant_value};
  return out;
}

inline Image extract_channel(const Image& img, int c) {
  if (c < 0 || c >= img.channels)
    throw ContractError("extract_channel: channel out of range");
  Image out(img.width, img.height, 1);
  out.value_range = img.value_range;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(x, y, c);
  return out;
}

inline void insert_channel(Image& img, int c, const Image& channel) {
  if (channel.channels != 1 || !channel.same_spatial_dims(img))
    throw ContractError("insert_channel: dimension mismatch");
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(x, y, c) = channel.at(x, y);
}

/// Applies a single-channel transform to every channel independently.
/// The transform must preserve spatial dimensions.
inline Image for_each_channel(const Image& img,
                              const std::function<Image(const Image&)>& f) {
  if (img.channels == 1) {
    Image out = f(img);
    if (!out.same_spatial_dims(img) || out.channels != 1)
      throw ContractError("for_each_channel: transform changed dimensions");
    return out;
  }
  Image out = img;
  for (int c = 0; c < img.channels; ++c) {
    Image transformed = f(extract_channel(img, c));
    if (!transformed.same_spatial_dims(img) || transformed.channels != 1)
      throw ContractError("for_each_channel: transform changed dimensions");
    insert_channel(out, c, transformed);
  }
  return out;
}

/// Mean absolute difference over all samples.
inline double mean_abs(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw ContractError("mean_abs: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    sum += std::abs(a.data[i] - b.data[i]);
  return sum / static_cast<double>(a.data.size());
}

/// 3x3 median with clamped borders, per channel.
inline Image median3x3(const Image& img) {
  return for_each_channel(img, [](const Image& ch) {
    Image out = ch;
    std::array<double, 9> window;
    for (int y = 0; y < ch.height; ++y) {
      for (int x = 0; x < ch.width; ++x) {
        int k = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            window[k++] = ch.at_clamped(x + dx, y + dy);
        std::nth_element(window.begin(), window.begin() + 4, window.end());
        out.at(x, y) = window[4];
      }
    }
    return out;
  });
}

/// Per-iteration error report (MAE to a reference, MAD between iterates).
struct MetricReport {
  double mae = 0.0;
  double mad = 0.0;
  std::vector<std::pair<int, double>> per_iteration;
};

}  // namespace rgif
