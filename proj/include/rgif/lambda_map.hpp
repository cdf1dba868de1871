#pragma once

#include <vector>

#include "rgif/image.hpp"

namespace rgif {

/// Per-pixel error-norm scale field.
struct LambdaMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  LambdaMap() = default;
  LambdaMap(int w, int h, double fill)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0) throw ContractError("LambdaMap: bad dimensions");
  }

  double& at(int x, int y) {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  double at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  double at_clamped(int x, int y) const {
    return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
  }
};

/// 4-neighbor Laplacian with replicated (Neumann) borders.
inline std::vector<double> discrete_laplacian(const LambdaMap& lam) {
  std::vector<double> out(lam.values.size());
  for (int y = 0; y < lam.height; ++y) {
    for (int x = 0; x < lam.width; ++x) {
      out[static_cast<std::size_t>(y) * lam.width + x] =
          lam.at_clamped(x - 1, y) + lam.at_clamped(x + 1, y) +
          lam.at_clamped(x, y - 1) + lam.at_clamped(x, y + 1) -
          4.0 * lam.at(x, y);
    }
  }
  return out;
}

/// Resolves the error-norm scale either from uniform scalars or from a
/// per-pixel map (which then drives both the data and smoothness terms).
struct LambdaField {
  const LambdaMap* map = nullptr;
  double uniform_d = 0.0;
  double uniform_s = 0.0;

  static LambdaField uniform(double lam_d, double lam_s) {
    return LambdaField{nullptr, lam_d, lam_s};
  }
  static LambdaField per_pixel(const LambdaMap& m) {
    return LambdaField{&m, 0.0, 0.0};
  }

  bool is_uniform() const { return map == nullptr; }
  double data_at(int x, int y) const {
    return map ? map->at(x, y) : uniform_d;
  }
  double smooth_at(int x, int y) const {
    return map ? map->at(x, y) : uniform_s;
  }
};

}  // namespace rgif
