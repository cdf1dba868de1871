#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "rgif/image.hpp"
#include "rgif/kernels.hpp"
#include "rgif/param_opt.hpp"
#include "rgif/presets.hpp"
#include "rgif/resample.hpp"
#include "rgif/solver.hpp"

namespace rgif {

struct PipelineConfig {
  Application application = Application::kTextureSmooth;
  FilterParams params;
  int factor = 8;                            // depth-upsample
  double boost = 3.0;                        // detail-enhance
  std::array<double, 3> layer_gains{1.0, 1.0, 1.0};  // tonemap
  double compression = 0.0;  // tonemap base-range divisor; <= 0 = auto
};

struct PipelineResult {
  Image output;
  IrlsTrace trace;
  std::optional<LambdaMap> lambda_map;
};

/// Guided depth upsampling: bicubic initialization, lambda-map adaptation.
/// Rescales by the format range only (no contrast stretch: the data term
/// target is the bicubic init on its native scale) and restores it after.
inline PipelineResult depth_upsample(const Image& lowres, const Image& color,
                                     int factor, const FilterParams& p,
                                     bool record_energy = false) {
  if (lowres.channels != 1)
    throw ContractError("depth_upsample: depth must be single-channel");
  if (color.width != lowres.width * factor ||
      color.height != lowres.height * factor)
    throw ContractError("depth_upsample: guidance dims must be depth x factor");
  auto [depth_n, info] = range_normalize(lowres);
  auto [guide_n, guide_info] = range_normalize(color);
  const Image init = bicubic_resample(depth_n, factor);
  auto [out, lam, trace] = rgif_optimize(init, guide_n, p, init, record_energy);
  PipelineResult res{denormalize(out, info), std::move(trace), std::move(lam)};
  return res;
}

/// Flash-guided no-flash denoising.
inline PipelineResult flash_noflash(const Image& noflash, const Image& flash,
                                    const FilterParams& p,
                                    bool record_energy = false) {
  if (!flash.same_spatial_dims(noflash))
    throw ContractError("flash_noflash: dimension mismatch");
  auto [target, info] = normalize(noflash);
  auto [guide, guide_info] = normalize(flash);
  auto [out, trace] = irls_filter(target, guide, p, target, record_energy);
  return {denormalize(out, info), std::move(trace), std::nullopt};
}

/// Base/detail decomposition with boosted detail recombination.
inline PipelineResult detail_enhance(const Image& img, double boost,
                                     const FilterParams& p,
                                     bool record_energy = false) {
  if (!(boost > 0.0)) throw ContractError("detail_enhance: boost must be > 0");
  auto [target, info] = normalize(img);
  auto [base, trace] = irls_filter(target, target, p, target, record_energy);
  Image out = base;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double v = base.data[i] + boost * (target.data[i] - base.data[i]);
    out.data[i] = std::clamp(v, 0.0, 255.0);
  }
  return {denormalize(out, info), std::move(trace), std::nullopt};
}

/// Multi-scale tone mapping in the log-luminance domain: three base layers
/// of increasing smoothness, compressed coarsest base plus re-gained detail
/// layers, color reattached by luminance ratio.
inline PipelineResult tonemap_hdr(const Image& hdr,
                                  const std::array<double, 3>& gains,
                                  double compression, const FilterParams& p,
                                  bool record_energy = false) {
  Image lum(hdr.width, hdr.height, 1);
  for (std::size_t i = 0; i < lum.data.size(); ++i) {
    double acc = 0.0;
    for (int c = 0; c < hdr.channels; ++c)
      acc += hdr.data[i * hdr.channels + c];
    const double v = acc / hdr.channels;
    if (!(v > 0.0))
      throw ContractError("tonemap_hdr: luminance must be strictly positive");
    lum.data[i] = v;
  }
  Image log_lum = lum;
  for (double& v : log_lum.data) v = std::log(v);
  auto [L, info] = normalize(log_lum);
  const double to_log = info.constant ? 0.0 : (info.hi - info.lo) / 255.0;

  IrlsTrace merged;
  merged.converged = true;
  std::array<Image, 3> bases{L, L, L};
  for (int k = 0; k < 3; ++k) {
    FilterParams layer = p;
    layer.alpha = kTonemapAlphas[k];
    auto [u, trace] = irls_filter(L, L, layer, L, record_energy);
    bases[k] = std::move(u);
    detail::merge_traces(merged, trace);
  }

  // Detail layers and coarse base in natural-log units.
  const std::size_t n = lum.data.size();
  std::vector<double> d1(n), d2(n), d3(n), base(n);
  for (std::size_t i = 0; i < n; ++i) {
    d1[i] = to_log * (L.data[i] - bases[0].data[i]);
    d2[i] = to_log * (bases[0].data[i] - bases[1].data[i]);
    d3[i] = to_log * (bases[1].data[i] - bases[2].data[i]);
    base[i] = info.restore(bases[2].data[i]);
  }
  double base_lo = base[0], base_hi = base[0];
  for (double v : base) {
    base_lo = std::min(base_lo, v);
    base_hi = std::max(base_hi, v);
  }
  const double range = base_hi - base_lo;
  double scale = 1.0;
  if (range > 0.0)
    scale = compression > 0.0 ? 1.0 / compression : std::log(100.0) / range;

  Image out = hdr;
  for (std::size_t i = 0; i < n; ++i) {
    const double compressed = base_hi + (base[i] - base_hi) * scale;
    const double out_log =
        compressed + gains[0] * d1[i] + gains[1] * d2[i] + gains[2] * d3[i];
    const double ratio = std::exp(out_log) / lum.data[i];
    for (int c = 0; c < hdr.channels; ++c)
      out.data[i * hdr.channels + c] =
          hdr.data[i * hdr.channels + c] * ratio;
  }
  auto [display, display_info] = normalize(out);
  return {std::move(display), std::move(merged), std::nullopt};
}

/// Structure-preserving texture smoothing with a median prefilter; the
/// prefiltered image serves as both target and guidance.
inline PipelineResult texture_smooth(const Image& img, const FilterParams& p,
                                     bool record_energy = false) {
  auto [target, info] = normalize(img);
  const Image m = median3x3(target);
  auto [out, trace] = irls_filter(m, m, p, m, record_energy);
  return {denormalize(out, info), std::move(trace), std::nullopt};
}

/// Clip-art compression artifact removal: self-guided filtering, no prefilter.
inline PipelineResult dejpeg_clipart(const Image& img, const FilterParams& p,
                                     bool record_energy = false) {
  auto [target, info] = normalize(img);
  auto [out, trace] = irls_filter(target, target, p, target, record_energy);
  return {denormalize(out, info), std::move(trace), std::nullopt};
}

}  // namespace rgif
