#pragma once

#include <string>

#include "rgif/image.hpp"
#include "rgif/kernels.hpp"

namespace rgif {

enum class Application {
  kDepthUpsample,
  kFlashNoFlash,
  kDetailEnhance,
  kTonemap,
  kTextureSmooth,
  kDejpeg,
};

inline Application application_from_name(const std::string& name) {
  if (name == "depth-upsample") return Application::kDepthUpsample;
  if (name == "flash-noflash") return Application::kFlashNoFlash;
  if (name == "detail-enhance") return Application::kDetailEnhance;
  if (name == "tonemap") return Application::kTonemap;
  if (name == "texture-smooth") return Application::kTextureSmooth;
  if (name == "dejpeg") return Application::kDejpeg;
  throw ContractError("unknown application: " + name);
}

/// Published parameter presets per application. For depth upsampling alpha
/// depends on the upsampling factor; for tone mapping alpha is set per
/// detail layer by the pipeline (the returned value is the first layer's).
inline FilterParams preset(Application app, int factor = 8) {
  FilterParams p;
  switch (app) {
    case Application::kDepthUpsample:
      switch (factor) {
        case 2: p.alpha = 0.6; break;
        case 4: p.alpha = 0.8; break;
        case 8: p.alpha = 0.9; break;
        case 16: p.alpha = 0.93; break;
        default:
          throw ContractError("depth-upsample factor must be 2, 4, 8 or 16");
      }
      p.r_d = 7;
      p.r_s = 7;
      p.sigma_d = 7.0;
      p.sigma_s = 7.0;
      p.sigma_g = 10.0;
      p.lambda_d = 7.0;
      p.lambda_s = 7.0;
      p.beta = 0.5;
      p.tau = 0.3;
      p.lambda0 = 7.0;
      break;
    case Application::kFlashNoFlash:
      p.alpha = 0.7;
      p.r_d = 1;
      p.r_s = 4;
      p.sigma_d = 1.0;
      p.sigma_s = 4.0;
      p.sigma_g = 5.0;
      p.lambda_d = 5.0;
      p.lambda_s = 5.0;
      break;
    case Application::kDetailEnhance:
      p.alpha = 0.8;
      p.r_d = 0;
      p.r_s = 3;
      p.sigma_d = 1.0;  // unused at r_d = 0
      p.sigma_s = 3.0;
      p.sigma_g = 10.0;
      p.lambda_d = kInfLambda;
      p.lambda_s = 10.0;
      break;
    case Application::kTonemap:
      p.alpha = 1.0 / 9.0;
      p.r_d = 1;
      p.r_s = 6;
      p.sigma_d = 1.0;
      p.sigma_s = 6.0;
      p.sigma_g = 20.0;
      p.lambda_d = 20.0;
      p.lambda_s = 20.0;
      break;
    case Application::kTextureSmooth:
    case Application::kDejpeg:
      p.alpha = 0.9;
      p.r_d = 5;
      p.r_s = 5;
      p.sigma_d = 5.0;
      p.sigma_s = 5.0;
      p.sigma_g = 15.0;
      p.lambda_d = 10.0;
      p.lambda_s = 10.0;
      break;
  }
  return p;
}

/// Alpha values of the three tone-mapping detail layers.
inline constexpr double kTonemapAlphas[3] = {1.0 / 9.0, 1.0 / 2.0, 8.0 / 9.0};

}  // namespace rgif
