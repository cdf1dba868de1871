#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "rgif/image.hpp"

namespace rgif {

inline constexpr double kInfLambda = std::numeric_limits<double>::infinity();

/// All scalar knobs of the energy and its solvers. Weights operate on the
/// [0,255]-normalized intensity scale. lambda_d / lambda_s may be +inf,
/// in which case the error norm is exactly quadratic.
struct FilterParams {
  double alpha = 0.9;      // data/smoothness balance, in [0,1)
  int r_d = 5;             // data window radius (0 = pixel-to-pixel)
  int r_s = 5;             // smoothness window radius (>= 1)
  double sigma_d = 5.0;    // spatial bandwidth of the data window
  double sigma_s = 5.0;    // spatial bandwidth of the guidance weight
  double sigma_g = 15.0;   // range bandwidth of the guidance weight
  double lambda_d = 10.0;  // error-norm scale, data term (> 0 or +inf)
  double lambda_s = 10.0;  // error-norm scale, smoothness term (> 0 or +inf)

  // Per-pixel lambda optimization.
  double beta = 0.0;     // lambda-smoothness regularizer weight
  double tau = 0.0;      // lambda descent rate
  double lambda0 = 7.0;  // initial per-pixel lambda
  double lambda_min = 0.5;
  double lambda_max = 100.0;

  // Solver controls.
  double pcg_tol = 1e-8;
  int pcg_maxit = 1000;
  double irls_tol = 0.1;  // MAD threshold on the [0,255] scale
  int irls_maxit = 20;

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0))
      throw ContractError("alpha must lie in [0,1)");
    if (r_d < 0) throw ContractError("r_d must be >= 0");
    if (r_s < 1) throw ContractError("r_s must be >= 1");
    if (!(sigma_d > 0.0) || !(sigma_s > 0.0) || !(sigma_g > 0.0))
      throw ContractError("sigma_d, sigma_s, sigma_g must be positive");
    if (!(lambda_d > 0.0) || !(lambda_s > 0.0))
      throw ContractError("lambda_d and lambda_s must be positive");
    if (beta < 0.0) throw ContractError("beta must be >= 0");
    if (!(lambda0 > 0.0)) throw ContractError("lambda0 must be positive");
    if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min))
      throw ContractError("bad lambda clamp bounds");
    if (!(pcg_tol > 0.0) || pcg_maxit < 1)
      throw ContractError("bad PCG controls");
    if (!(irls_tol >= 0.0) || irls_maxit < 1)
      throw ContractError("bad IRLS controls");
  }
};

/// Exponential error norm 2*lambda^2*(1 - exp(-x2 / 2*lambda^2));
/// exactly x2 at lambda = +inf.
inline double phi(double x2, double lambda) {
  if (x2 < 0.0) throw ContractError("phi: x2 must be >= 0");
  if (std::isinf(lambda)) return x2;
  const double two_l2 = 2.0 * lambda * lambda;
  // expm1 keeps the large-lambda limit accurate (x2/2lambda^2 underflows).
  return -two_l2 * std::expm1(-x2 / two_l2);
}

/// Derivative of phi w.r.t. x2: exp(-x2 / 2*lambda^2); exactly 1 at +inf.
inline double phi_prime(double x2, double lambda) {
  if (x2 < 0.0) throw ContractError("phi_prime: x2 must be >= 0");
  if (std::isinf(lambda)) return 1.0;
  return std::exp(-x2 / (2.0 * lambda * lambda));
}

inline double spatial_weight(int di, int dj, double sigma) {
  return std::exp(-static_cast<double>(di * di + dj * dj) /
                  (2.0 * sigma * sigma));
}

/// Squared guidance range distance averaged over channels, the exponent
/// argument of the range factor of the guidance weight.
inline double guidance_range_exponent(const Image& G, int xi, int yi, int xj,
                                      int yj, double sigma_g) {
  double sum = 0.0;
  for (int c = 0; c < G.channels; ++c) {
    const double d = G.at(xi, yi, c) - G.at(xj, yj, c);
    sum += d * d;
  }
  return -sum / (G.channels * 2.0 * sigma_g * sigma_g);
}

/// Bilateral guidance weight: spatial Gaussian times range Gaussian over
/// the guidance channels.
inline double guidance_weight(int xi, int yi, int xj, int yj, const Image& G,
                              double sigma_s, double sigma_g) {
  if (xi < 0 || xi >= G.width || yi < 0 || yi >= G.height || xj < 0 ||
      xj >= G.width || yj < 0 || yj >= G.height)
    throw ContractError("guidance_weight: coordinate out of bounds");
  const double spatial =
      -(static_cast<double>((xi - xj) * (xi - xj) + (yi - yj) * (yi - yj))) /
      (2.0 * sigma_s * sigma_s);
  return std::exp(spatial + guidance_range_exponent(G, xi, yi, xj, yj, sigma_g));
}

namespace detail {

inline double parse_param_value(const std::string& v) {
  if (v == "inf" || v == "+inf" || v == "infinity") return kInfLambda;
  return std::stod(v);
}

}  // namespace detail

/// Sets one FilterParams field by name. Unknown keys are rejected.
inline void set_param(FilterParams& p, const std::string& key,
                      const std::string& value) {
  double v;
  try {
    v = detail::parse_param_value(value);
  } catch (const std::exception&) {
    throw ContractError("bad value for " + key + ": " + value);
  }
  if (key == "alpha") p.alpha = v;
  else if (key == "r_d") p.r_d = static_cast<int>(v);
  else if (key == "r_s") p.r_s = static_cast<int>(v);
  else if (key == "sigma_d") p.sigma_d = v;
  else if (key == "sigma_s") p.sigma_s = v;
  else if (key == "sigma_g") p.sigma_g = v;
  else if (key == "lambda_d") p.lambda_d = v;
  else if (key == "lambda_s") p.lambda_s = v;
  else if (key == "beta") p.beta = v;
  else if (key == "tau") p.tau = v;
  else if (key == "lambda0") p.lambda0 = v;
  else if (key == "lambda_min") p.lambda_min = v;
  else if (key == "lambda_max") p.lambda_max = v;
  else if (key == "pcg_tol") p.pcg_tol = v;
  else if (key == "pcg_maxit") p.pcg_maxit = static_cast<int>(v);
  else if (key == "irls_tol") p.irls_tol = v;
  else if (key == "irls_maxit") p.irls_maxit = static_cast<int>(v);
  else throw ContractError("unknown parameter: " + key);
}

/// Flat key=value rendering, one field per line.
inline std::string params_to_text(const FilterParams& p) {
  auto num = [](double v) {
    if (std::isinf(v)) return std::string("inf");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };
  std::string out;
  out += "alpha = " + num(p.alpha) + "\n";
  out += "r_d = " + std::to_string(p.r_d) + "\n";
  out += "r_s = " + std::to_string(p.r_s) + "\n";
  out += "sigma_d = " + num(p.sigma_d) + "\n";
  out += "sigma_s = " + num(p.sigma_s) + "\n";
  out += "sigma_g = " + num(p.sigma_g) + "\n";
  out += "lambda_d = " + num(p.lambda_d) + "\n";
  out += "lambda_s = " + num(p.lambda_s) + "\n";
  out += "beta = " + num(p.beta) + "\n";
  out += "tau = " + num(p.tau) + "\n";
  out += "lambda0 = " + num(p.lambda0) + "\n";
  out += "lambda_min = " + num(p.lambda_min) + "\n";
  out += "lambda_max = " + num(p.lambda_max) + "\n";
  out += "pcg_tol = " + num(p.pcg_tol) + "\n";
  out += "pcg_maxit = " + std::to_string(p.pcg_maxit) + "\n";
  out += "irls_tol = " + num(p.irls_tol) + "\n";
  out += "irls_maxit = " + std::to_string(p.irls_maxit) + "\n";
  return out;
}

}  // namespace rgif
