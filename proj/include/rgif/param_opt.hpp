#pragma once

#include <tuple>
#include <vector>

#include "rgif/image.hpp"
#include "rgif/kernels.hpp"
#include "rgif/lambda_map.hpp"
#include "rgif/solver.hpp"
#include "rgif/threading.hpp"

namespace rgif {

/// Derivative of the per-pixel-lambda energy w.r.t. each lambda_i:
/// data and smoothness brackets evaluated at the local scale, plus the
/// gradient of the beta * |grad lambda|^2 regularizer (-2 beta Laplacian).
inline std::vector<double> lambda_gradient(const LambdaMap& lam,
                                           const Image& I_n, const Image& I0,
                                           const Image& G,
                                           const FilterParams& p) {
  if (I_n.channels != 1 || I0.channels != 1 || !I_n.same_dims(I0) ||
      !G.same_spatial_dims(I0) || lam.width != I0.width ||
      lam.height != I0.height)
    throw ContractError("lambda_gradient: dimension mismatch");
  for (double v : lam.values)
    if (!(v > 0.0)) throw ContractError("lambda_gradient: non-positive lambda");

  const int w = I0.width, h = I0.height;
  const auto data_spatial = detail::spatial_table(p.r_d, p.sigma_d);
  const double inv_2ss = 1.0 / (2.0 * p.sigma_s * p.sigma_s);
  const std::vector<double> reg =
      p.beta > 0.0 ? discrete_laplacian(lam) : std::vector<double>();

  std::vector<double> grad(lam.values.size(), 0.0);
  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double li = lam.at(x, y);
      const double vi = I_n.at(x, y);
      double g = 0.0;
      for (int dy = -p.r_d; dy <= p.r_d; ++dy)
        for (int dx = -p.r_d; dx <= p.r_d; ++dx) {
          const int xj = x + dx, yj = y + dy;
          if (xj < 0 || xj >= w || yj < 0 || yj >= h) continue;
          const double r2 = (vi - I0.at(xj, yj)) * (vi - I0.at(xj, yj));
          const double d = phi_prime(r2, li);
          g += (1.0 - p.alpha) *
               data_spatial[(dy + p.r_d) * (2 * p.r_d + 1) + (dx + p.r_d)] *
               (4.0 * li * (1.0 - d) - (2.0 * r2 / li) * d);
        }
      for (int dy = -p.r_s; dy <= p.r_s; ++dy)
        for (int dx = -p.r_s; dx <= p.r_s; ++dx) {
          const int xj = x + dx, yj = y + dy;
          if (xj < 0 || xj >= w || yj < 0 || yj >= h) continue;
          const double x2 = (vi - I_n.at(xj, yj)) * (vi - I_n.at(xj, yj));
          const double s = phi_prime(x2, li);
          const double wg =
              std::exp(-static_cast<double>(dy * dy + dx * dx) * inv_2ss +
                       guidance_range_exponent(G, x, y, xj, yj, p.sigma_g));
          g += p.alpha * wg * (4.0 * li * (1.0 - s) - (2.0 * x2 / li) * s);
        }
      if (p.beta > 0.0) g -= 2.0 * p.beta * reg[i];
      grad[i] = g;
    }
  });
  return grad;
}

/// One clamped steepest-descent step on the lambda field.
inline LambdaMap lambda_step(const LambdaMap& lam,
                             const std::vector<double>& grad, double tau,
                             double lambda_min, double lambda_max) {
  if (grad.size() != lam.values.size())
    throw ContractError("lambda_step: gradient size mismatch");
  LambdaMap out = lam;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] =
        std::clamp(lam.values[i] - tau * grad[i], lambda_min, lambda_max);
  return out;
}

/// IRLS with interleaved per-pixel lambda adaptation: each outer iteration
/// performs one image update from the current lambda map, then one descent
/// step on the map. Single-channel targets only.
inline std::tuple<Image, LambdaMap, IrlsTrace> rgif_optimize(
    const Image& I0, const Image& G, const FilterParams& p, const Image& init,
    bool record_energy = false, const IterObserver& observer = nullptr) {
  p.validate();
  if (I0.channels != 1)
    throw ContractError("rgif_optimize: single-channel targets only");
  if (!init.same_dims(I0))
    throw ContractError("rgif_optimize: init dimension mismatch");

  LambdaMap lam(I0.width, I0.height, p.lambda0);
  Image iterate = init;
  IrlsTrace trace;
  for (int it = 1; it <= p.irls_maxit; ++it) {
    const LambdaField field = LambdaField::per_pixel(lam);
    const SparseSystem sys = assemble_system(iterate, I0, G, p, field);
    PcgResult sol = pcg_solve(sys, iterate.data, p.pcg_tol, p.pcg_maxit);
    if (!sol.converged) trace.pcg_all_converged = false;
    Image next = iterate;
    next.data = std::move(sol.x);
    const double mad = mean_abs(next, iterate);
    iterate = std::move(next);

    const std::vector<double> grad = lambda_gradient(lam, iterate, I0, G, p);
    lam = lambda_step(lam, grad, p.tau, p.lambda_min, p.lambda_max);

    trace.iterates = it;
    trace.mad_sequence.push_back(mad);
    trace.pcg_iters.push_back(sol.iterations);
    if (record_energy)
      trace.energy_sequence.push_back(detail::model_energy(
          iterate, I0, G, p, LambdaField::per_pixel(lam)));
    if (observer) observer(0, it, iterate, sys);
    if (mad < p.irls_tol) {
      trace.converged = true;
      break;
    }
  }
  return {std::move(iterate), std::move(lam), std::move(trace)};
}

}  // namespace rgif
