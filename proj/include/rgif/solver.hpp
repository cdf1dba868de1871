#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "rgif/image.hpp"
#include "rgif/kernels.hpp"
#include "rgif/lambda_map.hpp"
#include "rgif/threading.hpp"

namespace rgif {

/// One IRLS iteration's linear system A x = rhs with
/// A = (1-alpha) W - 2 alpha S, stored as a stencil: the diagonal plus one
/// plane per half offset within radius r_s. Each plane holds the coupling
/// a(i, i+offset); the mirrored half is implied by symmetry.
struct SparseSystem {
  int width = 0;
  int height = 0;
  int n = 0;
  std::vector<std::pair<int, int>> offsets;  // (dy, dx), lexicographic > 0
  std::vector<double> planes;                // offsets.size() * n, entries <= 0
  std::vector<double> diag;                  // > 0
  std::vector<double> rhs;

  double plane_at(std::size_t k, int idx) const {
    return planes[k * static_cast<std::size_t>(n) + idx];
  }

  /// y = A x, row-parallel and deterministic. The inner loops run over
  /// precomputed in-bounds column ranges so they stay branch-free.
  void matvec(const std::vector<double>& x, std::vector<double>& y) const {
    y.resize(static_cast<std::size_t>(n));
    parallel_for(0, height, [&](int row) {
      const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(row) * width;
      double* out = y.data() + base;
      for (int col = 0; col < width; ++col)
        out[col] = diag[base + col] * x[base + col];
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        const auto [dy, dx] = offsets[k];
        const std::ptrdiff_t pk = static_cast<std::ptrdiff_t>(k) * n;
        if (row + dy < height) {
          // coupling a(i, i+offset), columns where col+dx stays in range
          const std::ptrdiff_t xf = base + static_cast<std::ptrdiff_t>(dy) * width + dx;
          const int c0 = std::max(0, -dx), c1 = std::min(width, width - dx);
          for (int col = c0; col < c1; ++col)
            out[col] += planes[pk + base + col] * x[xf + col];
        }
        if (row - dy >= 0) {
          // mirrored half: a(j, j+offset) with j = i - offset
          const std::ptrdiff_t xb = base - static_cast<std::ptrdiff_t>(dy) * width - dx;
          const int c0 = std::max(0, dx), c1 = std::min(width, width + dx);
          for (int col = c0; col < c1; ++col)
            out[col] += planes[pk + xb + col] * x[xb + col];
        }
      }
    });
  }
};

/// Outer-loop convergence record.
struct IrlsTrace {
  int iterates = 0;
  std::vector<double> mad_sequence;
  std::vector<double> energy_sequence;  // filled when energy recording is on
  std::vector<int> pcg_iters;
  bool converged = false;
  bool pcg_all_converged = true;
};

struct PcgResult {
  std::vector<double> x;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline std::vector<std::pair<int, int>> half_stencil(int r) {
  std::vector<std::pair<int, int>> offsets;
  for (int dy = 0; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dy > 0 || dx > 0) offsets.emplace_back(dy, dx);
  return offsets;
}

// Spatial Gaussian per window offset, indexed (dy+r)*(2r+1)+(dx+r).
inline std::vector<double> spatial_table(int r, double sigma) {
  std::vector<double> t((2 * r + 1) * (2 * r + 1));
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      t[(dy + r) * (2 * r + 1) + (dx + r)] = spatial_weight(dy, dx, sigma);
  return t;
}

}  // namespace detail

/// Builds the per-pixel normal equations for one IRLS iteration.
/// The smoothness weight is symmetrized as the mean of the two endpoint
/// evaluations when lambda varies per pixel (identical to the plain weight
/// for uniform lambda), keeping A exactly symmetric.
inline SparseSystem assemble_system(const Image& I_n, const Image& I0,
                                    const Image& G, const FilterParams& p,
                                    const LambdaField& lam) {
  p.validate();
  if (I_n.channels != 1 || I0.channels != 1)
    throw ContractError("assemble_system: expects single-channel images");
  if (!I_n.same_dims(I0) || !G.same_spatial_dims(I0))
    throw ContractError("assemble_system: dimension mismatch");
  if (lam.map && (lam.map->width != I0.width || lam.map->height != I0.height))
    throw ContractError("assemble_system: lambda map dimension mismatch");

  const int w = I0.width, h = I0.height;
  const double alpha = p.alpha;
  SparseSystem sys;
  sys.width = w;
  sys.height = h;
  sys.n = w * h;
  sys.offsets = detail::half_stencil(p.r_s);
  sys.planes.assign(sys.offsets.size() * static_cast<std::size_t>(sys.n), 0.0);
  sys.diag.assign(sys.n, 0.0);
  sys.rhs.assign(sys.n, 0.0);

  const auto data_spatial = detail::spatial_table(p.r_d, p.sigma_d);
  const double inv_2ss = 1.0 / (2.0 * p.sigma_s * p.sigma_s);
  std::vector<double> data_sum(sys.n, 0.0);

  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      const double lam_d = lam.data_at(x, y);
      const double vi = I_n.at(x, y);

      // Data term: pixel-to-patch against the input image.
      double wd_sum = 0.0, rhs_i = 0.0;
      for (int dy = -p.r_d; dy <= p.r_d; ++dy) {
        const int yj = y + dy;
        if (yj < 0 || yj >= h) continue;
        for (int dx = -p.r_d; dx <= p.r_d; ++dx) {
          const int xj = x + dx;
          if (xj < 0 || xj >= w) continue;
          const double r = vi - I0.at(xj, yj);
          const double wd =
              data_spatial[(dy + p.r_d) * (2 * p.r_d + 1) + (dx + p.r_d)] *
              phi_prime(r * r, lam_d);
          wd_sum += wd;
          rhs_i += wd * I0.at(xj, yj);
        }
      }
      data_sum[i] = wd_sum;
      sys.rhs[i] = (1.0 - alpha) * rhs_i;

      // Smoothness couplings, forward half of the stencil only.
      const double lam_s_i = lam.smooth_at(x, y);
      for (std::size_t k = 0; k < sys.offsets.size(); ++k) {
        const auto [dy, dx] = sys.offsets[k];
        const int yj = y + dy, xj = x + dx;
        if (yj >= h || xj < 0 || xj >= w) continue;
        const double diff = vi - I_n.at(xj, yj);
        const double x2 = diff * diff;
        double s;
        if (lam.is_uniform()) {
          s = phi_prime(x2, lam_s_i);
        } else {
          s = 0.5 * (phi_prime(x2, lam_s_i) +
                     phi_prime(x2, lam.smooth_at(xj, yj)));
        }
        const double wg =
            std::exp(-static_cast<double>(dy * dy + dx * dx) * inv_2ss +
                     guidance_range_exponent(G, x, y, xj, yj, p.sigma_g));
        sys.planes[k * static_cast<std::size_t>(sys.n) + i] =
            -2.0 * alpha * wg * s;
      }
    }
  });

  // diag_i = (1-alpha) * sum(w d) + 2 alpha * sum(w^g s), the latter being
  // minus the full-window off-diagonal row sum.
  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      double off = 0.0;
      for (std::size_t k = 0; k < sys.offsets.size(); ++k) {
        const auto [dy, dx] = sys.offsets[k];
        if (y + dy < h && x + dx >= 0 && x + dx < w) off += sys.plane_at(k, i);
        const int yb = y - dy, xb = x - dx;
        if (yb >= 0 && xb >= 0 && xb < w)
          off += sys.plane_at(k, yb * w + xb);
      }
      sys.diag[i] = (1.0 - alpha) * data_sum[i] - off;
    }
  });
  return sys;
}

/// Jacobi-preconditioned conjugate gradients. Non-convergence within maxit
/// is reported through the flag, not as a failure.
///
/// The returned iterate satisfies ||A x - rhs||_2 <= tol ||rhs||_2 whenever
/// convergence is flagged. A small residual does not mean a small error, so
/// once that holds the solve keeps going while a certified forward-error
/// bound is still out of reach and the residual keeps dropping at a
/// geometric rate: the assembled systems are diagonally dominant M-matrices,
/// for which ||A^{-1}||_inf <= 1 / min_i (a_ii - sum_j |a_ij|), making
/// ||r||_inf <= tol * gap * max(1, ||x||_inf) a per-entry error certificate.
/// Stiff systems whose refinement stalls stop early and keep the l2-accurate
/// iterate, so the extra phase never runs away with the iteration budget.
inline PcgResult pcg_solve(const SparseSystem& sys,
                           const std::vector<double>& x0, double tol,
                           int maxit) {
  const int n = sys.n;
  if (static_cast<int>(x0.size()) != n)
    throw ContractError("pcg_solve: bad initial vector size");
  for (int i = 0; i < n; ++i)
    if (!(sys.diag[i] > 0.0))
      throw ContractError("pcg_solve: non-positive diagonal");

  PcgResult res;
  res.x = x0;
  const double bnorm2 = deterministic_dot(sys.rhs, sys.rhs);
  if (bnorm2 == 0.0) {
    res.x.assign(n, 0.0);
    res.converged = true;
    return res;
  }
  const double stop2 = tol * tol * bnorm2;

  // Smallest row dominance gap, the constant behind the error certificate.
  double gap = 0.0;
  {
    std::vector<double> offsum(static_cast<std::size_t>(n), 0.0);
    for (std::size_t k = 0; k < sys.offsets.size(); ++k) {
      const auto [dy, dx] = sys.offsets[k];
      for (int row = 0; row + dy < sys.height; ++row)
        for (int col = std::max(0, -dx);
             col < std::min(sys.width, sys.width - dx); ++col) {
          const int i = row * sys.width + col;
          const double a = std::abs(sys.plane_at(k, i));
          offsum[i] += a;
          offsum[(row + dy) * sys.width + col + dx] += a;
        }
    }
    gap = sys.diag[0] - offsum[0];
    for (int i = 1; i < n; ++i) gap = std::min(gap, sys.diag[i] - offsum[i]);
  }

  std::vector<double> r(n), z(n), d(n), q(n);
  sys.matvec(res.x, q);
  parallel_for(0, n, [&](int i) { r[i] = sys.rhs[i] - q[i]; });
  double rnorm2 = deterministic_dot(r, r);
  if (rnorm2 <= stop2) {
    res.converged = true;
    return res;
  }
  parallel_for(0, n, [&](int i) { z[i] = r[i] / sys.diag[i]; });
  d = z;
  double rz = deterministic_dot(r, z);

  int phase = 0;  // 0: chase the l2 target, 1: certified refine, 2: polish
  int polish_left = 3;
  double rinf_ref = 0.0;
  int ref_it = 0;
  for (int it = 1; it <= maxit; ++it) {
    sys.matvec(d, q);
    const double dq = deterministic_dot(d, q);
    const double step = rz / dq;
    parallel_for(0, n, [&](int i) {
      res.x[i] += step * d[i];
      r[i] -= step * q[i];
    });
    res.iterations = it;
    rnorm2 = deterministic_dot(r, r);
    if (rnorm2 == 0.0) {
      res.converged = true;
      break;
    }
    if (phase == 0 && rnorm2 <= stop2) {
      res.converged = true;
      if (gap <= 0.0) break;
      phase = 1;
      rinf_ref = std::numeric_limits<double>::infinity();
      ref_it = it;
    }
    if (phase == 1) {
      double rinf = 0.0, xinf = 0.0;
      for (int i = 0; i < n; ++i) {
        rinf = std::max(rinf, std::abs(r[i]));
        xinf = std::max(xinf, std::abs(res.x[i]));
      }
      if (rinf <= tol * gap * std::max(1.0, xinf)) {
        phase = 2;
      } else if (it - ref_it >= 5) {
        if (rinf > 0.5 * rinf_ref) break;  // stalled; the l2 iterate stands
        rinf_ref = rinf;
        ref_it = it;
      }
    } else if (phase == 2) {
      if (polish_left == 0) break;
      --polish_left;
    }
    parallel_for(0, n, [&](int i) { z[i] = r[i] / sys.diag[i]; });
    const double rz_new = deterministic_dot(r, z);
    const double dir_scale = rz_new / rz;
    rz = rz_new;
    parallel_for(0, n, [&](int i) { d[i] = z[i] + dir_scale * d[i]; });
  }
  return res;
}

namespace detail {

/// Direct double-summation of the model energy of one channel, used for
/// the optional trace. The test oracle keeps its own transcription.
inline double model_energy(const Image& I, const Image& I0, const Image& G,
                           const FilterParams& p, const LambdaField& lam) {
  const int w = I.width, h = I.height;
  const auto data_spatial = spatial_table(p.r_d, p.sigma_d);
  const double inv_2ss = 1.0 / (2.0 * p.sigma_s * p.sigma_s);
  std::vector<double> row_sum(h, 0.0);
  parallel_for(0, h, [&](int y) {
    double acc = 0.0;
    for (int x = 0; x < w; ++x) {
      const double vi = I.at(x, y);
      const double lam_d = lam.data_at(x, y);
      const double lam_s = lam.smooth_at(x, y);
      for (int dy = -p.r_d; dy <= p.r_d; ++dy)
        for (int dx = -p.r_d; dx <= p.r_d; ++dx) {
          const int xj = x + dx, yj = y + dy;
          if (xj < 0 || xj >= w || yj < 0 || yj >= h) continue;
          const double r = vi - I0.at(xj, yj);
          acc += (1.0 - p.alpha) *
                 data_spatial[(dy + p.r_d) * (2 * p.r_d + 1) + (dx + p.r_d)] *
                 phi(r * r, lam_d);
        }
      for (int dy = -p.r_s; dy <= p.r_s; ++dy)
        for (int dx = -p.r_s; dx <= p.r_s; ++dx) {
          const int xj = x + dx, yj = y + dy;
          if (xj < 0 || xj >= w || yj < 0 || yj >= h) continue;
          const double diff = vi - I.at(xj, yj);
          const double wg =
              std::exp(-static_cast<double>(dy * dy + dx * dx) * inv_2ss +
                       guidance_range_exponent(G, x, y, xj, yj, p.sigma_g));
          acc += p.alpha * wg * phi(diff * diff, lam_s);
        }
    }
    row_sum[y] = acc;
  });
  double total = 0.0;
  for (double v : row_sum) total += v;
  return total;
}

}  // namespace detail

/// Per-iteration hook: channel index, outer iteration (1-based), the new
/// iterate, and the system it was solved from.
using IterObserver = std::function<void(int channel, int iter,
                                        const Image& iterate,
                                        const SparseSystem& sys)>;

/// IRLS driver for one channel with a fixed lambda field.
inline std::pair<Image, IrlsTrace> irls_filter_channel(
    const Image& I0, const Image& G, const FilterParams& p, const Image& init,
    const LambdaField& lam, bool record_energy = false,
    const IterObserver& observer = nullptr, int channel = 0) {
  if (!init.same_dims(I0))
    throw ContractError("irls_filter: init dimension mismatch");
  Image iterate = init;
  IrlsTrace trace;
  for (int it = 1; it <= p.irls_maxit; ++it) {
    const SparseSystem sys = assemble_system(iterate, I0, G, p, lam);
    PcgResult sol = pcg_solve(sys, iterate.data, p.pcg_tol, p.pcg_maxit);
    if (!sol.converged) trace.pcg_all_converged = false;
    Image next = iterate;
    next.data = std::move(sol.x);
    const double mad = mean_abs(next, iterate);
    iterate = std::move(next);
    trace.iterates = it;
    trace.mad_sequence.push_back(mad);
    trace.pcg_iters.push_back(sol.iterations);
    if (record_energy)
      trace.energy_sequence.push_back(
          detail::model_energy(iterate, I0, G, p, lam));
    if (observer) observer(channel, it, iterate, sys);
    if (mad < p.irls_tol) {
      trace.converged = true;
      break;
    }
  }
  return {std::move(iterate), std::move(trace)};
}

namespace detail {

inline void merge_traces(IrlsTrace& into, const IrlsTrace& t) {
  into.iterates = std::max(into.iterates, t.iterates);
  into.converged = into.converged && t.converged;
  into.pcg_all_converged = into.pcg_all_converged && t.pcg_all_converged;
  auto extend = [](auto& dst, const auto& src) {
    if (dst.size() < src.size()) dst.resize(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
  };
  extend(into.mad_sequence, t.mad_sequence);
  extend(into.energy_sequence, t.energy_sequence);
  extend(into.pcg_iters, t.pcg_iters);
}

}  // namespace detail

/// Full IRLS filter: multi-channel targets are dispatched per channel with
/// the shared guidance. Uniform lambda_d / lambda_s from the parameters.
inline std::pair<Image, IrlsTrace> irls_filter(
    const Image& I0, const Image& G, const FilterParams& p, const Image& init,
    bool record_energy = false, const IterObserver& observer = nullptr) {
  if (!init.same_dims(I0))
    throw ContractError("irls_filter: init dimension mismatch");
  const LambdaField lam = LambdaField::uniform(p.lambda_d, p.lambda_s);
  if (I0.channels == 1)
    return irls_filter_channel(I0, G, p, init, lam, record_energy, observer);

  Image out = I0;
  IrlsTrace merged;
  merged.converged = true;
  for (int c = 0; c < I0.channels; ++c) {
    auto [filtered, trace] =
        irls_filter_channel(extract_channel(I0, c), G, p,
                            extract_channel(init, c), lam, record_energy,
                            observer, c);
    insert_channel(out, c, filtered);
    detail::merge_traces(merged, trace);
  }
  // Summed per-channel MADs; rescale to a mean for the stopping metric view.
  for (double& v : merged.mad_sequence) v /= I0.channels;
  return {std::move(out), std::move(merged)};
}

}  // namespace rgif
