#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rgif/image.hpp"
#include "rgif/kernels.hpp"
#include "rgif/lambda_map.hpp"

namespace rgif::oracle {

/// Dense mirror of one IRLS linear system, built by literal transcription
/// of the per-pixel normal equations. Desk-scale only.
struct DenseSystem {
  int n = 0;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

inline constexpr int kDenseGuard = 4096;

inline DenseSystem dense_assemble(const Image& I_n, const Image& I0,
                                  const Image& G, const FilterParams& p,
                                  const LambdaField& lam) {
  const int w = I0.width, h = I0.height;
  const int n = w * h;
  if (n > kDenseGuard)
    throw ContractError("oracle: image too large for dense work");
  DenseSystem sys;
  sys.n = n;
  sys.A = Eigen::MatrixXd::Zero(n, n);
  sys.b = Eigen::VectorXd::Zero(n);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      const double vi = I_n.at(x, y);
      const double lam_d = lam.data_at(x, y);
      double wd_sum = 0.0;
      for (int dy = -p.r_d; dy <= p.r_d; ++dy)
        for (int dx = -p.r_d; dx <= p.r_d; ++dx) {
          const int xj = x + dx, yj = y + dy;
          if (xj < 0 || xj >= w || yj < 0 || yj >= h) continue;
          const double r = vi - I0.at(xj, yj);
          const double wd =
              spatial_weight(dy, dx, p.sigma_d) * phi_prime(r * r, lam_d);
          wd_sum += wd;
          sys.b(i) += (1.0 - p.alpha) * wd * I0.at(xj, yj);
        }
      double s_sum = 0.0;
      for (int dy = -p.r_s; dy <= p.r_s; ++dy)
        for (int dx = -p.r_s; dx <= p.r_s; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int xj = x + dx, yj = y + dy;
          if (xj < 0 || xj >= w || yj < 0 || yj >= h) continue;
          const int j = yj * w + xj;
          const double diff = vi - I_n.at(xj, yj);
          double s;
          if (lam.is_uniform()) {
            s = phi_prime(diff * diff, lam.smooth_at(x, y));
          } else {
            // Same endpoint-mean symmetrization as the production path.
            s = 0.5 * (phi_prime(diff * diff, lam.smooth_at(x, y)) +
                       phi_prime(diff * diff, lam.smooth_at(xj, yj)));
          }
          const double wg =
              guidance_weight(x, y, xj, yj, G, p.sigma_s, p.sigma_g);
          sys.A(i, j) -= 2.0 * p.alpha * wg * s;
          s_sum += wg * s;
        }
      sys.A(i, i) = (1.0 - p.alpha) * wd_sum + 2.0 * p.alpha * s_sum;
    }
  }
  return sys;
}

/// Direct factorization solve of the dense mirror.
inline std::vector<double> dense_assemble_solve(const Image& I_n,
                                                const Image& I0,
                                                const Image& G,
                                                const FilterParams& p,
                                                const LambdaField& lam) {
  const DenseSystem sys = dense_assemble(I_n, I0, G, p, lam);
  Eigen::VectorXd x = sys.A.ldlt().solve(sys.b);
  return std::vector<double>(x.data(), x.data() + sys.n);
}

/// Eq.-(1)-style energy by direct double summation over clipped windows.
inline double energy(const Image& I, const Image& I0, const Image& G,
                     const FilterParams& p, const LambdaField& lam) {
  if (!I.same_dims(I0) || !G.same_spatial_dims(I0))
    throw ContractError("oracle energy: dimension mismatch");
  const int w = I.width, h = I.height;
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double vi = I.at(x, y);
      const double lam_d = lam.data_at(x, y);
      const double lam_s = lam.smooth_at(x, y);
      for (int dy = -p.r_d; dy <= p.r_d; ++dy)
        for (int dx = -p.r_d; dx <= p.r_d; ++dx) {
          const int xj = x + dx, yj = y + dy;
          if (xj < 0 || xj >= w || yj < 0 || yj >= h) continue;
          const double r = vi - I0.at(xj, yj);
          total += (1.0 - p.alpha) * spatial_weight(dy, dx, p.sigma_d) *
                   phi(r * r, lam_d);
        }
      for (int dy = -p.r_s; dy <= p.r_s; ++dy)
        for (int dx = -p.r_s; dx <= p.r_s; ++dx) {
          const int xj = x + dx, yj = y + dy;
          if (xj < 0 || xj >= w || yj < 0 || yj >= h) continue;
          const double diff = vi - I.at(xj, yj);
          total += p.alpha *
                   guidance_weight(x, y, xj, yj, G, p.sigma_s, p.sigma_g) *
                   phi(diff * diff, lam_s);
        }
    }
  }
  return total;
}

/// Quadratic WLS solve: pixel-to-pixel data term for r_d = 0, aggregated
/// (pixel-to-patch) data term for r_d > 0, kappa = guidance weight,
/// c = data-window Gaussian. A single sparse direct solve.
inline Image wls_solve(const Image& I0, const Image& G,
                       const FilterParams& p) {
  if (I0.channels != 1)
    throw ContractError("wls_solve: single-channel targets only");
  const int w = I0.width, h = I0.height;
  const int n = w * h;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) *
               (2 * p.r_s + 1) * (2 * p.r_s + 1));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      double diag = 0.0;
      for (int dy = -p.r_d; dy <= p.r_d; ++dy)
        for (int dx = -p.r_d; dx <= p.r_d; ++dx) {
          const int xj = x + dx, yj = y + dy;
          if (xj < 0 || xj >= w || yj < 0 || yj >= h) continue;
          const double c = spatial_weight(dy, dx, p.sigma_d);
          diag += (1.0 - p.alpha) * c;
          b(i) += (1.0 - p.alpha) * c * I0.at(xj, yj);
        }
      for (int dy = -p.r_s; dy <= p.r_s; ++dy)
        for (int dx = -p.r_s; dx <= p.r_s; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int xj = x + dx, yj = y + dy;
          if (xj < 0 || xj >= w || yj < 0 || yj >= h) continue;
          const double kappa =
              guidance_weight(x, y, xj, yj, G, p.sigma_s, p.sigma_g);
          diag += 2.0 * p.alpha * kappa;
          trip.emplace_back(i, yj * w + xj, -2.0 * p.alpha * kappa);
        }
      trip.emplace_back(i, i, diag);
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success)
    throw ContractError("wls_solve: factorization failed");
  const Eigen::VectorXd x = solver.solve(b);
  Image out = I0;
  for (int i = 0; i < n; ++i) out.data[i] = x(i);
  return out;
}

}  // namespace rgif::oracle
