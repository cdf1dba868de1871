// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned here and nowhere else.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rgif/oracle.hpp"
#include "rgif/rgif.hpp"
#include "test_util.hpp"

namespace {

using rgif::FilterParams;
using rgif::Image;
using rgif::LambdaField;
using rgif::LambdaMap;

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// --- criterion 1: sparse assemble + PCG matches the dense direct solve ----

bool criterion_oracle_equivalence(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  const double alphas[] = {0.3, 0.9};
  const int rds[] = {0, 2};
  const double lambdas[] = {5.0, rgif::kInfLambda};
  for (int inst = 0; inst < 20; ++inst) {
    const Image I0 = testutil::random_image(16, 16, 1, 0, 255, 100 + inst);
    const Image In = I0;  // first IRLS iterate: the solve starts from the input
    const Image G = testutil::random_image(16, 16, 3, 0, 255, 300 + inst);
    FilterParams p;
    p.alpha = alphas[inst % 2];
    p.r_d = rds[(inst / 2) % 2];
    p.r_s = 2;
    p.sigma_d = 2.0;
    p.sigma_s = 2.0;
    p.sigma_g = 15.0;
    p.lambda_d = lambdas[(inst / 4) % 2];
    p.lambda_s = p.lambda_d;
    p.pcg_tol = 1e-10;
    p.pcg_maxit = 10000;
    const LambdaField lam = LambdaField::uniform(p.lambda_d, p.lambda_s);

    const rgif::SparseSystem sys = rgif::assemble_system(In, I0, G, p, lam);
    const auto sol = rgif::pcg_solve(sys, std::vector<double>(sys.n, 0.0),
                                     p.pcg_tol, p.pcg_maxit);
    const auto dense = rgif::oracle::dense_assemble_solve(In, I0, G, p, lam);
    worst = std::max(worst, max_abs_diff(sol.x, dense));
  }
  const double elapsed = seconds_since(t0);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max abs diff %.3g (tol 1e-8), %.2f s (< 10 s)",
                worst, elapsed);
  detail = buf;
  return worst < 1e-8 && elapsed < 10.0;
}

// --- criterion 2: energy monotone over IRLS iterations --------------------

bool criterion_energy_monotone(std::string& detail) {
  double worst_ratio = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const Image I0 = testutil::random_image(32, 32, 1, 0, 255, 400 + inst);
    const Image G = testutil::random_image(32, 32, 3, 0, 255, 500 + inst);
    FilterParams p;
    p.alpha = inst % 2 ? 0.9 : 0.6;
    p.r_d = 1;
    p.r_s = 2;
    p.sigma_d = 2.0;
    p.sigma_s = 2.0;
    p.lambda_d = 10.0;
    p.lambda_s = 10.0;
    p.irls_maxit = 10;
    p.irls_tol = 0.0;
    p.pcg_tol = 1e-10;
    p.pcg_maxit = 10000;
    const LambdaField lam = LambdaField::uniform(p.lambda_d, p.lambda_s);

    Image iterate = I0;
    double prev = rgif::oracle::energy(iterate, I0, G, p, lam);
    for (int it = 0; it < 10; ++it) {
      const rgif::SparseSystem sys = rgif::assemble_system(iterate, I0, G, p, lam);
      auto sol = rgif::pcg_solve(sys, iterate.data, p.pcg_tol, p.pcg_maxit);
      iterate.data = std::move(sol.x);
      const double e = rgif::oracle::energy(iterate, I0, G, p, lam);
      worst_ratio = std::max(worst_ratio, (e - prev) / std::abs(prev));
      prev = e;
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "worst relative increase %.3g (slack 1e-8)", worst_ratio);
  detail = buf;
  return worst_ratio <= 1e-8;
}

// --- criterion 3: quadratic special cases ----------------------------------

bool criterion_special_cases(std::string& detail) {
  const Image I0 = testutil::random_image(14, 12, 1, 0, 255, 600);
  const Image G = testutil::random_image(14, 12, 3, 0, 255, 601);
  double worst = 0.0;
  for (int r_d : {0, 2}) {
    FilterParams p;
    p.alpha = 0.7;
    p.r_d = r_d;
    p.r_s = 2;
    p.sigma_d = 2.0;
    p.sigma_s = 2.0;
    p.lambda_d = rgif::kInfLambda;
    p.lambda_s = rgif::kInfLambda;
    p.pcg_tol = 1e-12;
    p.pcg_maxit = 20000;
    p.irls_maxit = 1;
    const Image init = testutil::random_image(14, 12, 1, 0, 255, 602);
    auto [one_step, trace] = rgif::irls_filter(I0, G, p, init);
    const Image wls = rgif::oracle::wls_solve(I0, G, p);
    worst = std::max(worst, max_abs_diff(one_step.data, wls.data));
  }

  double worst_limit = 0.0;
  for (int x = 0; x <= 255; ++x) {
    const double x2 = static_cast<double>(x) * x;
    const double err =
        std::abs(rgif::phi(x2, 1e8) - x2) / std::max(x2, 1.0);
    worst_limit = std::max(worst_limit, err);
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max WLS diff %.3g (tol 1e-8); quadratic limit err %.3g (tol 1e-6)",
                worst, worst_limit);
  detail = buf;
  return worst < 1e-8 && worst_limit < 1e-6;
}

// --- criterion 4: lambda gradient vs finite differences --------------------

bool criterion_gradient(std::string& detail) {
  const int w = 12, h = 12;
  const Image I0 = testutil::random_image(w, h, 1, 0, 255, 700);
  const Image In = testutil::random_image(w, h, 1, 0, 255, 701);
  const Image G = testutil::random_image(w, h, 3, 0, 255, 702);
  FilterParams p;
  p.alpha = 0.6;
  p.r_d = 1;
  p.r_s = 2;
  p.sigma_d = 2.0;
  p.sigma_s = 2.0;
  p.sigma_g = 15.0;
  p.beta = 0.0;
  LambdaMap lam(w, h, 0.0);
  std::mt19937 rng(703);
  std::uniform_real_distribution<double> U(4.0, 12.0);
  for (double& v : lam.values) v = U(rng);

  const auto grad = rgif::lambda_gradient(lam, In, I0, G, p);
  std::uniform_int_distribution<int> pick(0, w * h - 1);
  const double hstep = 1e-4;
  double worst_fd = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int i = pick(rng);
    LambdaMap plus = lam, minus = lam;
    plus.values[i] += hstep;
    minus.values[i] -= hstep;
    const double fd =
        (rgif::oracle::energy(In, I0, G, p, LambdaField::per_pixel(plus)) -
         rgif::oracle::energy(In, I0, G, p, LambdaField::per_pixel(minus))) /
        (2.0 * hstep);
    worst_fd = std::max(worst_fd, std::abs(grad[i] - fd));
  }

  // beta > 0: regularizer contribution checked against an independent
  // dense 4-neighbor Laplacian.
  p.beta = 0.5;
  const auto grad_reg = rgif::lambda_gradient(lam, In, I0, G, p);
  double worst_reg = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto at = [&](int xx, int yy) {
        return lam.at(std::clamp(xx, 0, w - 1), std::clamp(yy, 0, h - 1));
      };
      const double lap = at(x - 1, y) + at(x + 1, y) + at(x, y - 1) +
                         at(x, y + 1) - 4.0 * at(x, y);
      const int i = y * w + x;
      worst_reg = std::max(
          worst_reg, std::abs((grad_reg[i] - grad[i]) - (-2.0 * p.beta * lap)));
    }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max FD error %.3g (tol 1e-5); regularizer error %.3g (tol 1e-10)",
                worst_fd, worst_reg);
  detail = buf;
  return worst_fd < 1e-5 && worst_reg < 1e-10;
}

// --- criterion 5: structural invariants on every iteration -----------------

bool criterion_invariants(std::string& detail) {
  bool ok = true;
  int iterations_checked = 0;
  for (int inst = 0; inst < 6; ++inst) {
    const Image I0 = inst % 2
                         ? testutil::random_image(18, 15, 1, 0, 255, 800 + inst)
                         : testutil::noisy_step(18, 15, 50, 200, 10, 800 + inst);
    const Image G = testutil::random_image(18, 15, 3, 0, 255, 900 + inst);
    FilterParams p;
    p.alpha = inst % 2 ? 0.9 : 0.5;
    p.r_d = inst % 3;
    p.r_s = 2;
    p.sigma_d = 2.0;
    p.sigma_s = 2.0;
    p.lambda_d = 8.0;
    p.lambda_s = 8.0;
    p.irls_maxit = 5;
    p.irls_tol = 0.0;
    const auto [lo, hi] = testutil::data_range(I0);
    const double eps = 1e-6 * (hi - lo);

    auto [out, trace] = rgif::irls_filter(
        I0, G, p, I0, false,
        [&](int, int, const Image& iterate, const rgif::SparseSystem& sys) {
          ++iterations_checked;
          const Eigen::MatrixXd A = testutil::dense_from_sparse(sys);
          if ((A - A.transpose()).cwiseAbs().maxCoeff() != 0.0) ok = false;
          for (int i = 0; i < sys.n; ++i) {
            if (!(sys.diag[i] > 0.0)) ok = false;
            double off = 0.0;
            for (int j = 0; j < sys.n; ++j) {
              if (i != j) {
                if (A(i, j) > 0.0) ok = false;
                off += std::abs(A(i, j));
              }
            }
            if (!(sys.diag[i] > off)) ok = false;
          }
          for (double v : iterate.data)
            if (v < lo - eps || v > hi + eps) ok = false;
        });

    // Constant preservation, one iteration, exact structure.
    const Image c = testutil::constant_image(18, 15, 1, 77.0);
    auto [cout_img, ctrace] = rgif::irls_filter(c, G, p, c);
    for (double v : cout_img.data)
      if (std::abs(v - 77.0) > 1e-8) ok = false;
  }
  detail = std::to_string(iterations_checked) + " iterations checked";
  return ok && iterations_checked == 30;
}

// --- criterion 6: convergence speed / runtime ------------------------------

bool criterion_convergence_speed(std::string& detail) {
  const struct { double alpha; int factor; } cases[] = {
      {0.6, 2}, {0.8, 4}, {0.9, 8}, {0.93, 16}};
  bool ok = true;
  std::string agg;
  for (const auto& c : cases) {
    const auto scene = testutil::make_depth_scene(256, 256, c.factor, 5.0, 42);
    FilterParams p = rgif::preset(rgif::Application::kDepthUpsample, c.factor);
    p.irls_tol = 0.1;
    p.irls_maxit = 20;
    const auto t0 = std::chrono::steady_clock::now();
    const auto res =
        rgif::depth_upsample(scene.lowres, scene.guidance, c.factor, p);
    const double elapsed = seconds_since(t0);
    const bool converged = res.trace.converged && res.trace.iterates <= 20;
    if (!converged || elapsed >= 60.0) ok = false;
    char buf[96];
    std::snprintf(buf, sizeof(buf), " a=%.2f: %d it, %.1f s;", c.alpha,
                  res.trace.iterates, elapsed);
    agg += buf;
  }
  detail = "MAD<0.1 within 20 it, <60 s each:" + agg;
  return ok;
}

// --- criteria 7 + 8: synthetic depth upsampling and lambda-map behavior ----

struct DepthEval {
  bool quality = false;
  bool texture = false;
  bool lambda = false;
  std::string detail7;
  std::string detail8;
  Image output;
};

DepthEval evaluate_depth_scene() {
  DepthEval ev;
  const auto scene = testutil::make_depth_scene(64, 64, 8, 5.0, 4242);
  const FilterParams p = rgif::preset(rgif::Application::kDepthUpsample, 8);

  const auto res = rgif::depth_upsample(scene.lowres, scene.guidance, 8, p);
  ev.output = res.output;
  const Image bicubic = rgif::bicubic_resample(scene.lowres, 8);

  FilterParams pw = p;  // same windows, quadratic norms
  pw.lambda_d = rgif::kInfLambda;
  pw.lambda_s = rgif::kInfLambda;
  const Image wls = rgif::oracle::wls_solve(bicubic, scene.guidance, pw);

  const double mae_rgif = rgif::mean_abs(res.output, scene.truth);
  const double mae_bicubic = rgif::mean_abs(bicubic, scene.truth);
  const double mae_wls = rgif::mean_abs(wls, scene.truth);
  ev.quality = mae_rgif < mae_bicubic && mae_rgif < mae_wls;

  const double tex_rgif = testutil::mean_gradient_magnitude(
      res.output, scene.tex_x0, scene.tex_x1, scene.tex_y0, scene.tex_y1);
  const double tex_wls = testutil::mean_gradient_magnitude(
      wls, scene.tex_x0, scene.tex_x1, scene.tex_y0, scene.tex_y1);
  ev.texture = tex_rgif < 0.5 * tex_wls;

  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "MAE rgif %.3f < bicubic %.3f and < wls %.3f; texture grad "
                "%.3f < 0.5 * %.3f",
                mae_rgif, mae_bicubic, mae_wls, tex_rgif, tex_wls);
  ev.detail7 = buf;

  // Lambda map: edge band vs flat interiors.
  const LambdaMap& lam = *res.lambda_map;
  const int w = 64, h = 64, mid = 32;
  double edge_sum = 0.0, flat_sum = 0.0;
  int edge_n = 0, flat_n = 0;
  for (int y = 4; y < h - 4; ++y)
    for (int x = 0; x < w; ++x) {
      if (x >= mid - 3 && x < mid + 3) {
        edge_sum += lam.at(x, y);
        ++edge_n;
      } else if (x >= mid + 8 && x < w - 4) {
        flat_sum += lam.at(x, y);
        ++flat_n;
      }
    }
  const double edge_mean = edge_sum / edge_n;
  const double flat_mean = flat_sum / flat_n;
  ev.lambda = edge_mean < flat_mean;
  std::snprintf(buf, sizeof(buf), "mean lambda edge %.3f < flat %.3f",
                edge_mean, flat_mean);
  ev.detail8 = buf;
  return ev;
}

// --- criterion 9: determinism across thread counts -------------------------

bool criterion_determinism(std::string& detail) {
  bool ok = true;

  // Filtering path.
  const Image I0 = testutil::random_image(48, 40, 1, 0, 255, 1000);
  const Image G = testutil::random_image(48, 40, 3, 0, 255, 1001);
  FilterParams p;
  p.alpha = 0.9;
  p.r_d = 2;
  p.r_s = 3;
  p.sigma_d = 2.0;
  p.sigma_s = 3.0;
  p.irls_maxit = 5;
  p.irls_tol = 0.0;
  rgif::set_num_threads(1);
  auto [f1, tf1] = rgif::irls_filter(I0, G, p, I0);
  rgif::set_num_threads(4);
  auto [f4, tf4] = rgif::irls_filter(I0, G, p, I0);
  if (f1.data != f4.data) ok = false;

  // Full pipeline with lambda adaptation.
  const auto scene = testutil::make_depth_scene(64, 64, 8, 5.0, 4242);
  const FilterParams dp = rgif::preset(rgif::Application::kDepthUpsample, 8);
  rgif::set_num_threads(1);
  const auto r1 = rgif::depth_upsample(scene.lowres, scene.guidance, 8, dp);
  rgif::set_num_threads(3);
  const auto r3 = rgif::depth_upsample(scene.lowres, scene.guidance, 8, dp);
  rgif::set_num_threads(0);
  if (r1.output.data != r3.output.data) ok = false;
  if (r1.lambda_map->values != r3.lambda_map->values) ok = false;

  detail = ok ? "bit-identical across 1/3/4 threads"
              : "outputs differ across thread counts";
  return ok;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    bool ok;
    std::string detail;
  };
  std::vector<Entry> results;

  auto run = [&](int id, const char* name, auto&& fn) {
    std::string detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    results.push_back({id, name, ok, std::move(detail)});
  };

  run(1, "oracle equivalence", criterion_oracle_equivalence);
  run(2, "energy monotonicity", criterion_energy_monotone);
  run(3, "quadratic special cases", criterion_special_cases);
  run(4, "lambda gradient correctness", criterion_gradient);
  run(5, "structural invariants", criterion_invariants);
  run(6, "convergence speed", criterion_convergence_speed);

  DepthEval ev;
  std::string depth_err;
  try {
    ev = evaluate_depth_scene();
  } catch (const std::exception& e) {
    depth_err = std::string("exception: ") + e.what();
  }
  results.push_back({7, "synthetic depth upsampling",
                     ev.quality && ev.texture,
                     depth_err.empty() ? ev.detail7 : depth_err});
  results.push_back({8, "lambda-map edge behavior", ev.lambda,
                     depth_err.empty() ? ev.detail8 : depth_err});

  run(9, "determinism across threads", criterion_determinism);

  int failures = 0;
  for (const auto& r : results) {
    if (!r.ok) ++failures;
    std::printf("[%s] %d %s: %s\n", r.ok ? "PASS" : "FAIL", r.id, r.name,
                r.detail.c_str());
  }
  std::printf("%zu criteria, %d failed\n", results.size(), failures);
  return failures == 0 ? 0 : 1;
}
