#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "rgif/oracle.hpp"
#include "rgif/solver.hpp"
#include "test_util.hpp"

using rgif::FilterParams;
using rgif::Image;
using rgif::LambdaField;
using rgif::LambdaMap;

TEST_CASE("energy of a perfect fit is zero") {
  const Image c = testutil::constant_image(5, 4, 1, 33.0);
  FilterParams p;
  p.r_d = 1;
  p.r_s = 1;
  CHECK(rgif::oracle::energy(c, c, c, p,
                             LambdaField::uniform(10.0, 10.0)) == 0.0);
}

TEST_CASE("single-pixel energy reduces to the data norm") {
  Image I0(1, 1, 1, 0.0);
  Image I(1, 1, 1, 12.0);
  FilterParams p;
  p.alpha = 0.7;
  p.r_d = 0;
  p.r_s = 1;
  const double got =
      rgif::oracle::energy(I, I0, I, p, LambdaField::uniform(9.0, 9.0));
  const double want = 0.3 * 2.0 * 81.0 * (1.0 - std::exp(-144.0 / 162.0));
  CHECK(got == Catch::Approx(want).epsilon(1e-12));
}

TEST_CASE("infinite lambda turns the energy into weighted least squares") {
  const Image I0 = testutil::random_image(6, 5, 1, 0, 255, 3);
  const Image I = testutil::random_image(6, 5, 1, 0, 255, 4);
  const Image G = testutil::random_image(6, 5, 3, 0, 255, 5);
  FilterParams p;
  p.alpha = 0.4;
  p.r_d = 1;
  p.r_s = 1;
  const double got = rgif::oracle::energy(
      I, I0, G, p, LambdaField::uniform(rgif::kInfLambda, rgif::kInfLambda));
  // Independent quadratic transcription.
  double want = 0.0;
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) {
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int xj = x + dx, yj = y + dy;
          if (xj < 0 || xj >= 6 || yj < 0 || yj >= 5) continue;
          const double r = I.at(x, y) - I0.at(xj, yj);
          want += (1.0 - p.alpha) * rgif::spatial_weight(dy, dx, p.sigma_d) *
                  r * r;
          const double d = I.at(x, y) - I.at(xj, yj);
          want += p.alpha *
                  rgif::guidance_weight(x, y, xj, yj, G, p.sigma_s, p.sigma_g) *
                  d * d;
        }
    }
  CHECK(got == Catch::Approx(want).epsilon(1e-12));
}

TEST_CASE("dense mirror is symmetric positive definite") {
  const Image I0 = testutil::random_image(8, 6, 1, 0, 255, 7);
  // Iterate = data keeps each pixel's self data weight at 1, so the data
  // block is strictly positive and the whole matrix strictly definite.
  const Image In = I0;
  const Image G = testutil::random_image(8, 6, 3, 0, 255, 9);
  FilterParams p;
  p.alpha = 0.9;
  p.r_d = 1;
  p.r_s = 2;
  LambdaMap lam(8, 6, 0.0);
  for (std::size_t i = 0; i < lam.values.size(); ++i)
    lam.values[i] = 3.0 + static_cast<double>(i % 5);
  const auto sys = rgif::oracle::dense_assemble(In, I0, G, p,
                                                LambdaField::per_pixel(lam));
  CHECK((sys.A - sys.A.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd eig = sys.A.selfadjointView<Eigen::Lower>()
                                  .eigenvalues();
  CHECK(eig.minCoeff() > 0.0);
}

TEST_CASE("direct solve satisfies its own normal equations") {
  const Image I0 = testutil::random_image(7, 7, 1, 0, 255, 11);
  const Image G = testutil::random_image(7, 7, 1, 0, 255, 12);
  FilterParams p;
  p.alpha = 0.8;
  p.r_d = 1;
  p.r_s = 1;
  const LambdaField lam = LambdaField::uniform(10.0, 10.0);
  const auto sys = rgif::oracle::dense_assemble(I0, I0, G, p, lam);
  const auto x = rgif::oracle::dense_assemble_solve(I0, I0, G, p, lam);
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), sys.n);
  CHECK((sys.A * xv - sys.b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("IRLS decreases the energy monotonically") {
  const Image I0 = testutil::noisy_step(14, 12, 50.0, 200.0, 12.0, 17);
  FilterParams p;
  p.alpha = 0.9;
  p.r_d = 1;
  p.r_s = 2;
  p.lambda_d = 10.0;
  p.lambda_s = 10.0;
  p.irls_maxit = 8;
  p.irls_tol = 0.0;
  p.pcg_tol = 1e-10;
  auto [out, trace] = rgif::irls_filter(I0, I0, p, I0, /*record_energy=*/true);
  REQUIRE(trace.energy_sequence.size() == 8);
  const double e0 = rgif::oracle::energy(
      I0, I0, I0, p, LambdaField::uniform(p.lambda_d, p.lambda_s));
  double prev = e0;
  for (double e : trace.energy_sequence) {
    CHECK(e <= prev + 1e-9 * std::abs(prev));
    prev = e;
  }
  // Trace energies come from the same definition as the oracle.
  Image final_iterate = out;
  CHECK(trace.energy_sequence.back() ==
        Catch::Approx(rgif::oracle::energy(
            final_iterate, I0, I0, p,
            LambdaField::uniform(p.lambda_d, p.lambda_s))).epsilon(1e-9));
}

TEST_CASE("wls_solve keeps constants fixed and stays in range") {
  const Image c = testutil::constant_image(9, 9, 1, 120.0);
  FilterParams p;
  p.r_d = 1;
  p.r_s = 2;
  const Image out = rgif::oracle::wls_solve(c, c, p);
  for (double v : out.data) CHECK(v == Catch::Approx(120.0).margin(1e-8));

  const Image I0 = testutil::random_image(9, 9, 1, 10, 240, 19);
  const Image smoothed = rgif::oracle::wls_solve(I0, I0, p);
  for (double v : smoothed.data) {
    CHECK(v >= 10.0 - 1e-6);
    CHECK(v <= 240.0 + 1e-6);
  }
  CHECK(testutil::total_variation(smoothed) < testutil::total_variation(I0));
}

TEST_CASE("dense guard rejects large images") {
  const Image big(70, 70, 1, 0.0);
  FilterParams p;
  CHECK_THROWS_AS(rgif::oracle::dense_assemble(big, big, big, p,
                                               LambdaField::uniform(10, 10)),
                  rgif::ContractError);
}
