#include <catch2/catch_amalgamated.hpp>

#include "rgif/resample.hpp"
#include "test_util.hpp"

using rgif::Image;

namespace {

// Independent reference: literal Keys a = -0.5 cubic convolution evaluated
// as an explicit 4x4 kernel sum at each output coordinate.
double keys_ref(double t) {
  t = std::abs(t);
  if (t <= 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
  if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
  return 0.0;
}

double reference_sample(const Image& img, double out_x, double out_y,
                        double inv_factor_x, double inv_factor_y) {
  const double sx = (out_x + 0.5) * inv_factor_x - 0.5;
  const double sy = (out_y + 0.5) * inv_factor_y - 0.5;
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  double acc = 0.0;
  for (int j = -1; j <= 2; ++j)
    for (int i = -1; i <= 2; ++i)
      acc += keys_ref(sx - (x0 + i)) * keys_ref(sy - (y0 + j)) *
             img.at_clamped(x0 + i, y0 + j);
  return acc;
}

}  // namespace

TEST_CASE("constant images stay constant under upsampling") {
  const Image c = testutil::constant_image(4, 3, 1, 88.5);
  const Image up = rgif::bicubic_resample(c, 8.0);
  CHECK(up.width == 32);
  CHECK(up.height == 24);
  for (double v : up.data) CHECK(v == Catch::Approx(88.5).epsilon(1e-12));
}

TEST_CASE("factor 1 is the identity") {
  const Image img = testutil::random_image(6, 5, 3, 0, 255, 12);
  const Image same = rgif::bicubic_resample(img, 1.0);
  CHECK(same.data == img.data);
}

TEST_CASE("2x upsampling of a ramp matches the kernel-sum reference") {
  Image ramp(4, 4, 1);
  for (int i = 0; i < 16; ++i) ramp.data[i] = i;
  const Image up = rgif::bicubic_resample(ramp, 2.0);
  REQUIRE(up.width == 8);
  REQUIRE(up.height == 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      CHECK(up.at(x, y) ==
            Catch::Approx(reference_sample(ramp, x, y, 0.5, 0.5))
                .margin(1e-12));
}

TEST_CASE("non-positive factors are rejected") {
  const Image img = testutil::constant_image(2, 2, 1, 0);
  CHECK_THROWS_AS(rgif::bicubic_resample(img, 0.0), rgif::ContractError);
  CHECK_THROWS_AS(rgif::bicubic_resample(img, -2.0), rgif::ContractError);
}

TEST_CASE("downsampling produces the rounded size") {
  const Image img = testutil::random_image(10, 7, 1, 0, 255, 5);
  const Image down = rgif::bicubic_resample(img, 0.5);
  CHECK(down.width == 5);
  CHECK(down.height == 4);  // round(3.5) away from zero
}
