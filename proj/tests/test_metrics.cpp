#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "specrec/metrics.hpp"
#include "test_util.hpp"

using namespace specrec;

namespace {

SpectralCube shifted(const SpectralCube& c, double d) {
  SpectralCube out = c;
  for (auto& v : out.data()) v += d;
  return out;
}

// Direct per-window SSIM with a full 2-D Gaussian window.
double ssim_direct(const Image2D& a, const Image2D& b) {
  double g[11][11], sum = 0;
  for (int j = 0; j < 11; ++j)
    for (int i = 0; i < 11; ++i) {
      g[j][i] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      sum += g[j][i];
    }
  double acc = 0;
  std::size_t count = 0;
  for (std::size_t y = 0; y + 11 <= a.height(); ++y)
    for (std::size_t x = 0; x + 11 <= a.width(); ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int j = 0; j < 11; ++j)
        for (int i = 0; i < 11; ++i) {
          const double w = g[j][i] / sum, va = a(x + i, y + j), vb = b(x + i, y + j);
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      const double c1 = 1e-4, c2 = 9e-4;
      acc += (2 * ma * mb + c1) * (2 * (sab - ma * mb) + c2) /
             ((ma * ma + mb * mb + c1) * (saa - ma * ma + sbb - mb * mb + c2));
      ++count;
    }
  return acc / static_cast<double>(count);
}

}  // namespace

TEST(Psnr, IdenticalIsCapped) {
  Rng rng(1);
  const auto a = tu::random_cube(6, 6, 3, rng);
  EXPECT_EQ(psnr(a, a), 99.0);
}

TEST(Psnr, UniformDifferences) {
  Rng rng(2);
  const auto a = tu::random_cube(8, 8, 2, rng);
  EXPECT_NEAR(psnr(a, shifted(a, 0.1)), 20.0, 1e-9);
  EXPECT_NEAR(psnr(a, shifted(a, 0.01)), 40.0, 1e-9);
  EXPECT_NEAR(psnr(a, shifted(a, 0.2), 2.0), 20.0, 1e-9);
  EXPECT_THROW(psnr(a, SpectralCube(8, 8, 3)), ShapeError);
}

TEST(Ssim, IdenticalIsOne) {
  Rng rng(3);
  const auto a = tu::random_image(20, 16, rng);
  EXPECT_EQ(ssim(a, a), 1.0);
}

TEST(Ssim, ConstantClosedForm) {
  const double expected = (2 * 0.16 + 1e-4) / (0.04 + 0.64 + 1e-4);
  EXPECT_NEAR(ssim(Image2D(16, 16, 0.2), Image2D(16, 16, 0.8)), expected, 1e-12);
  EXPECT_NEAR(expected, 0.4707, 1e-3);
}

TEST(Ssim, InvertedImageBelowOne) {
  Rng rng(4);
  const auto a = tu::random_image(16, 16, rng);
  Image2D b = a;
  for (auto& v : b.data()) v = 1.0 - v;
  EXPECT_LT(ssim(a, b), 1.0);
}

TEST(Ssim, MatchesDirectWindowedOracle) {
  Rng rng(5);
  const auto a = tu::random_image(17, 14, rng);
  auto b = a;
  for (auto& v : b.data()) v = 0.7 * v + 0.2 * rng.uniform();
  EXPECT_NEAR(ssim(a, b), ssim_direct(a, b), 1e-12);
}

TEST(Ssim, SmallImagesRejected) {
  EXPECT_THROW(ssim(Image2D(10, 20), Image2D(10, 20)), ShapeError);
  EXPECT_THROW(ssim(Image2D(12, 12), Image2D(12, 13)), ShapeError);
}

TEST(Sam, Examples) {
  Rng rng(6);
  const auto a = tu::random_cube(4, 4, 3, rng, 0.1, 1.0);
  const Region all{0, 0, 4, 4};
  EXPECT_NEAR(sam_region(a, a, all).mean_rad, 0.0, 1e-7);
  SpectralCube e0(1, 1, 2, {1, 0}), e1(1, 1, 2, {0, 1});
  EXPECT_NEAR(sam_region(e0, e1, {0, 0, 1, 1}).mean_rad, std::numbers::pi / 2, 1e-15);
  SpectralCube a2 = a;
  for (auto& v : a2.data()) v *= 2;
  EXPECT_NEAR(sam_region(a, a2, all).mean_rad, 0.0, 1e-7);
}

TEST(Sam, ScaleInvariance) {
  Rng rng(7);
  const auto a = tu::random_cube(6, 5, 4, rng), b = tu::random_cube(6, 5, 4, rng);
  SpectralCube b2 = b;
  for (auto& v : b2.data()) v *= 2;
  const Region all{0, 0, 6, 5};
  EXPECT_NEAR(sam_region(a, b2, all).mean_rad, sam_region(a, b, all).mean_rad, 1e-12);
}

TEST(Sam, ZeroNormPixelsSkipped) {
  SpectralCube a(2, 1, 2, {1, 0, 0, 0}), b(2, 1, 2, {1, 5, 1, 5});
  // pixel 1 of a is all zero
  const auto r = sam_region(a, b, {0, 0, 2, 1});
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_NEAR(r.mean_rad, std::acos(1.0 / std::sqrt(2.0)), 1e-14);
  EXPECT_THROW(sam_region(SpectralCube(2, 2, 2), SpectralCube(2, 2, 2), {0, 0, 2, 2}), DataError);
  EXPECT_THROW(sam_region(a, b, {1, 0, 2, 1}), ShapeError);
}

TEST(Evaluate, RegionCropsAllMetrics) {
  Rng rng(8);
  const auto a = tu::random_cube(24, 24, 3, rng);
  auto b = a;
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t y = 0; y < 12; ++y)
      for (std::size_t x = 0; x < 12; ++x) b(x, y, l) += 0.1;
  const auto clean = evaluate_region(a, b, {12, 12, 12, 12});
  EXPECT_EQ(clean.psnr_db, 99.0);
  EXPECT_EQ(clean.ssim, 1.0);
  const auto dirty = evaluate_region(a, b, {0, 0, 12, 12});
  EXPECT_NEAR(dirty.psnr_db, 20.0, 1e-9);
  EXPECT_TRUE(std::isnan(evaluate_region(a, b, {0, 0, 5, 5}).ssim));
}
