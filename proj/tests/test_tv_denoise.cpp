#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "specrec/tv_denoise.hpp"
#include "test_util.hpp"

using namespace specrec;

namespace {

Image2D noisy_step(std::size_t n, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  Image2D img(n, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) img(x, y) = (x < n / 2 ? 0.2 : 0.8) + sigma * rng.normal();
  return img;
}

double mean(const Image2D& img) {
  return std::accumulate(img.data().begin(), img.data().end(), 0.0) /
         static_cast<double>(img.size());
}

}  // namespace

TEST(TvObjective, ConstantImageHasZeroObjective) {
  const Image2D u(5, 4, 0.3);
  EXPECT_EQ(tv_objective(u, u, 2.0), 0.0);
}

TEST(TvObjective, SingleHorizontalJump) {
  const Image2D u(2, 1, {0.0, 1.0});
  EXPECT_DOUBLE_EQ(tv_objective(u, u, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(total_variation(u), 1.0);
}

TEST(TvObjective, ZeroWeightIsHalfSquaredError) {
  const Image2D u(2, 2, {1, 2, 3, 4}), ref(2, 2, {0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(tv_objective(u, ref, 0.0), 0.5 * 30.0);
  EXPECT_THROW(tv_objective(u, Image2D(3, 2), 1.0), ShapeError);
}

TEST(TvObjective, IsotropicGradient) {
  // one pixel with dx = 3, dy = 4 contributes 5
  const Image2D u(2, 2, {0, 3, 4, 4});
  const double expected = 5.0 + 1.0 /* (1,0): dy=1 */ + 0.0 /* (0,1): dx=0 */;
  EXPECT_DOUBLE_EQ(total_variation(u), expected);
}

TEST(Divergence, IsNegativeAdjointOfGradient) {
  Rng rng(8);
  const std::size_t w = 7, h = 5, n = w * h;
  std::vector<double> px(n), py(n), div(n);
  for (auto& v : px) v = rng.uniform() - 0.5;
  for (auto& v : py) v = rng.uniform() - 0.5;
  // the dual field lives on forward-difference edges only
  for (std::size_t y = 0; y < h; ++y) px[y * w + w - 1] = 0.0;
  for (std::size_t x = 0; x < w; ++x) py[(h - 1) * w + x] = 0.0;
  const auto u = tu::random_image(w, h, rng);
  detail::divergence(w, h, px, py, div);
  double grad_dot_p = 0.0;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      if (x + 1 < w) grad_dot_p += (u[i + 1] - u[i]) * px[i];
      if (y + 1 < h) grad_dot_p += (u[i + w] - u[i]) * py[i];
    }
  EXPECT_NEAR(grad_dot_p, -tu::dot(u.data(), div), 1e-12);
}

TEST(TvChambolle, ZeroWeightReturnsInput) {
  Rng rng(1);
  const auto img = tu::random_image(9, 9, rng);
  EXPECT_EQ(tv_chambolle(img, 0.0, 10).values(), img.values());
}

TEST(TvChambolle, ConstantImageUnchanged) {
  const Image2D img(12, 7, 0.42);
  const auto out = tv_chambolle(img, 0.3, 30);
  EXPECT_LT(tu::max_abs_diff(out.data(), img.data()), 1e-15);
}

TEST(TvChambolle, NoisyStepObjectiveDecreases) {
  const auto f = noisy_step(32, 0.1, 5);
  const auto u = tv_chambolle(f, 0.1, 50);
  EXPECT_LT(tv_objective(u, f, 0.1), tv_objective(f, f, 0.1));
}

TEST(TvChambolle, MeanPreserved) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto f = noisy_step(24, 0.2, s);
    EXPECT_NEAR(mean(tv_chambolle(f, 0.15, 40)), mean(f), 1e-12);
  }
}

TEST(TvChambolle, ApproachesConvergedObjective) {
  const auto f = noisy_step(24, 0.1, 3);
  const double converged = tv_objective(tv_chambolle(f, 0.1, 3000), f, 0.1);
  const double at100 = tv_objective(tv_chambolle(f, 0.1, 100), f, 0.1);
  const double at10 = tv_objective(tv_chambolle(f, 0.1, 10), f, 0.1);
  EXPECT_LE(converged, at100 + 1e-9);
  EXPECT_LE(at100, at10 + 1e-9);
  EXPECT_LT((at100 - converged) / converged, 0.02);
}

TEST(TvChambolle, RandomImagesNeverIncreaseObjective) {
  Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    const std::size_t w = 2 + rng.below(20), h = 2 + rng.below(20);
    const auto f = tu::random_image(w, h, rng);
    const double weight = 0.01 + 0.5 * rng.uniform();
    const auto u = tv_chambolle(f, weight, 1 + static_cast<int>(rng.below(40)));
    EXPECT_LE(tv_objective(u, f, weight), tv_objective(f, f, weight) + 1e-12);
  }
}

TEST(TvChambolle, WorkspaceReuseMatchesFresh) {
  TvWorkspace ws;
  const auto a = noisy_step(16, 0.1, 1), b = noisy_step(20, 0.1, 2);
  tv_chambolle(a, 0.1, 10, ws);
  EXPECT_EQ(tv_chambolle(b, 0.1, 10, ws).values(), tv_chambolle(b, 0.1, 10).values());
}

TEST(TvChambolle, RejectsBadInput) {
  Image2D img(4, 4, 0.0);
  img(1, 1) = NAN;
  EXPECT_THROW(tv_chambolle(img, 0.1, 5), DataError);
  EXPECT_THROW(tv_chambolle(Image2D(4, 4), -1.0, 5), ParameterError);
  EXPECT_THROW(tv_chambolle(Image2D(4, 4), 0.1, 0), ParameterError);
}
