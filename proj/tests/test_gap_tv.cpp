#include <gtest/gtest.h>

#include <cmath>

#include "specrec/fixtures.hpp"
#include "specrec/gap_tv.hpp"
#include "test_util.hpp"

using namespace specrec;

namespace {

double max_abs(std::span<const double> v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST(GapProjection, IdentitySystemFromZero) {
  Rng rng(1);
  const Measurement y(tu::random_image(6, 5, rng));
  const auto sys = build_system(Image2D(6, 5, 1.0), 1, 0);
  const auto v = gap_projection_step(sys, SpectralCube(6, 5, 1), y, 1e-6);
  EXPECT_LT(tu::max_abs_diff(v.data(), y.data()), 1e-15);
}

TEST(GapProjection, ConsistentInputUnchangedBitwise) {
  Rng rng(2);
  const auto sys = build_system(generate_mask(8, 8, 3, 0.5), 3, 1);
  const auto cube = tu::random_cube(8, 8, 3, rng);
  const auto y = forward(sys, cube);
  EXPECT_EQ(gap_projection_step(sys, cube, y, 1e-6).values(), cube.values());
}

TEST(GapProjection, HandComputation) {
  const SystemMasks sys(SpectralCube(1, 1, 2, {1.0, 1.0}));
  const auto v = gap_projection_step(sys, SpectralCube(1, 1, 2), Measurement(1, 1, 4.0), 1e-6);
  EXPECT_DOUBLE_EQ(v(0, 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(v(0, 0, 1), 2.0);
  EXPECT_DOUBLE_EQ(forward(sys, v)[0], 4.0);
}

TEST(GapProjection, ExactOnObservedPixelsAndIdleElsewhere) {
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    // graded masks with some zero-coverage pixels
    SpectralCube planes = tu::random_cube(12, 9, 4, rng);
    for (std::size_t l = 0; l < 4; ++l)
      for (std::size_t x = 0; x < 12; ++x) planes(x, 0, l) = 0.0;
    const SystemMasks sys(planes);
    const auto cube = tu::random_cube(12, 9, 4, rng);
    const Measurement y(tu::random_image(12, 9, rng, 0.0, 3.0));
    const auto v = gap_projection_step(sys, cube, y, 1e-6);
    const auto hv = forward(sys, v);
    const auto g = gram_diagonal(sys);
    for (std::size_t p = 0; p < y.size(); ++p) {
      if (g[p] >= 1e-6) {
        EXPECT_LE(std::abs(hv[p] - y[p]), 1e-10 * max_abs(y.data()));
      }
    }
    for (std::size_t l = 0; l < 4; ++l)
      for (std::size_t x = 0; x < 12; ++x) EXPECT_EQ(v(x, 0, l), cube(x, 0, l));
    EXPECT_TRUE(all_finite(v.data()));
  }
}

TEST(GapProjection, IsIdempotentAndMinimalNorm) {
  Rng rng(4);
  const SystemMasks sys(tu::random_cube(7, 7, 3, rng, 0.1, 1.0));
  const auto cube = tu::random_cube(7, 7, 3, rng);
  const Measurement y(tu::random_image(7, 7, rng));
  const auto v = gap_projection_step(sys, cube, y, 1e-6);
  const auto vv = gap_projection_step(sys, v, y, 1e-6);
  EXPECT_LT(tu::max_abs_diff(v.data(), vv.data()), 1e-12);
  // v - cube is in range(H^T): per pixel it is parallel to (h_0..h_{L-1}),
  // so it is orthogonal to any null-space direction of H.
  for (std::size_t p = 0; p < 49; ++p) {
    const double h0 = sys.mask(0)[p], h1 = sys.mask(1)[p];
    const double null_dir0 = h1, null_dir1 = -h0;  // H (n0, n1, 0) = 0
    const double d0 = v.plane(0)[p] - cube.plane(0)[p], d1 = v.plane(1)[p] - cube.plane(1)[p];
    EXPECT_NEAR(d0 * null_dir0 + d1 * null_dir1, 0.0, 1e-12);
  }
}

TEST(GapProjection, ZeroMasksLeaveCubeAndStayFinite) {
  const SystemMasks sys(SpectralCube(4, 4, 2));
  Rng rng(3);
  const auto cube = tu::random_cube(4, 4, 2, rng);
  const auto v = gap_projection_step(sys, cube, Measurement(4, 4, 1.0), 1e-6);
  EXPECT_EQ(v.values(), cube.values());
}

TEST(GapInitialEstimate, IsConsistentWithMeasurement) {
  const auto sys = build_system(generate_mask(16, 16, 5, 0.5), 4, 1);
  Rng rng(6);
  const auto y = forward(sys, tu::random_cube(16, 16, 4, rng));
  const auto init = gap_initial_estimate(sys, y, 1e-6);
  const auto g = gram_diagonal(sys);
  const auto hy = forward(sys, init);
  for (std::size_t p = 0; p < y.size(); ++p)
    if (g[p] >= 1e-6) {
      EXPECT_NEAR(hy[p], y[p], 1e-12);
    }
}

TEST(GapTvSolve, TrivialSystemRecoversConstantCube) {
  const SpectralCube truth(10, 10, 1, 0.37);
  const auto sys = build_system(Image2D(10, 10, 1.0), 1, 0);
  SolverParams p;
  p.outer_iters = 2;
  const auto [cube, trace] = gap_tv_solve(sys, forward(sys, truth), p);
  EXPECT_LT(tu::max_abs_diff(cube.data(), truth.data()), 1e-6);
  EXPECT_EQ(trace.records.size(), 2u);
}

TEST(GapTvSolve, ProjectedFidelityIsZeroEveryRound) {
  const auto truth = make_synthetic_cube({32, 32, 4, 3});
  const auto sys = build_system(generate_mask(32, 32, 7, 0.5), 4, 1);
  const auto y = forward(sys, truth);
  SolverParams p;
  p.outer_iters = 8;
  const auto [cube, trace] = gap_tv_solve(sys, y, p, std::nullopt, &truth);
  double ynorm = tu::norm(y.data());
  for (const auto& r : trace.records) {
    EXPECT_LE(r.projected_fidelity, 1e-10 * ynorm);
    EXPECT_TRUE(r.psnr.has_value());
    EXPECT_TRUE(std::isfinite(r.fidelity));
  }
  EXPECT_TRUE(all_finite(cube.data()));
}

TEST(GapTvSolve, BeatsAdjointBaselineByFiveDb) {
  const auto truth = make_synthetic_cube({});
  const auto sys = build_system(generate_mask(64, 64, 7, 0.5), 8, 1);
  const auto y = forward(sys, truth);
  SolverParams p;
  const auto [cube, trace] = gap_tv_solve(sys, y, p);
  const double base = psnr(truth, gap_initial_estimate(sys, y, p.gram_epsilon));
  EXPECT_GE(psnr(truth, cube), base + 5.0);
}

TEST(GapTvSolve, InitIsHonouredAndChecked) {
  const auto sys = build_system(generate_mask(8, 8, 1, 0.5), 2, 1);
  const Measurement y(8, 8, 0.5);
  SolverParams p;
  p.outer_iters = 1;
  EXPECT_THROW(gap_tv_solve(sys, y, p, SpectralCube(8, 8, 3)), ShapeError);
  EXPECT_THROW(gap_tv_solve(sys, Measurement(7, 8), p), ShapeError);
  const auto a = gap_tv_solve(sys, y, p, gap_initial_estimate(sys, y, p.gram_epsilon)).first;
  const auto b = gap_tv_solve(sys, y, p).first;
  EXPECT_EQ(a.values(), b.values());
}
