#pragma once

// Generalized alternating projection with a TV prior.
//
// Each round projects the current estimate onto {I : H I = y} along the
// range of H^T, then denoises every band with tv_chambolle:
//
//   v = I + H^T (H H^T)^{-1} (y - H I)
//   I = TV(v)
//
// Pixels whose Gram diagonal falls below gram_epsilon carry no usable
// measurement and receive no correction.

#include <cmath>
#include <optional>
#include <vector>

#include "specrec/core.hpp"
#include "specrec/forward_model.hpp"
#include "specrec/metrics.hpp"
#include "specrec/tv_denoise.hpp"

namespace specrec {

struct GapRecord {
  int iteration = 0;
  double projected_fidelity = 0.0;  // ||y - H v|| over safe pixels, right after projection
  double fidelity = 0.0;            // ||y - H I|| after the TV step
  double tv = 0.0;                  // sum of per-band TV of I
  std::optional<double> psnr;       // vs ground truth, when supplied
};

struct GapTrace {
  std::vector<GapRecord> records;
};

namespace detail {

/// 1/gram where gram >= eps, else 0.
inline std::vector<double> safe_inverse_gram(const SystemMasks& sys, double eps) {
  const Image2D g = gram_diagonal(sys);
  std::vector<double> inv(g.size(), 0.0);
  for (std::size_t p = 0; p < g.size(); ++p)
    if (g[p] >= eps) inv[p] = 1.0 / g[p];
  return inv;
}

inline double residual_norm(const SystemMasks& sys, const SpectralCube& cube,
                            const Measurement& y) {
  const Measurement hy = forward(sys, cube);
  double acc = 0.0;
  for (std::size_t p = 0; p < y.size(); ++p) {
    const double r = y[p] - hy[p];
    acc += r * r;
  }
  return std::sqrt(acc);
}

inline double safe_residual_norm(const SystemMasks& sys, const SpectralCube& cube,
                                 const Measurement& y, const std::vector<double>& inv_gram) {
  const Measurement hy = forward(sys, cube);
  double acc = 0.0;
  for (std::size_t p = 0; p < y.size(); ++p) {
    if (inv_gram[p] == 0.0) continue;
    const double r = y[p] - hy[p];
    acc += r * r;
  }
  return std::sqrt(acc);
}

inline void check_system(const SystemMasks& sys, const Measurement& y) {
  detail::require_spatial(sys, y.width(), y.height(), "measurement");
}

inline SpectralCube project(const SystemMasks& sys, const SpectralCube& cube,
                            const Measurement& y, const std::vector<double>& inv_gram) {
  if (cube.bands() != sys.bands()) throw ShapeError("gap projection: band count mismatch");
  const Measurement hy = forward(sys, cube);
  Measurement r(y.width(), y.height());
  for (std::size_t p = 0; p < y.size(); ++p) r[p] = (y[p] - hy[p]) * inv_gram[p];
  SpectralCube v = cube;
  for (std::size_t l = 0; l < sys.bands(); ++l) {
    const auto h = sys.mask(l);
    auto out = v.plane(l);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += h[p] * r[p];
  }
  return v;
}

inline SpectralCube tv_per_band(const SpectralCube& cube, double weight, int iters) {
  SpectralCube out = cube;
  TvWorkspace ws;
  for (std::size_t l = 0; l < cube.bands(); ++l)
    replace_band(out, l, tv_chambolle(extract_band(cube, l), weight, iters, ws));
  return out;
}

inline double tv_sum(const SpectralCube& cube) {
  double acc = 0.0;
  for (std::size_t l = 0; l < cube.bands(); ++l) acc += total_variation(extract_band(cube, l));
  return acc;
}

}  // namespace detail

/// One measurement-consistency projection. At pixels with gram >= eps the
/// result satisfies forward(v) == y up to rounding.
inline SpectralCube gap_projection_step(const SystemMasks& sys, const SpectralCube& cube,
                                        const Measurement& y, double eps) {
  if (!(eps > 0.0)) throw ParameterError("gap_projection_step: eps must be > 0");
  detail::check_system(sys, y);
  detail::require_spatial(sys, cube.width(), cube.height(), "cube");
  return detail::project(sys, cube, y, detail::safe_inverse_gram(sys, eps));
}

/// H^T y scaled by the inverse Gram diagonal, the usual GAP starting point.
inline SpectralCube gap_initial_estimate(const SystemMasks& sys, const Measurement& y,
                                         double eps) {
  detail::check_system(sys, y);
  const auto inv = detail::safe_inverse_gram(sys, eps);
  Measurement scaled(y.width(), y.height());
  for (std::size_t p = 0; p < y.size(); ++p) scaled[p] = y[p] * inv[p];
  return adjoint(sys, scaled);
}

inline std::pair<SpectralCube, GapTrace> gap_tv_solve(
    const SystemMasks& sys, const Measurement& y, const SolverParams& params,
    const std::optional<SpectralCube>& init = std::nullopt,
    const SpectralCube* ground_truth = nullptr) {
  params.validate();
  detail::check_system(sys, y);
  const auto inv_gram = detail::safe_inverse_gram(sys, params.gram_epsilon);
  SpectralCube cube = init ? *init : gap_initial_estimate(sys, y, params.gram_epsilon);
  detail::require_spatial(sys, cube.width(), cube.height(), "init");
  if (cube.bands() != sys.bands()) throw ShapeError("gap_tv_solve: init band count mismatch");
  if (ground_truth && !ground_truth->same_shape(cube))
    throw ShapeError("gap_tv_solve: ground truth shape mismatch");

  GapTrace trace;
  for (int t = 1; t <= params.outer_iters; ++t) {
    const SpectralCube v = detail::project(sys, cube, y, inv_gram);
    GapRecord rec;
    rec.iteration = t;
    rec.projected_fidelity = detail::safe_residual_norm(sys, v, y, inv_gram);
    cube = detail::tv_per_band(v, params.beta, params.tv_iters);
    rec.fidelity = detail::residual_norm(sys, cube, y);
    rec.tv = detail::tv_sum(cube);
    if (ground_truth) rec.psnr = psnr(*ground_truth, cube);
    trace.records.push_back(rec);
  }
  return {std::move(cube), std::move(trace)};
}

}  // namespace specrec
