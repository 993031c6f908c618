#pragma once

// Isotropic total-variation denoising by Chambolle's dual projection:
//
//   u = argmin 1/2 ||u - f||^2 + weight * TV(u)
//
// Gradients are forward differences with a replicated (Neumann) boundary,
// so the last column/row contributes no horizontal/vertical jump. The
// divergence is the negative adjoint of that gradient.

#include <cmath>
#include <string>
#include <vector>

#include "specrec/core.hpp"

namespace specrec {

/// Dual field reused across calls on same-sized images.
struct TvWorkspace {
  std::vector<double> px;
  std::vector<double> py;
  std::vector<double> div;
  std::vector<double> g;
  double step = 0.248;

  void resize(std::size_t n) {
    px.assign(n, 0.0);
    py.assign(n, 0.0);
    div.assign(n, 0.0);
    g.assign(n, 0.0);
  }
};

namespace detail {

inline void divergence(std::size_t w, std::size_t h, const std::vector<double>& px,
                       const std::vector<double>& py, std::vector<double>& div) {
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      double d = 0.0;
      if (x + 1 < w) d += px[i];
      if (x > 0) d -= px[i - 1];
      if (y + 1 < h) d += py[i];
      if (y > 0) d -= py[i - w];
      div[i] = d;
    }
  }
}

}  // namespace detail

/// 1/2 ||u - ref||^2 + weight * sum_p |grad u(p)|.
inline double tv_objective(const Image2D& u, const Image2D& ref, double weight) {
  if (!u.same_shape(ref)) throw ShapeError("tv_objective: dimension mismatch");
  const std::size_t w = u.width(), h = u.height();
  double fid = 0.0, tv = 0.0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double r = u(x, y) - ref(x, y);
      fid += r * r;
      const double gx = x + 1 < w ? u(x + 1, y) - u(x, y) : 0.0;
      const double gy = y + 1 < h ? u(x, y + 1) - u(x, y) : 0.0;
      tv += std::sqrt(gx * gx + gy * gy);
    }
  }
  return 0.5 * fid + weight * tv;
}

inline double total_variation(const Image2D& u) { return tv_objective(u, u, 1.0); }

inline Image2D tv_chambolle(const Image2D& image, double weight, int iters, TvWorkspace& ws) {
  if (!(weight >= 0.0)) throw ParameterError("tv_chambolle: weight must be >= 0");
  if (iters < 1) throw ParameterError("tv_chambolle: iters must be >= 1");
  if (!all_finite(image.data())) throw DataError("tv_chambolle: non-finite input");
  if (weight == 0.0) return image;

  const std::size_t w = image.width(), h = image.height(), n = image.size();
  ws.resize(n);
  const auto f = image.data();
  const double inv_w = 1.0 / weight;

  for (int it = 0; it < iters; ++it) {
    detail::divergence(w, h, ws.px, ws.py, ws.div);
    for (std::size_t i = 0; i < n; ++i) ws.g[i] = ws.div[i] - f[i] * inv_w;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t i = y * w + x;
        const double gx = x + 1 < w ? ws.g[i + 1] - ws.g[i] : 0.0;
        const double gy = y + 1 < h ? ws.g[i + w] - ws.g[i] : 0.0;
        const double denom = 1.0 + ws.step * std::sqrt(gx * gx + gy * gy);
        ws.px[i] = (ws.px[i] + ws.step * gx) / denom;
        ws.py[i] = (ws.py[i] + ws.step * gy) / denom;
      }
    }
  }

  detail::divergence(w, h, ws.px, ws.py, ws.div);
  Image2D out(w, h);
  auto u = out.data();
  for (std::size_t i = 0; i < n; ++i) u[i] = f[i] - weight * ws.div[i];
  return out;
}

inline Image2D tv_chambolle(const Image2D& image, double weight, int iters) {
  TvWorkspace ws;
  return tv_chambolle(image, weight, iters, ws);
}

}  // namespace specrec
