#pragma once

// Snapshot observation operator: every band is weighted by its own coding
// mask and the weighted bands are summed onto one detector plane.
//
//   y(p) = sum_l h_l(p) * I_l(p)
//
// Because each h_l acts elementwise, H H^T is diagonal with entries
// sum_l h_l(p)^2, which is what makes the GAP projection closed form.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "specrec/core.hpp"
#include "specrec/random.hpp"

namespace specrec {

/// Coded detector image. Same layout as Image2D; distinct type so a
/// measurement can't be passed where a mask is expected.
class Measurement : public Image2D {
 public:
  Measurement() = default;
  Measurement(std::size_t width, std::size_t height, double fill = 0.0)
      : Image2D(width, height, fill) {}
  explicit Measurement(Image2D img) : Image2D(std::move(img)) {}
};

/// Per-band coding masks h_0..h_{L-1}, stored like a cube (band-major).
class SystemMasks {
 public:
  SystemMasks() = default;
  explicit SystemMasks(SpectralCube planes) : planes_(std::move(planes)) {
    for (double w : planes_.data())
      if (!std::isfinite(w) || w < 0.0 || w > 1.0)
        throw DataError("SystemMasks: mask weights must be finite and in [0,1]");
  }

  std::size_t width() const noexcept { return planes_.width(); }
  std::size_t height() const noexcept { return planes_.height(); }
  std::size_t bands() const noexcept { return planes_.bands(); }
  std::span<const double> mask(std::size_t l) const { return planes_.plane(l); }
  const SpectralCube& planes() const noexcept { return planes_; }

 private:
  SpectralCube planes_;
};

namespace detail {

inline void require_spatial(const SystemMasks& sys, std::size_t w, std::size_t h,
                            const char* what) {
  if (sys.width() != w || sys.height() != h)
    throw ShapeError(std::string(what) + ": spatial size " + std::to_string(w) + "x" +
                     std::to_string(h) + " does not match system " +
                     std::to_string(sys.width()) + "x" + std::to_string(sys.height()));
}

}  // namespace detail

/// Binary random mask with exactly round(density * width * height) ones.
inline Image2D generate_mask(std::size_t width, std::size_t height, std::uint64_t seed,
                             double density) {
  if (!(density > 0.0 && density < 1.0))
    throw ParameterError("generate_mask: density must lie in (0,1), got " +
                         std::to_string(density));
  const std::size_t n = width * height;
  const auto ones = static_cast<std::size_t>(std::llround(density * static_cast<double>(n)));
  std::vector<double> v(n, 0.0);
  std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(ones), 1.0);
  // Fisher-Yates with the pinned bounded draw.
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  return Image2D(width, height, std::move(v));
}

/// Band l uses the base mask circularly shifted right by l * shear_step columns.
inline SystemMasks build_system(const Image2D& mask, std::size_t bands, long shear_step) {
  if (bands < 1) throw ParameterError("build_system: bands must be >= 1");
  const auto w = static_cast<long>(mask.width());
  if (std::labs(shear_step) >= w)
    throw ParameterError("build_system: |shear_step| must be < width (" +
                         std::to_string(w) + ")");
  SpectralCube planes(mask.width(), mask.height(), bands);
  for (std::size_t l = 0; l < bands; ++l) {
    const long shift = ((static_cast<long>(l) * shear_step) % w + w) % w;
    for (std::size_t y = 0; y < mask.height(); ++y)
      for (long x = 0; x < w; ++x)
        planes(static_cast<std::size_t>((x + shift) % w), y, l) =
            mask(static_cast<std::size_t>(x), y);
  }
  return SystemMasks(std::move(planes));
}

inline Measurement forward(const SystemMasks& sys, const SpectralCube& cube) {
  if (cube.bands() != sys.bands()) throw ShapeError("forward: band count mismatch");
  detail::require_spatial(sys, cube.width(), cube.height(), "forward");
  Measurement y(cube.width(), cube.height());
  auto out = y.data();
  for (std::size_t l = 0; l < sys.bands(); ++l) {
    const auto h = sys.mask(l);
    const auto c = cube.plane(l);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += h[p] * c[p];
  }
  return y;
}

inline SpectralCube adjoint(const SystemMasks& sys, const Image2D& y) {
  detail::require_spatial(sys, y.width(), y.height(), "adjoint");
  SpectralCube cube(y.width(), y.height(), sys.bands());
  const auto in = y.data();
  for (std::size_t l = 0; l < sys.bands(); ++l) {
    const auto h = sys.mask(l);
    auto c = cube.plane(l);
    for (std::size_t p = 0; p < in.size(); ++p) c[p] = h[p] * in[p];
  }
  return cube;
}

/// Diagonal of H H^T: sum over bands of the squared mask weights.
inline Image2D gram_diagonal(const SystemMasks& sys) {
  Image2D g(sys.width(), sys.height());
  auto out = g.data();
  for (std::size_t l = 0; l < sys.bands(); ++l) {
    const auto h = sys.mask(l);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += h[p] * h[p];
  }
  return g;
}

inline Measurement add_noise(const Measurement& y, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ParameterError("add_noise: sigma must be >= 0");
  Measurement out = y;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (double& v : out.data()) v += sigma * rng.normal();
  return out;
}

}  // namespace specrec
