#pragma once

// Synthetic scenes for tests, demos and the compare subcommand.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "specrec/core.hpp"
#include "specrec/random.hpp"

namespace specrec {

struct SyntheticSpec {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t bands = 8;
  std::uint64_t seed = 1;
  std::size_t patches = 5;
  double texture_amplitude = 0.15;
  double texture_period = 6.0;  // pixels
};

/// Piecewise-constant patches over a background, a sinusoidal texture
/// patch, and a smooth spectral signature for every component. The result
/// is max-normalized.
inline SpectralCube make_synthetic_cube(const SyntheticSpec& s) {
  if (s.width < 8 || s.height < 8 || s.bands < 1)
    throw ParameterError("make_synthetic_cube: scene must be at least 8x8x1");
  Rng rng(s.seed);
  const double lmax = s.bands > 1 ? static_cast<double>(s.bands - 1) : 1.0;

  auto smooth_spectrum = [&](double level, double spread) {
    const double centre = rng.uniform();
    const double width = 0.25 + 0.35 * rng.uniform();
    std::vector<double> sp(s.bands);
    for (std::size_t l = 0; l < s.bands; ++l) {
      const double t = static_cast<double>(l) / lmax - centre;
      sp[l] = level + spread * std::exp(-t * t / (2.0 * width * width));
    }
    return sp;
  };

  SpectralCube cube(s.width, s.height, s.bands);
  const auto background = smooth_spectrum(0.15, 0.15);
  for (std::size_t l = 0; l < s.bands; ++l)
    for (double& v : cube.plane(l)) v = background[l];

  for (std::size_t k = 0; k < s.patches; ++k) {
    const auto w = static_cast<std::size_t>(s.width * (0.15 + 0.3 * rng.uniform()));
    const auto h = static_cast<std::size_t>(s.height * (0.15 + 0.3 * rng.uniform()));
    const auto x0 = static_cast<std::size_t>((s.width - w) * rng.uniform());
    const auto y0 = static_cast<std::size_t>((s.height - h) * rng.uniform());
    const auto sp = smooth_spectrum(0.1 + 0.3 * rng.uniform(), 0.2 + 0.4 * rng.uniform());
    for (std::size_t l = 0; l < s.bands; ++l)
      for (std::size_t y = y0; y < y0 + h; ++y)
        for (std::size_t x = x0; x < x0 + w; ++x) cube(x, y, l) = sp[l];
  }

  // Oriented sinusoidal texture inside a disc.
  const double cx = s.width * (0.3 + 0.4 * rng.uniform());
  const double cy = s.height * (0.3 + 0.4 * rng.uniform());
  const double radius = 0.3 * static_cast<double>(std::min(s.width, s.height));
  const double angle = std::numbers::pi * rng.uniform();
  const double fx = std::cos(angle) / s.texture_period, fy = std::sin(angle) / s.texture_period;
  const auto tex_sp = smooth_spectrum(0.5, 0.5);
  for (std::size_t y = 0; y < s.height; ++y)
    for (std::size_t x = 0; x < s.width; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy > radius * radius) continue;
      const double t = s.texture_amplitude * std::sin(2.0 * std::numbers::pi * (fx * x + fy * y));
      for (std::size_t l = 0; l < s.bands; ++l) cube(x, y, l) += t * tex_sp[l];
    }

  for (double& v : cube.data()) v = std::max(v, 0.0);
  return normalize_cube(cube);
}

}  // namespace specrec
