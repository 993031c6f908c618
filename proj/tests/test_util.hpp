#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "specrec/core.hpp"
#include "specrec/random.hpp"

namespace specrec::tu {

inline Image2D random_image(std::size_t w, std::size_t h, Rng& rng, double lo = 0.0,
                            double hi = 1.0) {
  Image2D img(w, h);
  for (auto& v : img.data()) v = lo + (hi - lo) * rng.uniform();
  return img;
}

inline SpectralCube random_cube(std::size_t w, std::size_t h, std::size_t l, Rng& rng,
                                double lo = 0.0, double hi = 1.0) {
  SpectralCube c(w, h, l);
  for (auto& v : c.data()) v = lo + (hi - lo) * rng.uniform();
  return c;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double gaussian_sigma_add(SpectralCube& c, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& v : c.data()) v += sigma * rng.normal();
  return sigma;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("specrec_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path data_dir() { return SPECREC_DATA_DIR; }

}  // namespace specrec::tu
