#pragma once

// Value types shared by every stage of the reconstruction: 2-D planes,
// band-major spectral cubes, rectangular regions and solver parameters.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace specrec {

// Error taxonomy. Everything derives from std::runtime_error except index
// errors, which use std::out_of_range like the standard containers do.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct ParameterError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};

/// Single real-valued plane, row-major, `width` samples per row.
class Image2D {
 public:
  Image2D() = default;
  Image2D(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), data_(width * height, fill) {}
  Image2D(std::size_t width, std::size_t height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_)
      throw ShapeError("Image2D: data length " + std::to_string(data_.size()) +
                       " != " + std::to_string(width_ * height_));
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
  double operator()(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool same_shape(const Image2D& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const Image2D&, const Image2D&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

/// Spectral data cube stored as `bands` contiguous planes of width x height.
class SpectralCube {
 public:
  SpectralCube() = default;
  SpectralCube(std::size_t width, std::size_t height, std::size_t bands, double fill = 0.0)
      : width_(width), height_(height), bands_(bands), data_(width * height * bands, fill) {}
  SpectralCube(std::size_t width, std::size_t height, std::size_t bands,
               std::vector<double> data)
      : width_(width), height_(height), bands_(bands), data_(std::move(data)) {
    if (data_.size() != width_ * height_ * bands_)
      throw ShapeError("SpectralCube: data length " + std::to_string(data_.size()) +
                       " != " + std::to_string(width_ * height_ * bands_));
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t plane_size() const noexcept { return width_ * height_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t x, std::size_t y, std::size_t l) {
    return data_[l * plane_size() + y * width_ + x];
  }
  double operator()(std::size_t x, std::size_t y, std::size_t l) const {
    return data_[l * plane_size() + y * width_ + x];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  std::span<double> plane(std::size_t l) {
    check_band(l);
    return std::span<double>(data_).subspan(l * plane_size(), plane_size());
  }
  std::span<const double> plane(std::size_t l) const {
    check_band(l);
    return std::span<const double>(data_).subspan(l * plane_size(), plane_size());
  }

  std::vector<double> band_wavelengths;  // nm, optional

  bool same_shape(const SpectralCube& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_ && bands_ == o.bands_;
  }
  bool same_spatial(const Image2D& img) const noexcept {
    return width_ == img.width() && height_ == img.height();
  }

  friend bool operator==(const SpectralCube& a, const SpectralCube& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  void check_band(std::size_t l) const {
    if (l >= bands_)
      throw std::out_of_range("band index " + std::to_string(l) + " out of range [0, " +
                              std::to_string(bands_) + ")");
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t bands_ = 0;
  std::vector<double> data_;
};

struct Region {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  bool empty() const noexcept { return w == 0 || h == 0; }
  bool fits(std::size_t width, std::size_t height) const noexcept {
    return x0 + w <= width && y0 + h <= height;
  }
};

struct SolverParams {
  double beta = 0.1;            // TV weight
  double rho = 1.0;             // ADMM penalty
  double kappa = 0.05;          // L2,1 shrinkage threshold
  int outer_iters = 30;
  int inner_iters = 10;
  int tv_iters = 20;
  double lowpass_weight = 5.0;
  double gram_epsilon = 1e-6;
  double noise_sigma = 0.0;

  void validate() const {
    if (!(beta >= 0) || !(rho >= 0) || !(kappa >= 0) || !(lowpass_weight >= 0) ||
        !(noise_sigma >= 0))
      throw ParameterError("SolverParams: weights must be >= 0");
    if (outer_iters < 1 || inner_iters < 1 || tv_iters < 1)
      throw ParameterError("SolverParams: iteration counts must be >= 1");
    if (!(gram_epsilon > 0)) throw ParameterError("SolverParams: gram_epsilon must be > 0");
  }
};

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double s) { return std::isfinite(s); });
}

/// Scales the cube by 1/max so the peak sample becomes exactly 1.
inline SpectralCube normalize_cube(const SpectralCube& cube) {
  const auto d = cube.data();
  if (d.empty()) throw DataError("degenerate cube: no samples");
  if (!all_finite(d)) throw DataError("normalize_cube: non-finite sample");
  const double peak = *std::max_element(d.begin(), d.end());
  if (!(peak > 0)) throw DataError("degenerate cube: maximum sample is not positive");
  SpectralCube out = cube;
  if (peak == 1.0) return out;
  for (double& s : out.data()) s /= peak;
  return out;
}

inline Image2D extract_band(const SpectralCube& cube, std::size_t l) {
  const auto p = cube.plane(l);
  return Image2D(cube.width(), cube.height(), std::vector<double>(p.begin(), p.end()));
}

inline void replace_band(SpectralCube& cube, std::size_t l, const Image2D& band) {
  if (!cube.same_spatial(band)) throw ShapeError("replace_band: plane size mismatch");
  const auto src = band.data();
  std::copy(src.begin(), src.end(), cube.plane(l).begin());
}

inline SpectralCube stack_bands(const std::vector<Image2D>& planes) {
  if (planes.empty()) throw ShapeError("stack_bands: no planes");
  SpectralCube cube(planes.front().width(), planes.front().height(), planes.size());
  for (std::size_t l = 0; l < planes.size(); ++l) replace_band(cube, l, planes[l]);
  return cube;
}

/// Sub-cube covering `region`, all bands.
inline SpectralCube crop(const SpectralCube& cube, const Region& region) {
  if (region.empty()) throw ShapeError("crop: empty region");
  if (!region.fits(cube.width(), cube.height())) throw ShapeError("crop: region outside cube");
  SpectralCube out(region.w, region.h, cube.bands());
  out.band_wavelengths = cube.band_wavelengths;
  for (std::size_t l = 0; l < cube.bands(); ++l)
    for (std::size_t y = 0; y < region.h; ++y)
      for (std::size_t x = 0; x < region.w; ++x)
        out(x, y, l) = cube(region.x0 + x, region.y0 + y, l);
  return out;
}

/// Per-band mean over `region`, scaled so the largest entry is 1.
inline std::vector<double> mean_spectrum(const SpectralCube& cube, const Region& region) {
  if (region.empty()) throw ShapeError("mean_spectrum: empty region");
  if (!region.fits(cube.width(), cube.height()))
    throw ShapeError("mean_spectrum: region outside cube");
  std::vector<double> s(cube.bands(), 0.0);
  const double count = static_cast<double>(region.w * region.h);
  for (std::size_t l = 0; l < cube.bands(); ++l) {
    double acc = 0.0;
    for (std::size_t y = region.y0; y < region.y0 + region.h; ++y)
      for (std::size_t x = region.x0; x < region.x0 + region.w; ++x) acc += cube(x, y, l);
    s[l] = acc / count;
  }
  const double peak = *std::max_element(s.begin(), s.end());
  if (peak > 0)
    for (double& v : s) v /= peak;
  return s;
}

}  // namespace specrec
