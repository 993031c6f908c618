#pragma once

// Thin RAII wrapper over FFTW for real 2-D transforms.
//
// Convention: the forward transform is unnormalized,
//   X(kx, ky) = sum_{x,y} x(x, y) exp(-2 pi i (kx x / W + ky y / H)),
// and inverse() divides by W*H so inverse(forward(x)) == x. Only the
// non-redundant half spectrum is stored: H rows of W/2 + 1 columns.

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstring>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "specrec/core.hpp"

namespace specrec {

using Complex = std::complex<double>;

namespace detail {
// The FFTW planner is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

class Fft2d {
 public:
  Fft2d(std::size_t width, std::size_t height)
      : width_(width), height_(height), half_width_(width / 2 + 1) {
    if (width == 0 || height == 0) throw ShapeError("Fft2d: empty transform");
    real_.reset(fftw_alloc_real(width_ * height_));
    spec_.reset(fftw_alloc_complex(spectrum_size()));
    const int h = static_cast<int>(height_), w = static_cast<int>(width_);
    std::lock_guard lock(detail::fftw_planner_mutex());
    fwd_ = fftw_plan_dft_r2c_2d(h, w, real_.get(), spec_.get(), FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_2d(h, w, spec_.get(), real_.get(), FFTW_ESTIMATE);
  }
  ~Fft2d() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (fwd_) fftw_destroy_plan(fwd_);
    if (inv_) fftw_destroy_plan(inv_);
  }
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t half_width() const noexcept { return half_width_; }
  std::size_t spectrum_size() const noexcept { return height_ * half_width_; }

  void forward(std::span<const double> in, std::span<Complex> out) {
    std::copy(in.begin(), in.end(), real_.get());
    fftw_execute(fwd_);
    std::memcpy(static_cast<void*>(out.data()), spec_.get(), spectrum_size() * sizeof(Complex));
  }

  std::vector<Complex> forward(std::span<const double> in) {
    std::vector<Complex> out(spectrum_size());
    forward(in, out);
    return out;
  }

  void inverse(std::span<const Complex> in, std::span<double> out) {
    std::memcpy(spec_.get(), in.data(), spectrum_size() * sizeof(Complex));
    fftw_execute(inv_);  // c2r clobbers its input, hence the staging buffer
    const double scale = 1.0 / static_cast<double>(width_ * height_);
    const double* r = real_.get();
    for (std::size_t i = 0; i < width_ * height_; ++i) out[i] = r[i] * scale;
  }

  /// Number of full-spectrum bins represented by half-spectrum column `kx`
  /// (1 for the self-conjugate columns, 2 otherwise).
  double column_multiplicity(std::size_t kx) const noexcept {
    if (kx == 0) return 1.0;
    if (width_ % 2 == 0 && kx == width_ / 2) return 1.0;
    return 2.0;
  }

 private:
  struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
  };

  std::size_t width_, height_, half_width_;
  std::unique_ptr<double, FftwFree> real_;
  std::unique_ptr<fftw_complex, FftwFree> spec_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace specrec
