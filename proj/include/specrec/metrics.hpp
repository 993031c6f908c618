#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "specrec/core.hpp"

namespace specrec {

/// Returned by psnr when the inputs are identical (or nearly so).
inline constexpr double kPsnrCap = 99.0;

/// Mean over bands / region pixels, as reported per reconstruction.
struct MetricsReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double sam_rad = 0.0;
  std::size_t sam_skipped = 0;
};

/// 10 log10(peak^2 / MSE) with the MSE taken jointly over all voxels.
inline double psnr(const SpectralCube& a, const SpectralCube& b, double peak = 1.0) {
  if (!a.same_shape(b)) throw ShapeError("psnr: dimension mismatch");
  if (!(peak > 0)) throw ParameterError("psnr: peak must be > 0");
  const auto da = a.data(), db = b.data();
  if (da.empty()) throw ShapeError("psnr: empty cubes");
  double acc = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(da.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

namespace detail {

inline constexpr int kSsimWindow = 11;

inline std::array<double, kSsimWindow> ssim_kernel() {
  std::array<double, kSsimWindow> k{};
  const double sigma = 1.5;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double x = i - kSsimWindow / 2;
    k[i] = std::exp(-(x * x) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable "valid" Gaussian filtering: output is (w-10) x (h-10).
inline std::vector<double> filter_valid(const std::vector<double>& in, std::size_t w,
                                        std::size_t h) {
  static const auto k = ssim_kernel();
  const std::size_t ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
  std::vector<double> tmp(ow * h), out(ow * oh);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) s += k[i] * in[y * w + x + i];
      tmp[y * ow + x] = s;
    }
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) s += k[i] * tmp[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace detail

/// Mean local SSIM (11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03, peak 1).
inline double ssim(const Image2D& a, const Image2D& b) {
  if (!a.same_shape(b)) throw ShapeError("ssim: dimension mismatch");
  const std::size_t w = a.width(), h = a.height();
  if (w < detail::kSsimWindow || h < detail::kSsimWindow)
    throw ShapeError("ssim: images smaller than the 11x11 window");
  if (a.values() == b.values()) return 1.0;

  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const auto& va = a.values();
  const auto& vb = b.values();
  std::vector<double> aa(va.size()), bb(va.size()), ab(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto mu_a = detail::filter_valid(va, w, h);
  const auto mu_b = detail::filter_valid(vb, w, h);
  const auto s_aa = detail::filter_valid(aa, w, h);
  const auto s_bb = detail::filter_valid(bb, w, h);
  const auto s_ab = detail::filter_valid(ab, w, h);

  double acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double var_a = s_aa[i] - ma * ma;
    const double var_b = s_bb[i] - mb * mb;
    const double cov = s_ab[i] - ma * mb;
    acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
           ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
  }
  return acc / static_cast<double>(mu_a.size());
}

inline double ssim(const SpectralCube& a, const SpectralCube& b) {
  if (!a.same_shape(b)) throw ShapeError("ssim: dimension mismatch");
  double acc = 0.0;
  for (std::size_t l = 0; l < a.bands(); ++l)
    acc += ssim(extract_band(a, l), extract_band(b, l));
  return acc / static_cast<double>(a.bands());
}

struct SamResult {
  double mean_rad = 0.0;
  std::size_t skipped = 0;  // zero-norm pixels left out of the mean
};

/// Mean per-pixel spectral angle over the region.
inline SamResult sam_region(const SpectralCube& a, const SpectralCube& b, const Region& region) {
  if (!a.same_shape(b)) throw ShapeError("sam: dimension mismatch");
  if (region.empty() || !region.fits(a.width(), a.height()))
    throw ShapeError("sam: invalid region");
  SamResult res;
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t y = region.y0; y < region.y0 + region.h; ++y) {
    for (std::size_t x = region.x0; x < region.x0 + region.w; ++x) {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t l = 0; l < a.bands(); ++l) {
        dot += a(x, y, l) * b(x, y, l);
        na += a(x, y, l) * a(x, y, l);
        nb += b(x, y, l) * b(x, y, l);
      }
      if (na == 0.0 || nb == 0.0) {
        ++res.skipped;
        continue;
      }
      const double c = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
      acc += std::acos(c);
      ++used;
    }
  }
  if (used == 0) throw DataError("sam: every pixel in the region has a zero-norm spectrum");
  res.mean_rad = acc / static_cast<double>(used);
  return res;
}

inline MetricsReport evaluate(const SpectralCube& truth, const SpectralCube& estimate,
                              const Region& sam_area) {
  MetricsReport r;
  r.psnr_db = psnr(truth, estimate);
  r.ssim = ssim(truth, estimate);
  const auto s = sam_region(truth, estimate, sam_area);
  r.sam_rad = s.mean_rad;
  r.sam_skipped = s.skipped;
  return r;
}

inline MetricsReport evaluate(const SpectralCube& truth, const SpectralCube& estimate) {
  return evaluate(truth, estimate, Region{0, 0, truth.width(), truth.height()});
}

/// All three metrics restricted to `region`. SSIM is NaN when the region is
/// smaller than the SSIM window.
inline MetricsReport evaluate_region(const SpectralCube& truth, const SpectralCube& estimate,
                                     const Region& region) {
  if (!truth.same_shape(estimate)) throw ShapeError("evaluate: dimension mismatch");
  const SpectralCube a = crop(truth, region), b = crop(estimate, region);
  MetricsReport r;
  r.psnr_db = psnr(a, b);
  r.ssim = (region.w >= detail::kSsimWindow && region.h >= detail::kSsimWindow)
               ? ssim(a, b)
               : std::numeric_limits<double>::quiet_NaN();
  const auto s = sam_region(truth, estimate, region);
  r.sam_rad = s.mean_rad;
  r.sam_skipped = s.skipped;
  return r;
}

}  // namespace specrec
