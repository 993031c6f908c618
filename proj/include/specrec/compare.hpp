#pragma once

// Runs several reconstruction methods over a set of scenes with one shared
// acquisition setup and tabulates PSNR / SSIM / SAM per (scene, method).

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "specrec/forward_model.hpp"
#include "specrec/metrics.hpp"
#include "specrec/pipeline.hpp"

namespace specrec {

struct Scene {
  std::string name;
  SpectralCube truth;
};

struct AcquisitionSetup {
  std::uint64_t mask_seed = 7;
  double density = 0.5;
  long shear_step = 1;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 11;
};

struct CompareRow {
  std::string scene;
  Method method = Method::GapTvOnly;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double sam_rad = 0.0;
  double seconds = 0.0;
};

/// Called with every reconstructed cube, e.g. to persist it.
using CubeSink = std::function<void(const std::string& scene, Method, const SpectralCube&)>;

inline std::vector<CompareRow> compare_methods(const std::vector<Scene>& scenes,
                                               const std::vector<Method>& methods,
                                               const AcquisitionSetup& acq,
                                               const ConvDictionary* dict,
                                               const SolverParams& params,
                                               const CubeSink& sink = {}) {
  std::vector<CompareRow> rows;
  for (const auto& scene : scenes) {
    const auto& t = scene.truth;
    const SystemMasks sys =
        build_system(generate_mask(t.width(), t.height(), acq.mask_seed, acq.density), t.bands(),
                     acq.shear_step);
    const Measurement y = add_noise(forward(sys, t), acq.noise_sigma, acq.noise_seed);
    for (Method m : methods) {
      const auto start = std::chrono::steady_clock::now();
      Reconstruction r = reconstruct(sys, y, dict, params, m);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const MetricsReport rep = evaluate(t, r.cube);
      rows.push_back({scene.name, m, rep.psnr_db, rep.ssim, rep.sam_rad, secs});
      if (sink) sink(scene.name, m, r.cube);
    }
  }
  return rows;
}

}  // namespace specrec
