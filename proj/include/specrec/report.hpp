#pragma once

// CSV / JSON serialisation of traces, metrics and comparison tables.
// Numbers are printed with a fixed printf format so identical inputs give
// identical bytes.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specrec/compare.hpp"
#include "specrec/gap_tv.hpp"
#include "specrec/metrics.hpp"
#include "specrec/pipeline.hpp"

namespace specrec {

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// NaN prints as an empty cell.
inline std::string fmt_cell(double v) { return std::isnan(v) ? "" : fmt_num(v); }

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : ""; }

inline void write_gap_trace_csv(std::ostream& os, const GapTrace& trace) {
  os << "iteration,fidelity,tv,psnr\n";
  for (const auto& r : trace.records)
    os << r.iteration << ',' << fmt_num(r.fidelity) << ',' << fmt_num(r.tv) << ','
       << fmt_opt(r.psnr) << '\n';
}

/// `with_timing == false` writes 0 in the seconds column for byte-stable output.
inline void write_run_trace_csv(std::ostream& os, const RunTrace& trace, bool with_timing = true) {
  os << "iteration,projected_fidelity,fidelity,psnr_db,ssim,first_primal_residual,"
        "last_primal_residual,seconds\n";
  for (const auto& r : trace.records) {
    os << r.iteration << ',' << fmt_num(r.projected_fidelity) << ',' << fmt_num(r.fidelity) << ','
       << fmt_opt(r.psnr) << ',' << fmt_opt(r.ssim) << ',';
    if (!r.primal_residuals.empty())
      os << fmt_num(r.primal_residuals.front()) << ',' << fmt_num(r.primal_residuals.back());
    else
      os << ',';
    os << ',' << fmt_num(with_timing ? r.seconds : 0.0) << '\n';
  }
}

struct NamedMetrics {
  std::string region;  // "all" or the region label
  MetricsReport report;
};

inline void write_metrics_csv(std::ostream& os, const std::vector<NamedMetrics>& rows) {
  os << "region,psnr_db,ssim,sam_rad,sam_skipped\n";
  for (const auto& r : rows)
    os << r.region << ',' << fmt_num(r.report.psnr_db) << ',' << fmt_cell(r.report.ssim) << ','
       << fmt_num(r.report.sam_rad) << ',' << r.report.sam_skipped << '\n';
}

inline nlohmann::ordered_json metrics_json(const std::vector<NamedMetrics>& rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["region"] = r.region;
    o["psnr_db"] = r.report.psnr_db;
    if (std::isnan(r.report.ssim))
      o["ssim"] = nullptr;
    else
      o["ssim"] = r.report.ssim;
    o["sam_rad"] = r.report.sam_rad;
    o["sam_skipped"] = r.report.sam_skipped;
    arr.push_back(std::move(o));
  }
  return arr;
}

inline constexpr const char* kCompareHeader = "scene,method,psnr_db,ssim,sam_rad,seconds";

inline void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows,
                              bool with_timing = true) {
  os << kCompareHeader << '\n';
  for (const auto& r : rows)
    os << r.scene << ',' << method_name(r.method) << ',' << fmt_num(r.psnr_db) << ','
       << fmt_num(r.ssim) << ',' << fmt_num(r.sam_rad) << ','
       << fmt_num(with_timing ? r.seconds : 0.0) << '\n';
}

}  // namespace specrec
