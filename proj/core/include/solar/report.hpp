#pragma once

// Per-frame CSV reports and the statistics derived from them.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "solar/pipeline.hpp"

namespace solar {

inline constexpr int kReportVersion = 1;
inline constexpr const char* kReportColumns = "frame,psnr_db,ssim,bytes,grad_ema,recal,active_anchors";

struct Report {
  std::string config;  // echoed configuration, may be empty
  std::vector<FrameReport> rows;
};

/// "# solar-report v1", "# config ...", the column row, then one row per frame.
void write_report(std::ostream& out, const Report& r);
void write_report(const std::filesystem::path& path, const Report& r);
Report read_report(std::istream& in, const std::string& name = "report");
Report read_report(const std::filesystem::path& path);

double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson r between psnr_db and grad_ema over P-frame rows (grad_ema > 0).
double psnr_gradient_correlation(const Report& r);

struct StabilityStats {
  double mu_seq = 0.0;      // mean over runs of each run's mean PSNR
  double sigma_run = 0.0;   // mean over frames of the across-run std
  double sigma_temp = 0.0;  // mean over runs of the across-frame std
};

/// Population standard deviations; all runs must cover the same frames.
StabilityStats stability(std::span<const Report> runs);

struct RdPoint {
  double bytes_per_frame = 0.0;
  double mean_psnr = 0.0;
};
RdPoint rd_point(const Report& r);

/// Mean PSNR over rows with first <= frame < last.
double mean_psnr(const Report& r, std::uint32_t first, std::uint32_t last);

/// CSV emitters for the report command.
void write_drift_table(std::ostream& out, std::span<const Report> runs);
void write_rd_table(std::ostream& out, std::span<const Report> runs);
void write_correlation_table(std::ostream& out, std::span<const Report> runs);
void write_stability_table(std::ostream& out, std::span<const Report> runs);

}  // namespace solar
