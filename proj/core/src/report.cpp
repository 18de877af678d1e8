#include "solar/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "solar/errors.hpp"

namespace solar {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": not a number: '" + s + "'");
  }
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double pop_std(std::span<const double> v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

void write_report(std::ostream& out, const Report& r) {
  out << "# solar-report v" << kReportVersion << "\n";
  if (!r.config.empty()) out << "# config " << r.config << "\n";
  out << kReportColumns << "\n";
  for (const auto& row : r.rows)
    out << row.frame << ',' << fmt(row.psnr_db) << ',' << fmt(row.ssim) << ',' << row.bytes << ','
        << fmt(row.grad_ema) << ',' << (row.recal ? 1 : 0) << ',' << row.active_anchors << "\n";
}

void write_report(const std::filesystem::path& path, const Report& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_report(out, r);
  if (!out) throw IoError("failed writing " + path.string());
}

Report read_report(std::istream& in, const std::string& name) {
  Report r;
  std::string line;
  std::size_t lineno = 0;
  bool versioned = false, columns = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = name + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (line.rfind("# solar-report v", 0) == 0) {
      const std::string v = line.substr(16);
      if (v != std::to_string(kReportVersion)) throw FormatError(where + ": unsupported report version " + v);
      versioned = true;
      continue;
    }
    if (line.rfind("# config ", 0) == 0) {
      r.config = line.substr(9);
      continue;
    }
    if (line[0] == '#') continue;
    if (!versioned) throw FormatError(where + ": missing '# solar-report v" + std::to_string(kReportVersion) + "' line");
    if (!columns) {
      if (line != kReportColumns) throw FormatError(where + ": unexpected columns '" + line + "'");
      columns = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 7) throw FormatError(where + ": expected 7 fields, found " + std::to_string(f.size()));
    FrameReport row;
    row.frame = static_cast<std::uint32_t>(parse_double(f[0], where));
    row.psnr_db = parse_double(f[1], where);
    row.ssim = parse_double(f[2], where);
    row.bytes = static_cast<std::uint64_t>(parse_double(f[3], where));
    row.grad_ema = parse_double(f[4], where);
    row.recal = parse_double(f[5], where) != 0.0;
    row.active_anchors = static_cast<std::size_t>(parse_double(f[6], where));
    r.rows.push_back(row);
  }
  if (!versioned || !columns) throw FormatError(name + ": not a solar report");
  return r;
}

Report read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_report(in, path.string());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  if (x.size() < 2) throw Error("pearson: need at least two samples");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("pearson: a series is constant");
  return sxy / std::sqrt(sxx * syy);
}

double psnr_gradient_correlation(const Report& r) {
  std::vector<double> p, g;
  for (const auto& row : r.rows)
    if (row.grad_ema > 0.0) {
      p.push_back(row.psnr_db);
      g.push_back(row.grad_ema);
    }
  return pearson(p, g);
}

StabilityStats stability(std::span<const Report> runs) {
  if (runs.size() < 2) throw Error("stability needs at least two runs");
  const std::size_t frames = runs[0].rows.size();
  if (frames == 0) throw Error("stability: empty run");
  for (const auto& r : runs) {
    if (r.rows.size() != frames) throw Error("stability: runs cover different frame counts");
    for (std::size_t t = 0; t < frames; ++t)
      if (r.rows[t].frame != runs[0].rows[t].frame) throw Error("stability: runs cover different frames");
  }
  StabilityStats s;
  std::vector<double> run_means, run_stds;
  for (const auto& r : runs) {
    std::vector<double> p;
    for (const auto& row : r.rows) p.push_back(row.psnr_db);
    run_means.push_back(mean_of(p));
    run_stds.push_back(pop_std(p));
  }
  s.mu_seq = mean_of(run_means);
  s.sigma_temp = mean_of(run_stds);
  std::vector<double> frame_stds;
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<double> p;
    for (const auto& r : runs) p.push_back(r.rows[t].psnr_db);
    frame_stds.push_back(pop_std(p));
  }
  s.sigma_run = mean_of(frame_stds);
  return s;
}

RdPoint rd_point(const Report& r) {
  if (r.rows.empty()) throw Error("rd: empty run");
  double bytes = 0.0, p = 0.0;
  for (const auto& row : r.rows) {
    bytes += static_cast<double>(row.bytes);
    p += row.psnr_db;
  }
  const double n = static_cast<double>(r.rows.size());
  return RdPoint{bytes / n, p / n};
}

double mean_psnr(const Report& r, std::uint32_t first, std::uint32_t last) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& row : r.rows)
    if (row.frame >= first && row.frame < last) {
      s += row.psnr_db;
      ++n;
    }
  if (n == 0) throw Error("mean_psnr: no frames in range");
  return s / static_cast<double>(n);
}

void write_drift_table(std::ostream& out, std::span<const Report> runs) {
  if (runs.empty()) throw Error("drift: no runs");
  out << "frame";
  for (std::size_t i = 0; i < runs.size(); ++i) out << ",psnr_run" << i;
  out << ",psnr_mean\n";
  const std::size_t frames = runs[0].rows.size();
  for (const auto& r : runs)
    if (r.rows.size() != frames) throw Error("drift: runs cover different frame counts");
  for (std::size_t t = 0; t < frames; ++t) {
    out << runs[0].rows[t].frame;
    double s = 0.0;
    for (const auto& r : runs) {
      out << ',' << fmt(r.rows[t].psnr_db);
      s += r.rows[t].psnr_db;
    }
    out << ',' << fmt(s / static_cast<double>(runs.size())) << "\n";
  }
}

void write_rd_table(std::ostream& out, std::span<const Report> runs) {
  out << "run,bytes_per_frame,psnr_db\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const RdPoint p = rd_point(runs[i]);
    out << i << ',' << fmt(p.bytes_per_frame) << ',' << fmt(p.mean_psnr) << "\n";
  }
}

void write_correlation_table(std::ostream& out, std::span<const Report> runs) {
  out << "run,pearson_r\n";
  for (std::size_t i = 0; i < runs.size(); ++i) out << i << ',' << fmt(psnr_gradient_correlation(runs[i])) << "\n";
}

void write_stability_table(std::ostream& out, std::span<const Report> runs) {
  const StabilityStats s = stability(runs);
  out << "runs,mu_seq,sigma_run,sigma_temp\n";
  out << runs.size() << ',' << fmt(s.mu_seq) << ',' << fmt(s.sigma_run) << ',' << fmt(s.sigma_temp) << "\n";
}

}  // namespace solar
