#pragma once
// Sweep outputs: sweep.csv (the contract), config.echo, side tables, and
// static SVG plots regenerated from the rows.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pdlab/harness/config.hpp"
#include "pdlab/harness/sweeps.hpp"
#include "pdlab/io.hpp"

namespace pdlab::harness {

inline constexpr const char* kSweepCsvHeader =
    "sweep_var,sweep_value,predistorter,ngmi,gmi,snr_db,sigma2,clip_count,seed,wall_ms";

inline std::string sweep_csv(const SweepResult& r, bool record_wall_time) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  char wall[32];
  for (const auto& row : r.rows) {
    std::snprintf(wall, sizeof wall, "%.3f", record_wall_time ? row.wall_ms : 0.0);
    out += std::string(to_string(row.variable)) + "," + format_metric(row.value) + "," + row.predistorter + "," +
           format_metric(row.report.ngmi) + "," + format_metric(row.report.gmi) + "," +
           format_metric(row.report.snr_db) + "," + format_metric(row.report.sigma2) + "," +
           std::to_string(row.clip_count) + "," + std::to_string(row.report.seed) + "," + wall + "\n";
  }
  return out;
}

inline std::string convergence_csv(const SweepResult& r) {
  std::string out = "iteration,residual_rms,residual_rel,ngmi,gmi,snr_db,sigma2,clip_count\n";
  for (const auto& c : r.convergence)
    out += std::to_string(c.iteration) + "," + format_metric(c.residual_rms) + "," + format_metric(c.residual_rel) +
           "," + format_metric(c.report.ngmi) + "," + format_metric(c.report.gmi) + "," +
           format_metric(c.report.snr_db) + "," + format_metric(c.report.sigma2) + "," +
           std::to_string(c.clip_count) + "\n";
  return out;
}

inline std::string fec_csv(const SweepResult& r) {
  std::string out = "predistorter,fec_limit,first_" + std::string(to_string(r.variable)) + "_meeting_limit\n";
  for (const auto& f : r.fec)
    out += f.predistorter + "," + format_metric(kFecNgmiLimit) + "," +
           (f.first_value ? format_metric(*f.first_value) : std::string("none")) + "\n";
  return out;
}

inline std::string penalty_csv(const PenaltyCurves& p) {
  std::string out = "snr_db,ngmi_original,ngmi_distorted,gap\n";
  for (std::size_t i = 0; i < p.snr_db.size(); ++i)
    out += format_metric(p.snr_db[i]) + "," + format_metric(p.ngmi_original[i]) + "," +
           format_metric(p.ngmi_distorted[i]) + "," + format_metric(p.gap(i)) + "\n";
  return out;
}

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal line plot. Non-finite points are skipped.
inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                            const std::vector<PlotSeries>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 55;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x0 <= x1) || !(y0 <= y1)) fail(Errc::InvalidArgument, "nothing to plot");
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1e-3;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                W, H);
  s += buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">%s</text>\n",
                (W - R + L) / 2, title.c_str());
  s += buf;
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n", L, T,
                W - L - R, H - T - B);
  s += buf;
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.4g</text>\n", px(xv), H - B + 16,
                  xv);
    s += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.4g</text>\n", L - 6, py(yv) + 4, yv);
    s += buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n", (W - R + L) / 2,
                H - 14, xlabel.c_str());
  s += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%g\" text-anchor=\"middle\" transform=\"rotate(-90 16 %g)\">%s</text>\n",
                (H - B + T) / 2, (H - B + T) / 2, ylabel.c_str());
  s += buf;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* col = colors[k % 6];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      if (!std::isfinite(series[k].x[i]) || !std::isfinite(series[k].y[i])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(series[k].x[i]), py(series[k].y[i]));
      s += buf;
    }
    s += "\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%g\" y=\"%g\">%s</text>\n",
                  W - R + 10, T + 14 + 18.0 * k, W - R + 30, T + 14 + 18.0 * k, col, W - R + 36, T + 18 + 18.0 * k,
                  series[k].name.c_str());
    s += buf;
  }
  s += "</svg>\n";
  return s;
}

namespace detail {

inline const char* axis_label(SweepVariable v) {
  switch (v) {
    case SweepVariable::Swing: return "DAC swing [V]";
    case SweepVariable::Osnr: return "OSNR [dB]";
    case SweepVariable::Iteration: return "SW training iteration";
    case SweepVariable::Snr: return "SNR [dB]";
  }
  return "";
}

inline void write_plots(const std::filesystem::path& dir, const SweepResult& r,
                        const std::vector<std::string>& predistorters) {
  struct Metric {
    const char* file;
    const char* label;
    double (*get)(const MetricReport&);
  };
  const Metric metrics[] = {
      {"ngmi.svg", "NGMI", [](const MetricReport& m) { return m.ngmi; }},
      {"gmi.svg", "GMI [bit/symbol]", [](const MetricReport& m) { return m.gmi; }},
      {"snr_db.svg", "SNR [dB]", [](const MetricReport& m) { return m.snr_db; }},
  };
  for (const auto& m : metrics) {
    std::vector<PlotSeries> series;
    for (const auto& id : predistorters) {
      PlotSeries ps{id, {}, {}};
      for (const auto& row : r.series(id)) {
        ps.x.push_back(row.value);
        ps.y.push_back(m.get(row.report));
      }
      if (std::any_of(ps.y.begin(), ps.y.end(), [](double v) { return std::isfinite(v); }))
        series.push_back(std::move(ps));
    }
    if (series.empty()) continue;  // e.g. snr_db on a noiseless run
    io::write_file_atomic(dir / m.file,
                          svg_plot(std::string(m.label) + " vs " + to_string(r.variable), axis_label(r.variable),
                                   m.label, series));
  }
  if (std::any_of(r.convergence.begin(), r.convergence.end(), [](const ConvergenceRow& c) { return c.residual_rel > 0; })) {
    PlotSeries ps{"residual/peak", {}, {}};
    for (const auto& c : r.convergence) {
      ps.x.push_back(c.iteration);
      ps.y.push_back(c.residual_rel > 0 ? std::log10(c.residual_rel) : NAN);
    }
    io::write_file_atomic(dir / "residual.svg",
                          svg_plot("SW residual", axis_label(r.variable), "log10(residual RMS / peak)", {ps}));
  }
}

inline void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) fail(Errc::IoError, "cannot create output directory " + dir.string());
}

}  // namespace detail

/// Writes sweep.csv, config.echo, side tables and plots. Plot failures are
/// reported on stderr and never fail the call.
inline void emit_outputs(const SweepResult& r, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  detail::prepare_dir(dir);
  io::write_file_atomic(dir / "sweep.csv", sweep_csv(r, cfg.record_wall_time));
  io::write_file_atomic(dir / "config.echo", to_json(cfg).dump(2) + "\n");
  if (!r.fec.empty()) io::write_file_atomic(dir / "fec_limit.csv", fec_csv(r));
  if (!r.convergence.empty()) io::write_file_atomic(dir / "convergence.csv", convergence_csv(r));
  if (!cfg.plots) return;
  try {
    std::vector<std::string> ids;
    for (const auto& row : r.rows)
      if (std::find(ids.begin(), ids.end(), row.predistorter) == ids.end()) ids.push_back(row.predistorter);
    detail::write_plots(dir, r, ids);
  } catch (const std::exception& e) {
    std::cerr << "warning: plotting failed: " << e.what() << "\n";
  }
}

inline void emit_penalty(const PenaltyResult& p, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  detail::prepare_dir(dir);
  io::write_file_atomic(dir / "penalty.csv", penalty_csv(p.curves));
  io::write_file_atomic(dir / "config.echo", to_json(cfg).dump(2) + "\n");
  {
    std::ostringstream ss;
    write_constellation(ss, p.distorted);
    io::write_file_atomic(dir / "distorted_constellation.txt", ss.str());
  }
  if (!cfg.plots) return;
  try {
    io::write_file_atomic(dir / "penalty.svg",
                          svg_plot("NGMI vs SNR", "SNR [dB]", "NGMI",
                                   {{"original", p.curves.snr_db, p.curves.ngmi_original},
                                    {"distorted", p.curves.snr_db, p.curves.ngmi_distorted}}));
  } catch (const std::exception& e) {
    std::cerr << "warning: plotting failed: " << e.what() << "\n";
  }
}

}  // namespace pdlab::harness
