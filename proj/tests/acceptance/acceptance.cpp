// Acceptance suite. One line per criterion:
//   PASS|FAIL  <id>  <name>  <measured values>  (<seconds> s / limit)
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "pdlab/harness/config.hpp"
#include "pdlab/harness/output.hpp"
#include "pdlab/harness/sweeps.hpp"
#include "pdlab/pdlab.hpp"

using namespace pdlab;
using namespace pdlab::harness;

namespace {

// tolerances, pinned
constexpr double kNetRateTol = 0.5e9;
constexpr double kGmiOracleTol = 0.01;         // bits
constexpr std::size_t kGmiSymbols = 1u << 18;
constexpr double kSwResidualLimit = 1e-3;      // of peak, after 5 passes
constexpr double kOrderingTol = 0.003;         // NGMI
constexpr double kPenaltyMinGap = 0.005;
constexpr double kPenaltyControlGap = 0.002;
constexpr double kTanhDrive = 0.8;             // peak drive / vsat
constexpr int kAveragingSeeds = 100;
constexpr double kBandSigmas = 3.0;
constexpr double kAveragingNoise = 0.05;

// runtime limits, seconds
constexpr double kLimit1 = 1, kLimit2 = 1, kLimit3 = 60, kLimit4 = 120, kLimit5 = 300, kLimit6 = 300,
                 kLimit7 = 180, kLimit8 = 120;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const char* name, double limit_s, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0 || s < limit_s;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  char t[64];
  std::snprintf(t, sizeof t, "(%.2f s / %s)", s, limit_s > 0 ? (std::to_string(static_cast<int>(limit_s)) + " s").c_str() : "-");
  std::printf("%s  %d  %-28s %s %s%s\n", ok ? "PASS" : "FAIL", id, name, o.detail.c_str(), t,
              in_time ? "" : " TIME LIMIT EXCEEDED");
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

Outcome lut_sizing() {
  using boost::multiprecision::cpp_int;
  bool ok = lut_size(36, 7, 4) == cpp_int("313456656384");
  const auto L = amplitude_alphabet(builtin_constellation("cross-qam128")).size();
  ok = ok && L == 12;
  std::string d = "lut_size(36,7,4)=" + lut_size(36, 7, 4).str() + " cross-qam128 L=" + std::to_string(L);
  for (std::uint64_t n = 1; n <= 9; n += 2) {
    std::uint64_t ref = 4;
    for (std::uint64_t i = 0; i < n; ++i) ref *= 12;
    ok = ok && lut_size(L, n, 4) == ref;
  }
  d += " lut_size(12,5,4)=" + lut_size(L, 5, 4).str();
  return {ok, d};
}

Outcome net_rate_check() {
  const double code_rate = 540e9 / (48.8e9 * 7 * 2);
  const double r = net_rate(48.8e9, 7, 2, 0.7904);
  return {std::abs(r - 540e9) <= kNetRateTol && std::abs(code_rate - 0.7904) < 5e-5,
          "net_rate=" + fmt("%.4f", r / 1e9) + " Gb/s, derived code rate " + fmt("%.5f", code_rate)};
}

Outcome gmi_oracle() {
  const auto c = builtin_constellation("qpsk");
  bool ok = true;
  std::string d;
  int i = 0;
  for (double snr : {0.0, 3.0, 6.0, 10.0}) {
    std::mt19937_64 rng(1000 + i++);
    std::uniform_int_distribution<std::uint32_t> pick(0, 3);
    std::vector<std::uint32_t> labels(kGmiSymbols);
    std::vector<cd> tx(kGmiSymbols);
    for (std::size_t k = 0; k < kGmiSymbols; ++k) tx[k] = c.point_for_label(labels[k] = pick(rng));
    const auto rx = add_awgn(tx, noise_variance(snr), rng);
    const double g = gmi(rx, c, labels).gmi, ref = oracle::qpsk_gmi(snr);
    ok = ok && std::abs(g - ref) <= kGmiOracleTol;
    d += fmt("%g dB:", snr) + fmt("%.4f", g) + "/" + fmt("%.4f", ref) + " ";
  }
  return {ok, d};
}

Outcome sw_convergence() {
  const auto cfg = parse_config(json::object(), SweepVariable::Iteration);
  const auto r = run_sw_convergence(cfg);
  bool ok = r.convergence.size() == 11 && r.convergence[5].iteration == 5;
  ok = ok && r.convergence[5].residual_rel < kSwResidualLimit;
  bool mono = true;
  for (std::size_t i = 2; i < r.convergence.size(); ++i)
    mono = mono && r.convergence[i].residual_rms <= r.convergence[i - 1].residual_rms;
  return {ok && mono, "N=" + std::to_string(cfg.symbols) + " residual/peak it1=" + fmt("%.3g", r.convergence[1].residual_rel) +
                          " it5=" + fmt("%.3g", r.convergence[5].residual_rel) +
                          " it10=" + fmt("%.3g", r.convergence[10].residual_rel) +
                          (mono ? " non-increasing" : " INCREASES")};
}

SweepResult osnr_result;

Outcome osnr_ordering() {
  const auto cfg = parse_config(json::object(), SweepVariable::Osnr);
  osnr_result = run_osnr_sweep(cfg);
  const auto lin = osnr_result.series("linear"), n3 = osnr_result.series("lut-n3"), n5 = osnr_result.series("lut-n5"),
             sw = osnr_result.series("sw");
  bool order = true;
  double worst = INFINITY;
  for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
    const double a = sw[g].report.ngmi, b = n5[g].report.ngmi, c = n3[g].report.ngmi, d = lin[g].report.ngmi;
    worst = std::min({worst, a - b, b - c, c - d});
    order = order && a >= b - kOrderingTol && b >= c - kOrderingTol && c >= d - kOrderingTol;
  }
  std::map<std::string, double> cross;
  for (const auto& f : osnr_result.fec) cross[f.predistorter] = f.first_value.value_or(INFINITY);
  bool fec = std::isfinite(cross["sw"]);
  for (const auto& [id, v] : cross) fec = fec && cross["sw"] <= v;
  std::string d = "min adjacent margin " + fmt("%.4f", worst) + "; FEC 0.85 first OSNR:";
  for (const auto& f : osnr_result.fec)
    d += " " + f.predistorter + "=" + (f.first_value ? fmt("%g", *f.first_value) : std::string("never"));
  return {order && fec, d};
}

Outcome swing_shape() {
  const auto cfg = parse_config(json::object(), SweepVariable::Swing);
  const auto r = run_swing_sweep(cfg);
  auto curve = [&](const std::string& id) {
    std::vector<double> v;
    for (const auto& row : r.series(id)) v.push_back(row.report.ngmi);
    return v;
  };
  const auto lin = curve("linear"), sw = curve("sw");
  const auto imax = static_cast<std::size_t>(std::max_element(lin.begin(), lin.end()) - lin.begin());
  const bool interior = imax > 0 && imax + 1 < lin.size() && lin[imax] > lin.front() && lin[imax] > lin.back();
  const double lin_drop = lin[imax] - lin.back();
  const double sw_drop = *std::max_element(sw.begin(), sw.end()) - sw.back();
  return {interior && sw_drop < lin_drop, "linear peak at " + fmt("%g V", cfg.grid[imax]) + ", drop to max swing linear=" +
                                              fmt("%.4f", lin_drop) + " sw=" + fmt("%.5f", sw_drop)};
}

Outcome penalty() {
  const auto cfg = parse_config(json::object(), SweepVariable::Snr);
  const auto p = run_penalty(cfg, PenaltySource::Tanh, kTanhDrive);
  double min_gap = INFINITY;
  for (std::size_t i = 0; i < p.curves.snr_db.size(); ++i) min_gap = std::min(min_gap, p.curves.gap(i));
  const auto control = constellation_penalty(p.original, p.original, cfg.grid, cfg.penalty_symbols,
                                             derive_seed(cfg.seed, 0, kEvalNoiseStream) + 1);
  double control_gap = 0.0;
  for (std::size_t i = 0; i < control.snr_db.size(); ++i) control_gap = std::max(control_gap, std::abs(control.gap(i)));
  const bool ok = min_gap > 0.0 && p.curves.max_gap > kPenaltyMinGap && control_gap < kPenaltyControlGap &&
                  p.curves.snr_db.front() == 8 && p.curves.snr_db.back() == 20;
  return {ok, "N=" + std::to_string(cfg.penalty_symbols) + " gap min=" + fmt("%.4f", min_gap) +
                  " max=" + fmt("%.4f", p.curves.max_gap) + fmt(" at %g dB", p.curves.max_gap_snr_db) +
                  ", control |gap| max=" + fmt("%.2g", control_gap)};
}

Outcome averaging() {
  const auto c = builtin_constellation("cross-qam128");
  const auto a = amplitude_alphabet(c);
  const auto tx = lanes(generate_frame(1, 1u << 14, c).symbols)[0].values;
  std::map<std::uint64_t, std::pair<double, double>> acc;  // sum, sum of squares
  std::map<std::uint64_t, std::uint64_t> counts;
  for (int s = 0; s < kAveragingSeeds; ++s) {
    std::mt19937_64 rng(derive_seed(77, static_cast<std::uint64_t>(s), 0));
    std::normal_distribution<double> nd(0.0, kAveragingNoise);
    auto rx = tx;
    for (auto& v : rx) v += nd(rng);
    const auto table = train_pattern_lut(tx, rx, a, 3);
    for (const auto& [k, e] : table.entries()) {
      acc[k].first += e.average();
      acc[k].second += e.average() * e.average();
      counts[k] = e.count;
    }
  }
  const double S = kAveragingSeeds;
  const double band = kBandSigmas * std::sqrt(1.0 / (2.0 * (S - 1.0)));  // std of a sample sd, relative
  double sum_r2 = 0.0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t inside = 0, K = 0;
  std::vector<std::pair<double, double>> pts;
  for (const auto& [k, m] : acc) {
    const double mean = m.first / S;
    const double sd = std::sqrt((m.second - S * mean * mean) / (S - 1.0));
    const double expect = kAveragingNoise / std::sqrt(static_cast<double>(counts[k]));
    const double r = sd / expect;
    sum_r2 += r * r;
    inside += std::abs(r - 1.0) <= band;
    const double x = std::log(static_cast<double>(counts[k])), y = std::log(sd);
    pts.emplace_back(x, y);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++K;
  }
  const double n = static_cast<double>(K);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  double rss = 0.0;
  for (const auto& [x, y] : pts) rss += std::pow(y - icpt - slope * x, 2);
  const double se = std::sqrt(rss / (n - 2.0) / (sxx - sx * sx / n));
  const double pooled = sum_r2 / n;
  const double pooled_sd = std::sqrt(2.0 / (S - 1.0) / n);
  const double frac = static_cast<double>(inside) / n;
  const bool ok = std::abs(pooled - 1.0) <= kBandSigmas * pooled_sd && std::abs(slope + 0.5) <= kBandSigmas * se &&
                  frac >= 0.99;
  return {ok, std::to_string(K) + " entries x " + std::to_string(kAveragingSeeds) + " seeds: var ratio " +
                  fmt("%.4f", pooled) + " (3s " + fmt("%.4f", kBandSigmas * pooled_sd) + "), log-log slope " +
                  fmt("%.4f", slope) + " (3s " + fmt("%.4f", kBandSigmas * se) + "), in band " + fmt("%.4f", frac)};
}

Outcome determinism() {
  // rerun the OSNR sweep of criterion 5 with the same config and compare files
  const auto cfg = parse_config(json::object(), SweepVariable::Osnr);
  const auto base = std::filesystem::temp_directory_path() / "pdlab_acceptance";
  std::filesystem::remove_all(base);
  emit_outputs(osnr_result, cfg, base / "a");
  emit_outputs(run_osnr_sweep(cfg), cfg, base / "b");
  const auto a = io::read_file(base / "a" / "sweep.csv"), b = io::read_file(base / "b" / "sweep.csv");
  return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  std::printf("pdlab acceptance (workers=%u)\n", worker_count());
  run(1, "lut-sizing", kLimit1, lut_sizing);
  run(2, "net-rate", kLimit2, net_rate_check);
  run(3, "gmi-vs-bpsk-oracle", kLimit3, gmi_oracle);
  run(4, "sw-convergence", kLimit4, sw_convergence);
  run(5, "osnr-ordering", kLimit5, osnr_ordering);
  run(6, "swing-shape", kLimit6, swing_shape);
  run(7, "constellation-penalty", kLimit7, penalty);
  run(8, "pattern-lut-averaging", kLimit8, averaging);
  run(9, "determinism", kLimit5, determinism);
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
