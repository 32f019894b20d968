#pragma once
// Parametric transmitter (DAC + driver + MZM stand-in) and AWGN noise loading.
//
// The transmitter is a Wiener system per lane: swing scaling, optional DAC
// quantization, a short FIR memory, then v -> vsat*tanh(v/vsat).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "pdlab/error.hpp"
#include "pdlab/sequence.hpp"
#include "pdlab/waveform.hpp"

namespace pdlab {

struct TransmitterModel {
  double swing = 0.4;                         ///< peak drive g, volts
  std::vector<double> memory_fir{0.7, 0.2, 0.1};  ///< unit DC gain
  double vsat = 0.5;                          ///< volts; infinity disables saturation
  unsigned quant_bits = 0;                    ///< 0 = no quantization
  std::optional<double> clip;                 ///< quantizer full scale, volts; defaults to swing

  void validate() const {
    if (!(swing > 0.0)) fail(Errc::InvalidArgument, "swing must be positive");
    if (!(vsat > 0.0)) fail(Errc::InvalidArgument, "vsat must be positive");
    if (memory_fir.empty()) fail(Errc::InvalidArgument, "memory_fir is empty");
    double s = 0.0;
    for (double t : memory_fir) s += t;
    if (std::abs(s - 1.0) > 1e-12) fail(Errc::InvalidArgument, "memory_fir must sum to 1");
    if (quant_bits > 24) fail(Errc::InvalidArgument, "quant_bits above 24 is not supported");
    if (clip && !(*clip > 0.0)) fail(Errc::InvalidArgument, "clip must be positive");
  }

  double full_scale() const { return clip.value_or(swing); }
};

inline std::vector<double> cyclic_fir(std::span<const double> x, std::span<const double> taps) {
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t j = 0; j < taps.size(); ++j) {
    const double t = taps[j];
    if (t == 0.0) continue;
    const std::size_t shift = j % n;
    for (std::size_t i = 0; i < n; ++i) y[i] += t * x[(i + n - shift) % n];
  }
  return y;
}

/// Runs the lane through the transmitter and returns it in the input's units:
/// out = sat(fir(q(g * w / peak))) * peak / g. Bounded by vsat * peak / g.
inline Waveform transmit(const Waveform& w, const TransmitterModel& model) {
  model.validate();
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  Waveform out{std::vector<double>(w.samples.size(), 0.0), w.sps, w.symbol_rate};
  if (peak == 0.0) return out;

  const double g = model.swing;
  std::vector<double> v(w.samples.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = w.samples[i] * (g / peak);

  if (model.quant_bits > 0) {
    const double fs = model.full_scale();
    const double step = 2.0 * fs / (std::ldexp(1.0, static_cast<int>(model.quant_bits)) - 1.0);
    for (auto& s : v) {
      const double c = std::clamp(s, -fs, fs);
      s = -fs + step * std::round((c + fs) / step);
    }
  }

  v = cyclic_fir(v, model.memory_fir);

  const double vsat = model.vsat;
  const double back = peak / g;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double sat = std::isfinite(vsat) ? vsat * std::tanh(v[i] / vsat) : v[i];
    out.samples[i] = sat * back;
  }
  return out;
}

inline double osnr_to_snr(double osnr_db, double symbol_rate, double b_ref, double pols) {
  if (!(symbol_rate > 0.0) || !(b_ref > 0.0) || !(pols > 0.0))
    fail(Errc::InvalidArgument, "osnr_to_snr needs positive rate, bandwidth and polarization count");
  return osnr_db + 10.0 * std::log10(2.0 * b_ref / (pols * symbol_rate));
}

struct OsnrSpec {
  double osnr_db = 30.0;
  double symbol_rate = 48.8e9;
  double b_ref = 12.5e9;
  double pols = 2.0;
};

/// Exactly one of `snr_db` and `osnr` must be set.
struct NoiseConfig {
  std::optional<double> snr_db;
  std::optional<OsnrSpec> osnr;
  std::uint64_t seed = 0;

  static NoiseConfig from_snr(double snr_db, std::uint64_t seed) { return {snr_db, std::nullopt, seed}; }
  static NoiseConfig from_osnr(OsnrSpec o, std::uint64_t seed) { return {std::nullopt, o, seed}; }
  static NoiseConfig noiseless() { return from_snr(std::numeric_limits<double>::infinity(), 0); }

  double resolved_snr_db() const {
    if (snr_db.has_value() == osnr.has_value())
      fail(Errc::InvalidArgument, "noise config needs exactly one of snr_db / osnr_db");
    if (snr_db) return *snr_db;
    return osnr_to_snr(osnr->osnr_db, osnr->symbol_rate, osnr->b_ref, osnr->pols);
  }
};

/// Total noise variance per 2D symbol for unit signal power; +inf dB -> 0.
inline double noise_variance(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return std::pow(10.0, -snr_db / 10.0);
}

/// Adds circularly symmetric Gaussian noise of total variance `variance` per symbol.
inline std::vector<cd> add_awgn(std::span<const cd> symbols, double variance, std::mt19937_64& rng) {
  std::vector<cd> out(symbols.begin(), symbols.end());
  if (variance <= 0.0) return out;
  std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
  for (auto& s : out) {
    const double re = nd(rng);
    const double im = nd(rng);
    s += cd{re, im};
  }
  return out;
}

/// Noise for both polarizations from one seeded stream (X first, then Y).
inline DualPol add_awgn(const DualPol& s, const NoiseConfig& cfg) {
  const double var = noise_variance(cfg.resolved_snr_db());
  std::mt19937_64 rng(cfg.seed);
  return DualPol{add_awgn(s.x, var, rng), add_awgn(s.y, var, rng)};
}

}  // namespace pdlab
