#pragma once
// Linear DSP around the predistorters: RRC shaping, matched filtering,
// regularized zero-forcing precompensation and cyclic alignment. All
// filtering is cyclic over the frame.

#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "pdlab/error.hpp"
#include "pdlab/fft.hpp"

namespace pdlab {

using cd = std::complex<double>;

struct Waveform {
  std::vector<double> samples;
  int sps = 4;
  double symbol_rate = 0.0;  ///< baud, metadata only
};

struct RrcFilter {
  double beta = 0.01;
  int span = 128;  ///< symbols
  int sps = 4;
  std::vector<double> taps;  ///< span*sps + 1 taps, peak in the middle

  std::size_t center() const noexcept { return taps.size() / 2; }
};

/// Root-raised-cosine taps with unit energy. t = ±1/(4β) uses the analytic limit.
inline RrcFilter rrc_taps(double beta, int span, int sps) {
  if (!(beta > 0.0) || beta > 1.0) fail(Errc::BadRollOff, "roll-off must be in (0, 1]");
  if (sps < 2 || span < 2 || span % 2 != 0) fail(Errc::InvalidArgument, "span must be even and sps >= 2");
  using std::numbers::pi;
  RrcFilter f{beta, span, sps, std::vector<double>(static_cast<std::size_t>(span * sps + 1))};
  const double half = span * sps / 2.0;
  for (std::size_t i = 0; i < f.taps.size(); ++i) {
    const double t = (static_cast<double>(i) - half) / sps;
    const double x = 4.0 * beta * t;
    double h;
    if (std::abs(t) < 1e-12) {
      h = 1.0 - beta + 4.0 * beta / pi;
    } else if (std::abs(1.0 - x * x) < 1e-9) {
      h = beta / std::sqrt(2.0) *
          ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
    } else {
      h = (std::sin(pi * t * (1.0 - beta)) + x * std::cos(pi * t * (1.0 + beta))) / (pi * t * (1.0 - x * x));
    }
    f.taps[i] = h;
  }
  const double e = std::sqrt(std::inner_product(f.taps.begin(), f.taps.end(), f.taps.begin(), 0.0));
  for (auto& v : f.taps) v /= e;
  return f;
}

/// Frequency response of the taps placed zero-phase (center tap at index 0)
/// on a cyclic grid of `n` samples. Taps longer than `n` wrap around.
inline std::vector<cd> taps_spectrum(const RrcFilter& f, std::size_t n) {
  std::vector<double> h(n, 0.0);
  const auto c = static_cast<std::ptrdiff_t>(f.center());
  const auto nn = static_cast<std::ptrdiff_t>(n);
  for (std::size_t j = 0; j < f.taps.size(); ++j) {
    auto idx = (static_cast<std::ptrdiff_t>(j) - c) % nn;
    if (idx < 0) idx += nn;
    h[static_cast<std::size_t>(idx)] += f.taps[j];
  }
  return fft::forward(std::span<const double>(h));
}

/// Frequency response of a causal FIR (tap 0 at index 0) on a cyclic grid.
inline std::vector<cd> fir_spectrum(std::span<const double> taps, std::size_t n) {
  std::vector<double> h(n, 0.0);
  for (std::size_t j = 0; j < taps.size(); ++j) h[j % n] += taps[j];
  return fft::forward(std::span<const double>(h));
}

inline std::vector<double> upsample(std::span<const double> symbols, int sps) {
  std::vector<double> up(symbols.size() * static_cast<std::size_t>(sps), 0.0);
  for (std::size_t k = 0; k < symbols.size(); ++k) up[k * static_cast<std::size_t>(sps)] = symbols[k];
  return up;
}

/// Zero-insertion upsampling followed by cyclic RRC filtering. Symbol k sits at sample k*sps.
inline Waveform shape(std::span<const double> symbols, const RrcFilter& f) {
  const auto up = upsample(symbols, f.sps);
  const auto H = taps_spectrum(f, up.size());
  return Waveform{fft::filter(up, H), f.sps, 0.0};
}

/// Cyclic matched filtering, then every sps-th sample starting at `delay`.
/// With the zero-phase convention of shape() the correct delay is 0.
inline std::vector<double> matched_downsample(const Waveform& w, const RrcFilter& f, std::size_t delay) {
  if (w.samples.empty() || delay >= w.samples.size()) fail(Errc::InvalidArgument, "delay outside waveform");
  auto H = taps_spectrum(f, w.samples.size());
  for (auto& v : H) v = std::conj(v);
  const auto y = fft::filter(w.samples, H);
  const auto sps = static_cast<std::size_t>(f.sps);
  std::vector<double> out(w.samples.size() / sps);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = y[(delay + k * sps) % y.size()];
  return out;
}

/// Regularized zero-forcing inverse of a transmitter lowpass: conj(H) / (|H|^2 + epsilon).
struct LinearPrecomp {
  std::vector<cd> channel_response;
  double epsilon = 0.0;

  /// `rel_epsilon` is relative to the peak |H|^2.
  static LinearPrecomp for_fir(std::span<const double> fir, std::size_t n, double rel_epsilon = 1e-4) {
    LinearPrecomp p{fir_spectrum(fir, n), 0.0};
    double peak = 0.0;
    for (const auto& h : p.channel_response) peak = std::max(peak, std::norm(h));
    p.epsilon = rel_epsilon * peak;
    return p;
  }

  std::vector<cd> gain() const {
    std::vector<cd> g(channel_response.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double den = std::norm(channel_response[i]) + epsilon;
      g[i] = den > 0.0 ? std::conj(channel_response[i]) / den : cd{0.0, 0.0};
    }
    return g;
  }
};

inline Waveform apply_precomp(const Waveform& w, const LinearPrecomp& p) {
  if (p.channel_response.size() != w.samples.size())
    fail(Errc::SpectrumMismatch, "channel response has " + std::to_string(p.channel_response.size()) +
                                     " bins, waveform has " + std::to_string(w.samples.size()) + " samples");
  return Waveform{fft::filter(w.samples, p.gain()), w.sps, w.symbol_rate};
}

struct Alignment {
  std::size_t delay = 0;
  double gain = 1.0;
  std::vector<double> rx_aligned;
};

/// Cyclic delay at the cross-correlation peak, then a least-squares real gain.
/// rx_aligned[k] = rx[(k + delay) mod N] / gain.
inline Alignment align(std::span<const double> tx, std::span<const double> rx) {
  if (tx.size() != rx.size() || tx.empty()) fail(Errc::LaneMismatch, "align needs equal, non-empty lengths");
  const double etx = std::inner_product(tx.begin(), tx.end(), tx.begin(), 0.0);
  const double erx = std::inner_product(rx.begin(), rx.end(), rx.begin(), 0.0);
  if (!(etx > 0.0) || !(erx > 0.0)) fail(Errc::ZeroSignal, "alignment input has zero energy");
  const std::size_t n = tx.size();
  auto T = fft::forward(tx);
  const auto R = fft::forward(rx);
  for (std::size_t i = 0; i < n; ++i) T[i] = std::conj(T[i]) * R[i];
  const auto corr = fft::inverse_real(T);
  std::size_t delay = 0;
  for (std::size_t d = 1; d < n; ++d)
    if (corr[d] > corr[delay]) delay = d;

  Alignment a;
  a.delay = delay;
  a.rx_aligned.resize(n);
  double num = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    a.rx_aligned[k] = rx[(k + delay) % n];
    num += tx[k] * a.rx_aligned[k];
  }
  a.gain = num / etx;
  if (!(a.gain > 0.0) || !std::isfinite(a.gain)) fail(Errc::AlignmentError, "no positive correlation peak");
  for (auto& v : a.rx_aligned) v /= a.gain;
  return a;
}

}  // namespace pdlab
