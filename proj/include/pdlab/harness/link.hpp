#pragma once
// The simulated back-to-back link and the predistorters trained on it.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <memory>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "pdlab/harness/config.hpp"
#include "pdlab/metrics.hpp"
#include "pdlab/predistort.hpp"
#include "pdlab/sequence.hpp"
#include "pdlab/txchain.hpp"
#include "pdlab/waveform.hpp"

namespace pdlab::harness {

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_id(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Seed for a (master seed, grid index, stream) triple.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t grid_index, std::uint64_t stream) {
  return mix64(mix64(mix64(master) ^ grid_index) ^ stream);
}

inline constexpr std::uint64_t kEvalNoiseStream = 0x6e6f697365ull;  // "noise"

/// Worker count: PDLAB_WORKERS if set, otherwise the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("PDLAB_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on a small pool. Results must be written by
/// index; the first exception (by index) is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Precompensation, RRC shaping, transmitter, matched filter and downsampling
/// for one lane at a fixed swing. Immutable after construction.
class Link {
 public:
  Link(const ExperimentConfig& cfg, std::size_t n_symbols, double swing)
      : identity_(cfg.identity_link), model_(cfg.transmitter), sps_(cfg.sps) {
    model_.swing = swing;
    if (identity_) return;
    const std::size_t n = n_symbols * static_cast<std::size_t>(sps_);
    const auto rrc = rrc_taps(cfg.rrc_beta, cfg.rrc_span, cfg.sps);
    const auto shaping = taps_spectrum(rrc, n);
    const auto precomp = LinearPrecomp::for_fir(model_.memory_fir, n, cfg.precomp_epsilon).gain();
    tx_filter_.resize(n);
    rx_filter_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      tx_filter_[i] = shaping[i] * precomp[i];
      rx_filter_[i] = std::conj(shaping[i]);
    }
  }

  const TransmitterModel& model() const noexcept { return model_; }

  std::vector<double> operator()(std::span<const double> symbols) const {
    if (identity_) return {symbols.begin(), symbols.end()};
    if (symbols.size() * static_cast<std::size_t>(sps_) != tx_filter_.size())
      fail(Errc::LaneMismatch, "lane length does not match the link");
    Waveform w{fft::filter(upsample(symbols, sps_), tx_filter_), sps_, 0.0};
    const auto out = transmit(w, model_);
    const auto y = fft::filter(out.samples, rx_filter_);
    std::vector<double> r(symbols.size());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = y[k * static_cast<std::size_t>(sps_)];
    return r;
  }

 private:
  bool identity_;
  TransmitterModel model_;
  int sps_;
  std::vector<cd> tx_filter_;
  std::vector<cd> rx_filter_;
};

/// Link wrapped as a LaneChannel, optionally adding symbol-level noise of
/// variance noise_var/2 per lane. Noise seeds depend on (seed, lane, call).
inline LaneChannel make_channel(const Link& link, double noise_var, std::uint64_t seed) {
  auto calls = std::make_shared<std::uint64_t>(0);
  return [&link, noise_var, seed, calls](std::span<const double> lane, Lane id) {
    auto rx = link(lane);
    if (noise_var > 0.0) {
      std::mt19937_64 rng(derive_seed(seed, (*calls)++, static_cast<std::uint64_t>(id)));
      std::normal_distribution<double> nd(0.0, std::sqrt(noise_var / 2.0));
      for (auto& v : rx) v += nd(rng);
    }
    return rx;
  };
}

struct TrainedPredistorter {
  PredistorterSpec spec;
  std::optional<PatternLut> pattern;
  std::optional<SequenceLut> sequence;
};

struct PredistortedFrame {
  std::array<std::vector<double>, 4> lanes;
  std::size_t clipped = 0;
};

inline PredistortedFrame apply(const TrainedPredistorter& p, const SymbolSequence& frame, const ClipRange& clip) {
  PredistortedFrame out;
  const auto views = lanes(frame.symbols);
  const auto id = p.sequence ? frame_hash(frame.symbols) : 0;
  for (std::size_t l = 0; l < 4; ++l) {
    const auto& tx = views[l].values;
    switch (p.spec.kind) {
      case PredistorterSpec::Kind::Linear:
        out.lanes[l] = tx;
        break;
      case PredistorterSpec::Kind::PatternLut: {
        auto r = apply_pattern_lut(tx, p.pattern->lanes[l], p.pattern->mu, clip);
        out.lanes[l] = std::move(r.values);
        out.clipped += r.clipped;
        break;
      }
      case PredistorterSpec::Kind::SequenceWise: {
        auto r = apply_sequence_lut(tx, kLanes[l], *p.sequence, id, clip);
        out.lanes[l] = std::move(r.values);
        out.clipped += r.clipped;
        break;
      }
    }
  }
  return out;
}

/// Trains on the frame itself: a single measurement for pattern tables, the
/// configured number of passes for the sequence-wise table.
inline TrainedPredistorter train(const PredistorterSpec& spec, const Link& link, const SymbolSequence& frame,
                                 const AmplitudeAlphabet& alphabet, double training_noise_var, std::uint64_t seed) {
  TrainedPredistorter p{spec, std::nullopt, std::nullopt};
  const auto clip = ClipRange::from_alphabet(alphabet);
  auto channel = make_channel(link, training_noise_var, seed);
  switch (spec.kind) {
    case PredistorterSpec::Kind::Linear:
      break;
    case PredistorterSpec::Kind::PatternLut: {
      PatternLut lut{spec.n, spec.mu, {}};
      for (const auto& view : lanes(frame.symbols)) {
        const auto rx = channel(view.values, view.id);
        const auto a = align(view.values, rx);
        lut.lanes.push_back(train_pattern_lut(view.values, a.rx_aligned, alphabet, spec.n));
      }
      p.pattern = std::move(lut);
      break;
    }
    case PredistorterSpec::Kind::SequenceWise: {
      auto lut = SequenceLut::zeros(frame.symbols, spec.mu);
      for (int it = 0; it < spec.iterations; ++it) lut = train_sequence_lut(frame.symbols, std::move(lut), channel, clip);
      p.sequence = std::move(lut);
      break;
    }
  }
  return p;
}

/// Noiseless received frame after per-lane alignment against the ideal lanes.
struct Reception {
  DualPol rx;
  std::size_t clipped = 0;
};

inline Reception receive(const TrainedPredistorter& p, const Link& link, const SymbolSequence& frame,
                         const ClipRange& clip) {
  const auto pd = apply(p, frame, clip);
  const auto ideal = lanes(frame.symbols);
  Lanes rx;
  for (std::size_t l = 0; l < 4; ++l) {
    auto a = align(ideal[l].values, link(pd.lanes[l]));
    rx[l] = LaneView{kLanes[l], std::move(a.rx_aligned)};
  }
  return {reassemble(rx), pd.clipped};
}

/// Adds noise of total variance `noise_var` per 2D symbol and measures GMI over both polarizations.
inline MetricReport evaluate(const Reception& r, const SymbolSequence& frame, const Constellation& c,
                             double noise_var, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto x = add_awgn(r.rx.x, noise_var, rng);
  auto y = add_awgn(r.rx.y, noise_var, rng);
  x.insert(x.end(), y.begin(), y.end());
  std::vector<std::uint32_t> labels(frame.x_labels);
  labels.insert(labels.end(), frame.y_labels.begin(), frame.y_labels.end());
  auto rep = gmi(x, c, labels);
  rep.seed = seed;
  return rep;
}

/// RMS of (rx - tx) over all four lanes.
inline double residual_rms(const DualPol& rx, const DualPol& tx) {
  double s = 0.0;
  for (std::size_t k = 0; k < tx.size(); ++k) s += std::norm(rx.x[k] - tx.x[k]) + std::norm(rx.y[k] - tx.y[k]);
  return std::sqrt(s / (4.0 * static_cast<double>(tx.size())));
}

inline double peak_amplitude(const DualPol& s) {
  double p = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k)
    p = std::max({p, std::abs(s.x[k].real()), std::abs(s.x[k].imag()), std::abs(s.y[k].real()),
                  std::abs(s.y[k].imag())});
  return p;
}

}  // namespace pdlab::harness
