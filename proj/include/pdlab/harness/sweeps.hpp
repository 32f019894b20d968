#pragma once
// Experiment runners: NGMI vs swing, NGMI vs OSNR, SW convergence and the
// constellation penalty. All randomness is derived from the master seed, the
// grid index and a per-predistorter stream, so results do not depend on the
// worker count.

#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pdlab/harness/config.hpp"
#include "pdlab/harness/link.hpp"

namespace pdlab::harness {

struct SweepRow {
  SweepVariable variable = SweepVariable::Swing;
  double value = 0.0;
  std::string predistorter;
  MetricReport report;
  std::size_t clip_count = 0;
  double wall_ms = 0.0;
};

/// First grid value at which a predistorter meets the NGMI FEC limit.
struct FecCrossing {
  std::string predistorter;
  std::optional<double> first_value;
};

struct ConvergenceRow {
  int iteration = 0;
  double residual_rms = 0.0;
  double residual_rel = 0.0;  ///< residual_rms / peak |tx|
  MetricReport report;
  std::size_t clip_count = 0;
};

struct SweepResult {
  SweepVariable variable = SweepVariable::Swing;
  std::vector<SweepRow> rows;  ///< grid-major, predistorters in config order
  std::vector<FecCrossing> fec;
  std::vector<ConvergenceRow> convergence;

  /// Rows of one predistorter, in grid order.
  std::vector<SweepRow> series(const std::string& id) const {
    std::vector<SweepRow> s;
    for (const auto& r : rows)
      if (r.predistorter == id) s.push_back(r);
    return s;
  }
};

namespace detail {

struct Setup {
  Constellation constellation;
  SymbolSequence frame;
  AmplitudeAlphabet alphabet;
  ClipRange clip;
};

inline Setup setup(const ExperimentConfig& cfg) {
  auto c = resolve_constellation(cfg);
  auto frame = generate_frame(cfg.seed, cfg.symbols, c);
  auto alphabet = amplitude_alphabet(c);
  auto clip = ClipRange::from_alphabet(alphabet);
  return {std::move(c), std::move(frame), std::move(alphabet), clip};
}

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline std::vector<FecCrossing> fec_crossings(const ExperimentConfig& cfg, const SweepResult& r) {
  std::vector<FecCrossing> out;
  for (const auto& p : cfg.predistorters) {
    FecCrossing f{p.id(), std::nullopt};
    for (const auto& row : r.series(p.id()))
      if (meets_fec_limit(row.report.ngmi)) {
        f.first_value = row.value;
        break;
      }
    out.push_back(f);
  }
  return out;
}

}  // namespace detail

/// For every swing: train each predistorter at that swing, transmit, and
/// evaluate with the transmitter SNR implied by the swing.
inline SweepResult run_swing_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto s = detail::setup(cfg);
  const std::size_t np = cfg.predistorters.size();
  SweepResult result;
  result.variable = SweepVariable::Swing;
  result.rows.resize(cfg.grid.size() * np);
  const double train_var = noise_variance(cfg.training_snr_db);
  parallel_for(result.rows.size(), [&](std::size_t t) {
    const std::size_t g = t / np, p = t % np;
    const auto t0 = std::chrono::steady_clock::now();
    const double swing = cfg.grid[g];
    const auto& spec = cfg.predistorters[p];
    const Link link(cfg, s.frame.size(), swing);
    const auto trained = train(spec, link, s.frame, s.alphabet, train_var, derive_seed(cfg.seed, g, hash_id(spec.id())));
    const auto rx = receive(trained, link, s.frame, s.clip);
    const auto rep = evaluate(rx, s.frame, s.constellation, noise_variance(cfg.tx_snr_db(swing)),
                              derive_seed(cfg.seed, g, kEvalNoiseStream));
    result.rows[t] = SweepRow{SweepVariable::Swing, swing, spec.id(), rep, rx.clipped, detail::elapsed_ms(t0)};
  });
  result.fec = detail::fec_crossings(cfg, result);
  return result;
}

/// Predistorters are trained once at the configured swing, then evaluated
/// across the OSNR grid. Noise realizations are shared between predistorters
/// at a grid point.
inline SweepResult run_osnr_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto s = detail::setup(cfg);
  const std::size_t np = cfg.predistorters.size();
  const double swing = cfg.transmitter.swing;
  const Link link(cfg, s.frame.size(), swing);
  const double train_var = noise_variance(cfg.training_snr_db);

  std::vector<Reception> received(np);
  std::vector<double> train_ms(np);
  parallel_for(np, [&](std::size_t p) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& spec = cfg.predistorters[p];
    const auto trained = train(spec, link, s.frame, s.alphabet, train_var, derive_seed(cfg.seed, 0, hash_id(spec.id())));
    received[p] = receive(trained, link, s.frame, s.clip);
    train_ms[p] = detail::elapsed_ms(t0);
  });

  const double tx_var = cfg.osnr_includes_tx_noise ? noise_variance(cfg.tx_snr_db(swing)) : 0.0;
  SweepResult result;
  result.variable = SweepVariable::Osnr;
  result.rows.resize(cfg.grid.size() * np);
  parallel_for(result.rows.size(), [&](std::size_t t) {
    const std::size_t g = t / np, p = t % np;
    const auto t0 = std::chrono::steady_clock::now();
    const double osnr = cfg.grid[g];
    const double snr = osnr_to_snr(osnr, cfg.osnr.symbol_rate, cfg.osnr.b_ref, cfg.osnr.pols);
    const auto rep = evaluate(received[p], s.frame, s.constellation, noise_variance(snr) + tx_var,
                              derive_seed(cfg.seed, g, kEvalNoiseStream));
    result.rows[t] = SweepRow{SweepVariable::Osnr, osnr, cfg.predistorters[p].id(), rep, received[p].clipped,
                              detail::elapsed_ms(t0) + (g == 0 ? train_ms[p] : 0.0)};
  });
  result.fec = detail::fec_crossings(cfg, result);
  return result;
}

/// Residual and NGMI of the sequence-wise predistorter after each training
/// pass. Residuals are measured on the noiseless link; training itself uses
/// the configured training SNR.
inline SweepResult run_sw_convergence(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto s = detail::setup(cfg);
  auto spec = PredistorterSpec::sequence_wise();
  for (const auto& p : cfg.predistorters)
    if (p.kind == PredistorterSpec::Kind::SequenceWise) spec = p;
  int last = 0;
  for (double g : cfg.grid) {
    if (g < 0 || g != std::floor(g)) fail(Errc::ConfigError, "sweep.grid: iterations must be non-negative integers");
    last = std::max(last, static_cast<int>(g));
  }

  const double swing = cfg.transmitter.swing;
  const Link link(cfg, s.frame.size(), swing);
  auto channel = make_channel(link, noise_variance(cfg.training_snr_db), derive_seed(cfg.seed, 0, hash_id(spec.id())));
  const double peak = peak_amplitude(s.frame.symbols);
  const double eval_var = noise_variance(cfg.tx_snr_db(swing));

  SweepResult result;
  result.variable = SweepVariable::Iteration;
  TrainedPredistorter tp{spec, std::nullopt, SequenceLut::zeros(s.frame.symbols, spec.mu)};
  std::size_t g = 0;
  for (int it = 0; it <= last; ++it) {
    if (g < cfg.grid.size() && static_cast<int>(cfg.grid[g]) == it) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto rx = receive(tp, link, s.frame, s.clip);
      const double res = residual_rms(rx.rx, s.frame.symbols);
      const auto rep = evaluate(rx, s.frame, s.constellation, eval_var, derive_seed(cfg.seed, g, kEvalNoiseStream));
      result.convergence.push_back(ConvergenceRow{it, res, res / peak, rep, rx.clipped});
      result.rows.push_back(SweepRow{SweepVariable::Iteration, static_cast<double>(it), spec.id(), rep, rx.clipped,
                                     detail::elapsed_ms(t0)});
      ++g;
    }
    if (it < last) tp.sequence = train_sequence_lut(s.frame.symbols, std::move(*tp.sequence), channel, s.clip);
  }
  return result;
}

/// Per-dimension tanh compression with the largest coordinate driven to
/// `drive` times the saturation level, renormalized to unit energy.
inline Constellation tanh_compressed(const Constellation& c, double drive) {
  double peak = 0.0;
  for (const auto& p : c.points()) peak = std::max({peak, std::abs(p.real()), std::abs(p.imag())});
  std::vector<cd> pts;
  pts.reserve(c.size());
  for (const auto& p : c.points())
    pts.emplace_back(std::tanh(drive * p.real() / peak), std::tanh(drive * p.imag() / peak));
  return Constellation::make(c.name() + "-tanh", std::move(pts), c.labels(), c.bits_per_symbol());
}

enum class PenaltySource { Tanh, Link };

struct PenaltyResult {
  Constellation original;
  Constellation distorted;
  PenaltyCurves curves;
};

/// Distorted constellation either from tanh compression at 0.8 vsat or from
/// the centroids received over the noiseless linear-only link, then the NGMI
/// of both under AWGN over the SNR grid.
inline PenaltyResult run_penalty(const ExperimentConfig& cfg, PenaltySource source, double drive = 0.8) {
  validate(cfg);
  auto c = resolve_constellation(cfg);
  std::optional<Constellation> distorted;
  if (source == PenaltySource::Tanh) {
    distorted = tanh_compressed(c, drive);
  } else {
    auto frame = generate_frame(cfg.seed, cfg.symbols, c);
    const Link link(cfg, frame.size(), cfg.transmitter.swing);
    const auto alphabet = amplitude_alphabet(c);
    const auto rx = receive(train(PredistorterSpec::linear(), link, frame, alphabet, 0.0, 0), link, frame,
                            ClipRange::from_alphabet(alphabet));
    std::vector<std::uint32_t> labels(frame.x_labels);
    labels.insert(labels.end(), frame.y_labels.begin(), frame.y_labels.end());
    std::vector<cd> all(rx.rx.x);
    all.insert(all.end(), rx.rx.y.begin(), rx.rx.y.end());
    distorted = to_constellation(c, extract_centroids(labels, all, c));
  }
  auto curves = constellation_penalty(c, *distorted, cfg.grid, cfg.penalty_symbols, derive_seed(cfg.seed, 0, kEvalNoiseStream));
  return {std::move(c), std::move(*distorted), std::move(curves)};
}

}  // namespace pdlab::harness
