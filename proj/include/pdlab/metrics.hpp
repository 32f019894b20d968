#pragma once
// Receiver-side metrics: data-aided SNR, GMI/NGMI with a Gaussian auxiliary
// channel, genie-aided centroids of a distorted constellation, and the
// AWGN penalty between two constellations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pdlab/constellation.hpp"
#include "pdlab/error.hpp"
#include "pdlab/txchain.hpp"

namespace pdlab {

inline constexpr double kFecNgmiLimit = 0.85;

inline bool meets_fec_limit(double ngmi, double limit = kFecNgmiLimit) { return ngmi >= limit; }

struct MetricReport {
  double snr_db = 0.0;
  double gmi = 0.0;
  double ngmi = 0.0;
  unsigned m = 0;
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
};

/// "inf" for the noiseless flag, shortest round-trippable decimal otherwise.
inline std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// `snr_db,gmi,ngmi,m,sigma2,seed`
inline std::string to_csv_row(const MetricReport& r) {
  return format_metric(r.snr_db) + "," + format_metric(r.gmi) + "," + format_metric(r.ngmi) + "," +
         std::to_string(r.m) + "," + format_metric(r.sigma2) + "," + std::to_string(r.seed);
}

/// 10 log10(E|x|^2 / E|y - x|^2); +inf when the error power is zero.
inline double estimate_snr(std::span<const cd> tx, std::span<const cd> rx) {
  if (tx.size() != rx.size() || tx.empty()) fail(Errc::InvalidArgument, "estimate_snr needs equal, non-empty inputs");
  double ps = 0.0, pe = 0.0;
  for (std::size_t k = 0; k < tx.size(); ++k) {
    ps += std::norm(tx[k]);
    pe += std::norm(rx[k] - tx[k]);
  }
  if (pe == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ps / pe);
}

/// GMI of a bit-metric decoder over the memoryless Gaussian auxiliary channel
/// q(y|x) = exp(-|y - x|^2 / sigma2):
///
///   gmi = m - 1/N sum_k sum_i log2( sum_x q(y_k|x) / sum_{x: b_i(x) = b_ki} q(y_k|x) )
///
/// sigma2 defaults to the mean squared error to the transmitted points. The
/// estimate is clamped to [0, m]; the GMI maximizes over the decoder scaling
/// and the zero scaling already achieves 0.
inline MetricReport gmi(std::span<const cd> rx, const Constellation& c, std::span<const std::uint32_t> tx_labels,
                        std::optional<double> sigma2 = std::nullopt) {
  if (rx.size() != tx_labels.size() || rx.empty()) fail(Errc::InvalidArgument, "gmi needs one label per symbol");
  const unsigned m = c.bits_per_symbol();
  const std::size_t M = c.size();
  const auto& pts = c.points();
  const auto& labels = c.labels();

  std::vector<cd> tx(rx.size());
  for (std::size_t k = 0; k < rx.size(); ++k) tx[k] = c.point_for_label(tx_labels[k]);

  MetricReport r;
  r.m = m;
  r.snr_db = estimate_snr(tx, rx);
  double s2;
  if (sigma2) {
    if (!(*sigma2 > 0.0)) fail(Errc::BadNoiseVariance, "sigma2 must be positive");
    s2 = *sigma2;
  } else {
    double e = 0.0;
    for (std::size_t k = 0; k < rx.size(); ++k) e += std::norm(rx[k] - tx[k]);
    s2 = e / static_cast<double>(rx.size());
    if (s2 == 0.0) {
      r.gmi = m;
      r.ngmi = 1.0;
      r.sigma2 = 0.0;
      return r;
    }
  }
  r.sigma2 = s2;

  std::vector<double> d(M), w(M);
  double loss = 0.0;  // nats
  for (std::size_t k = 0; k < rx.size(); ++k) {
    const cd y = rx[k];
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < M; ++j) {
      d[j] = -std::norm(y - pts[j]) / s2;
      mx = std::max(mx, d[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < M; ++j) total += (w[j] = std::exp(d[j] - mx));
    const std::uint32_t b = tx_labels[k];
    for (unsigned i = 0; i < m; ++i) {
      const std::uint32_t mask = 1u << (m - 1 - i);
      const std::uint32_t want = b & mask;
      double num = 0.0;
      for (std::size_t j = 0; j < M; ++j)
        if ((labels[j] & mask) == want) num += w[j];
      if (num > 1e-200) {
        loss += std::log(total / num);
        continue;
      }
      // Subset far from y: redo the log-sum-exp with the subset's own maximum.
      double smx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < M; ++j)
        if ((labels[j] & mask) == want) smx = std::max(smx, d[j]);
      double s = 0.0;
      for (std::size_t j = 0; j < M; ++j)
        if ((labels[j] & mask) == want) s += std::exp(d[j] - smx);
      loss += (mx + std::log(total)) - (smx + std::log(s));
    }
  }
  const double g = m - loss / std::log(2.0) / static_cast<double>(rx.size());
  r.gmi = std::clamp(g, 0.0, static_cast<double>(m));
  r.ngmi = r.gmi / m;
  return r;
}

/// Mean received symbol per transmitted constellation point (indexed like c.points()).
struct DistortedConstellation {
  std::vector<cd> centroids;
  std::vector<std::size_t> counts;
};

inline DistortedConstellation extract_centroids(std::span<const std::uint32_t> tx_labels, std::span<const cd> rx,
                                                const Constellation& c) {
  if (tx_labels.size() != rx.size()) fail(Errc::InvalidArgument, "one label per received symbol required");
  DistortedConstellation d{std::vector<cd>(c.size()), std::vector<std::size_t>(c.size(), 0)};
  for (std::size_t k = 0; k < rx.size(); ++k) {
    const auto j = c.index_of_label(tx_labels[k]);
    d.centroids[j] += rx[k];
    ++d.counts[j];
  }
  std::string missing;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (d.counts[j] == 0) {
      missing += (missing.empty() ? "" : " ") + Constellation::label_string(c.labels()[j], c.bits_per_symbol());
      continue;
    }
    d.centroids[j] /= static_cast<double>(d.counts[j]);
  }
  if (!missing.empty()) fail(Errc::MissingPoint, "never transmitted: " + missing);
  return d;
}

/// Centroids as a unit-energy constellation carrying the original labels.
inline Constellation to_constellation(const Constellation& original, const DistortedConstellation& d) {
  return Constellation::make(original.name() + "-distorted", d.centroids, original.labels(),
                             original.bits_per_symbol());
}

struct PenaltyCurves {
  std::vector<double> snr_db;
  std::vector<double> ngmi_original;
  std::vector<double> ngmi_distorted;
  double max_gap = 0.0;         ///< max over the grid of original - distorted
  double max_gap_snr_db = 0.0;

  double gap(std::size_t i) const { return ngmi_original[i] - ngmi_distorted[i]; }
};

/// Monte Carlo NGMI of both constellations under AWGN. Both use the same
/// label sequence and the same unit noise realization, scaled per grid point.
inline PenaltyCurves constellation_penalty(const Constellation& original, const Constellation& distorted,
                                           std::span<const double> snr_grid, std::size_t n_symbols,
                                           std::uint64_t seed) {
  if (original.size() != distorted.size() || original.labels() != distorted.labels())
    fail(Errc::InvalidArgument, "penalty needs two constellations with the same labels");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(original.size() - 1));
  std::vector<std::uint32_t> labels(n_symbols);
  for (auto& l : labels) l = pick(rng);
  const std::vector<cd> zeros(n_symbols);
  const auto unit_noise = add_awgn(zeros, 1.0, rng);

  PenaltyCurves pc;
  pc.max_gap = -std::numeric_limits<double>::infinity();
  std::vector<cd> y(n_symbols);
  for (double snr : snr_grid) {
    const double sd = std::sqrt(noise_variance(snr));
    auto eval = [&](const Constellation& c) {
      for (std::size_t k = 0; k < n_symbols; ++k) y[k] = c.point_for_label(labels[k]) + sd * unit_noise[k];
      return gmi(y, c, labels).ngmi;
    };
    pc.snr_db.push_back(snr);
    pc.ngmi_original.push_back(eval(original));
    pc.ngmi_distorted.push_back(eval(distorted));
    const double g = pc.ngmi_original.back() - pc.ngmi_distorted.back();
    if (g > pc.max_gap) {
      pc.max_gap = g;
      pc.max_gap_snr_db = snr;
    }
  }
  return pc;
}

/// Net bit rate rs * m * pols * code_rate.
inline double net_rate(double symbol_rate, double m, double pols, double code_rate) {
  if (!(symbol_rate > 0.0) || !(m > 0.0) || !(pols > 0.0) || !(code_rate > 0.0) || code_rate > 1.0)
    fail(Errc::InvalidArgument, "net_rate needs positive inputs and code_rate in (0, 1]");
  return symbol_rate * m * pols * code_rate;
}

}  // namespace pdlab
