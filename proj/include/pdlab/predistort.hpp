#pragma once
// Pattern-LUT and sequence-wise predistortion of real PAM lanes.
//
// Both predistorters learn the error e = rx - tx of each transmitted symbol,
// where rx is the received lane after delay and gain alignment, and correct
// by subtracting the learned error from the symbol before transmission.
//
//  * PatternTable keys the error on the n transmit levels centered on the
//    symbol (cyclic at the frame edges). Errors of repeated patterns are
//    accumulated as (sum, count) and averaged at lookup.
//  * SequenceLut keeps one accumulated error per frame position. It is the
//    n = N limit of the pattern table, so it is only valid for the frame it
//    was trained on, and it is refined by repeated transmit/measure passes.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pdlab/constellation.hpp"
#include "pdlab/error.hpp"
#include "pdlab/io.hpp"
#include "pdlab/sequence.hpp"
#include "pdlab/waveform.hpp"

namespace pdlab {

/// Bounds applied to predistorted amplitudes. Unbounded by default.
struct ClipRange {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  /// [min level - gap, max level + gap], gap being the smallest level spacing.
  static ClipRange from_alphabet(const AmplitudeAlphabet& a) {
    const double gap = a.size() > 1 ? a.min_gap() : 0.0;
    return {a.levels.front() - gap, a.levels.back() + gap};
  }
};

struct LanePredistortion {
  std::vector<double> values;
  std::size_t clipped = 0;
};

namespace detail {
inline void clip_into(LanePredistortion& p, const ClipRange& r) {
  for (auto& v : p.values) {
    if (v < r.lo) {
      v = r.lo;
      ++p.clipped;
    } else if (v > r.hi) {
      v = r.hi;
      ++p.clipped;
    }
  }
}
}  // namespace detail

/// Level index of every lane value. Values farther than half the minimum
/// level gap from every level are rejected.
inline std::vector<std::uint16_t> level_indices(std::span<const double> lane, const AmplitudeAlphabet& a) {
  if (a.size() == 0) fail(Errc::InvalidArgument, "empty amplitude alphabet");
  if (a.size() > std::numeric_limits<std::uint16_t>::max()) fail(Errc::InvalidArgument, "too many levels");
  const double half_gap = a.size() > 1 ? a.min_gap() / 2.0 : a.tolerance;
  std::vector<std::uint16_t> idx(lane.size());
  for (std::size_t k = 0; k < lane.size(); ++k) {
    const auto i = a.nearest(lane[k]);
    if (std::abs(lane[k] - a.levels[i]) > half_gap)
      fail(Errc::LevelQuantizationError,
           "value " + io::fmt_double(lane[k]) + " at position " + std::to_string(k) + " matches no level");
    idx[k] = static_cast<std::uint16_t>(i);
  }
  return idx;
}

struct PatternEntry {
  double error_sum = 0.0;
  std::uint64_t count = 0;

  double average() const { return count ? error_sum / static_cast<double>(count) : 0.0; }
};

/// Per-lane pattern table. Keys are the n level indices read as a base-L
/// number, most significant digit first, so map order is lexicographic
/// pattern order.
class PatternTable {
 public:
  PatternTable(int n, AmplitudeAlphabet alphabet) : n_(n), alphabet_(std::move(alphabet)) {
    if (n < 1 || n % 2 == 0) fail(Errc::EvenPatternLength, "pattern length must be odd and >= 1");
    if (alphabet_.size() < 1) fail(Errc::InvalidArgument, "empty amplitude alphabet");
    const double bits = n * std::log2(static_cast<double>(std::max<std::size_t>(alphabet_.size(), 2)));
    if (bits >= 63.0) fail(Errc::InvalidArgument, "pattern key space exceeds 63 bits");
  }

  int pattern_length() const noexcept { return n_; }
  const AmplitudeAlphabet& alphabet() const noexcept { return alphabet_; }
  const std::map<std::uint64_t, PatternEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::uint64_t encode(std::span<const std::uint16_t> pattern) const {
    std::uint64_t key = 0;
    for (auto i : pattern) {
      if (i >= alphabet_.size()) fail(Errc::InvalidArgument, "pattern index out of range");
      key = key * alphabet_.size() + i;
    }
    return key;
  }

  std::vector<std::uint16_t> decode(std::uint64_t key) const {
    std::vector<std::uint16_t> p(static_cast<std::size_t>(n_));
    for (auto it = p.rbegin(); it != p.rend(); ++it) {
      *it = static_cast<std::uint16_t>(key % alphabet_.size());
      key /= alphabet_.size();
    }
    return p;
  }

  /// Pattern key of every position of the lane, with cyclic wrap-around.
  std::vector<std::uint64_t> keys(std::span<const double> lane) const {
    const auto idx = level_indices(lane, alphabet_);
    const std::size_t N = idx.size();
    const std::size_t half = static_cast<std::size_t>(n_ / 2);
    std::vector<std::uint64_t> out(N);
    for (std::size_t k = 0; k < N; ++k) {
      std::uint64_t key = 0;
      for (std::size_t o = 0; o < static_cast<std::size_t>(n_); ++o)
        key = key * alphabet_.size() + idx[(k + N * (half + 1) - half + o) % N];
      out[k] = key;
    }
    return out;
  }

  void accumulate(std::uint64_t key, double error, std::uint64_t count = 1) {
    auto& e = entries_[key];
    e.error_sum += error;
    e.count += count;
  }

  /// Averaged error for the pattern; 0 for patterns never seen.
  double correction(std::uint64_t key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0.0 : it->second.average();
  }

 private:
  int n_;
  AmplitudeAlphabet alphabet_;
  std::map<std::uint64_t, PatternEntry> entries_;
};

/// Accumulates e = rx[k] - tx[k] under the transmit pattern centered on k.
inline PatternTable train_pattern_lut(std::span<const double> tx, std::span<const double> rx_aligned,
                                      const AmplitudeAlphabet& alphabet, int n) {
  if (tx.size() != rx_aligned.size()) fail(Errc::LaneMismatch, "tx and rx lengths differ");
  PatternTable t(n, alphabet);
  const auto keys = t.keys(tx);
  for (std::size_t k = 0; k < tx.size(); ++k) t.accumulate(keys[k], rx_aligned[k] - tx[k]);
  return t;
}

/// out[k] = tx[k] - mu * average error of the pattern at k.
inline LanePredistortion apply_pattern_lut(std::span<const double> tx, const PatternTable& t, double mu = 1.0,
                                           const ClipRange& clip = {}) {
  const auto keys = t.keys(tx);
  LanePredistortion p{std::vector<double>(tx.size()), 0};
  for (std::size_t k = 0; k < tx.size(); ++k) p.values[k] = tx[k] - mu * t.correction(keys[k]);
  detail::clip_into(p, clip);
  return p;
}

/// Pattern tables for the four lanes plus the damping used at application.
struct PatternLut {
  int n = 3;
  double mu = 1.0;
  std::vector<PatternTable> lanes;  ///< indexed by Lane
};

/// SW predistorter state: one accumulated error per lane and frame position.
struct SequenceLut {
  std::size_t N = 0;
  std::array<std::vector<double>, 4> errors;
  std::size_t iterations = 0;
  double mu = 1.0;
  std::uint64_t frame_id = 0;

  static SequenceLut zeros(const DualPol& frame, double mu = 1.0) {
    SequenceLut l;
    l.N = frame.size();
    for (auto& e : l.errors) e.assign(l.N, 0.0);
    l.mu = mu;
    l.frame_id = frame_hash(frame);
    return l;
  }
};

/// out[k] = tx[k] - errors[k] for the lane.
inline LanePredistortion apply_sequence_lut(std::span<const double> tx, Lane lane, const SequenceLut& lut,
                                            std::uint64_t frame_id, const ClipRange& clip = {}) {
  if (frame_id != lut.frame_id || tx.size() != lut.N)
    fail(Errc::FrameMismatch, "sequence LUT was trained on a different frame");
  const auto& e = lut.errors[static_cast<std::size_t>(lane)];
  LanePredistortion p{std::vector<double>(tx.size()), 0};
  for (std::size_t k = 0; k < tx.size(); ++k) p.values[k] = tx[k] - e[k];
  detail::clip_into(p, clip);
  return p;
}

/// Maps a predistorted symbol lane to the received 1 sample/symbol lane.
/// Must be deterministic for reproducible training.
using LaneChannel = std::function<std::vector<double>(std::span<const double>, Lane)>;

/// One SW training pass: apply the current table, transmit every lane through
/// `channel`, align against the ideal lane and add mu * (rx - tx) per position.
inline SequenceLut train_sequence_lut(const DualPol& frame, SequenceLut lut, const LaneChannel& channel,
                                      const ClipRange& clip = {}) {
  const auto id = frame_hash(frame);
  if (id != lut.frame_id || frame.size() != lut.N)
    fail(Errc::FrameMismatch, "sequence LUT was trained on a different frame");
  const auto views = lanes(frame);
  for (const auto& view : views) {
    const auto pd = apply_sequence_lut(view.values, view.id, lut, id, clip);
    const auto rx = channel(pd.values, view.id);
    if (rx.size() != view.values.size()) fail(Errc::AlignmentError, "channel changed the lane length");
    Alignment a;
    try {
      a = align(view.values, rx);
    } catch (const Error& e) {
      fail(Errc::AlignmentError, std::string(lane_name(view.id)) + ": " + e.what());
    }
    auto& err = lut.errors[static_cast<std::size_t>(view.id)];
    for (std::size_t k = 0; k < err.size(); ++k) err[k] += lut.mu * (a.rx_aligned[k] - view.values[k]);
  }
  ++lut.iterations;
  return lut;
}

inline std::array<std::size_t, 4> predistorter_storage(const PatternLut& lut) {
  std::array<std::size_t, 4> s{};
  for (std::size_t i = 0; i < lut.lanes.size() && i < 4; ++i) s[i] = lut.lanes[i].size();
  return s;
}

inline std::array<std::size_t, 4> predistorter_storage(const SequenceLut& lut) {
  return {lut.N, lut.N, lut.N, lut.N};
}

// Pattern LUT text format:
//   # comment lines
//   n=<odd>
//   mu=<real>
//   levels=<l0>,<l1>,...
//   [XI]
//   <i0>,<i1>,...,<in-1>:<error_sum>:<count>     (sorted by pattern)
//   [XQ] ...
inline void write_pattern_lut(std::ostream& out, const PatternLut& lut) {
  out << "# pdlab pattern-lut\n";
  out << "n=" << lut.n << "\nmu=" << io::fmt_double(lut.mu) << "\nlevels=";
  const auto& levels = lut.lanes.at(0).alphabet().levels;
  for (std::size_t i = 0; i < levels.size(); ++i) out << (i ? "," : "") << io::fmt_double(levels[i]);
  out << "\n";
  for (std::size_t l = 0; l < lut.lanes.size(); ++l) {
    out << "[" << lane_name(kLanes[l]) << "]\n";
    const auto& t = lut.lanes[l];
    for (const auto& [key, e] : t.entries()) {
      const auto p = t.decode(key);
      for (std::size_t i = 0; i < p.size(); ++i) out << (i ? "," : "") << p[i];
      out << ":" << io::fmt_double(e.error_sum) << ":" << e.count << "\n";
    }
  }
}

inline PatternLut read_pattern_lut(std::istream& in) {
  PatternLut lut;
  AmplitudeAlphabet alphabet;
  bool have_levels = false;
  int lane = -1;
  std::string line;
  std::size_t lineno = 0;
  auto bad = [&](const std::string& why) { fail(Errc::ParseError, "line " + std::to_string(lineno) + ": " + why); };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("n=", 0) == 0) {
      lut.n = std::stoi(line.substr(2));
    } else if (line.rfind("mu=", 0) == 0) {
      lut.mu = std::stod(line.substr(3));
    } else if (line.rfind("levels=", 0) == 0) {
      std::istringstream ss(line.substr(7));
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        double v;
        if (!detail::parse_double(tok, v)) bad("bad level");
        alphabet.levels.push_back(v);
      }
      have_levels = true;
    } else if (line.front() == '[') {
      if (!have_levels) bad("lane section before levels");
      ++lane;
      if (lane >= 4 || line != std::string("[") + lane_name(kLanes[static_cast<std::size_t>(lane)]) + "]")
        bad("unexpected lane header " + line);
      lut.lanes.emplace_back(lut.n, alphabet);
    } else {
      if (lane < 0) bad("entry outside a lane section");
      const auto c1 = line.find(':');
      const auto c2 = line.find(':', c1 == std::string::npos ? c1 : c1 + 1);
      if (c2 == std::string::npos) bad("expected pattern:error_sum:count");
      std::vector<std::uint16_t> pattern;
      std::istringstream ss(line.substr(0, c1));
      std::string tok;
      while (std::getline(ss, tok, ',')) pattern.push_back(static_cast<std::uint16_t>(std::stoul(tok)));
      if (pattern.size() != static_cast<std::size_t>(lut.n)) bad("pattern length differs from n");
      double sum;
      if (!detail::parse_double(line.substr(c1 + 1, c2 - c1 - 1), sum)) bad("bad error sum");
      const auto count = std::stoull(line.substr(c2 + 1));
      if (count == 0) bad("zero count");
      auto& t = lut.lanes.back();
      t.accumulate(t.encode(pattern), sum, count);
    }
  }
  if (lut.lanes.size() != 4) fail(Errc::ParseError, "pattern LUT must hold four lanes");
  return lut;
}

/// `<path>`: 4*N float64 little-endian errors, lane-major. `<path>.meta`: frame
/// hash, iterations, mu and N.
inline void save_sequence_lut(const std::filesystem::path& path, const SequenceLut& lut) {
  std::string blob;
  for (const auto& e : lut.errors) io::append_f64_le(blob, e);
  io::write_file_atomic(path, blob);
  auto meta = path;
  meta += ".meta";
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(lut.frame_id));
  io::write_file_atomic(meta, io::format_sidecar({{"frame_hash", hash},
                                                  {"iterations", std::to_string(lut.iterations)},
                                                  {"mu", io::fmt_double(lut.mu)},
                                                  {"N", std::to_string(lut.N)}}));
}

inline SequenceLut load_sequence_lut(const std::filesystem::path& path) {
  auto meta_path = path;
  meta_path += ".meta";
  const auto meta = io::parse_sidecar(io::read_file(meta_path));
  SequenceLut lut;
  lut.N = std::stoull(io::require(meta, "N"));
  lut.iterations = std::stoull(io::require(meta, "iterations"));
  lut.mu = std::stod(io::require(meta, "mu"));
  lut.frame_id = std::stoull(io::require(meta, "frame_hash"), nullptr, 16);
  const auto v = io::parse_f64_le(io::read_file(path));
  if (v.size() != 4 * lut.N) fail(Errc::ParseError, "sequence LUT payload does not hold 4*N values");
  for (std::size_t l = 0; l < 4; ++l)
    lut.errors[l].assign(v.begin() + static_cast<std::ptrdiff_t>(l * lut.N),
                         v.begin() + static_cast<std::ptrdiff_t>((l + 1) * lut.N));
  return lut;
}

}  // namespace pdlab
