#pragma once
// Deterministic PRBS frames and the four-lane real view (XI, XQ, YI, YQ).

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pdlab/constellation.hpp"
#include "pdlab/io.hpp"

namespace pdlab {

/// Fibonacci LFSR for PRBS23, polynomial x^23 + x^18 + 1 (period 2^23 - 1).
///
/// The state is 1 + (seed mod (2^23 - 1)), so every seed gives a nonzero
/// register. Each step shifts left and feeds back bit22 ^ bit17; the fed-back
/// bit is the output.
class Prbs23 {
 public:
  static constexpr std::uint32_t kMask = (1u << 23) - 1;
  static constexpr std::uint64_t kPeriod = kMask;

  explicit Prbs23(std::uint64_t seed)
      : state_(static_cast<std::uint32_t>(1 + seed % kPeriod)) {}

  unsigned next() noexcept {
    const std::uint32_t b = ((state_ >> 22) ^ (state_ >> 17)) & 1u;
    state_ = ((state_ << 1) | b) & kMask;
    return b;
  }

  std::uint32_t state() const noexcept { return state_; }

 private:
  std::uint32_t state_;
};

enum class Lane : std::uint8_t { XI = 0, XQ = 1, YI = 2, YQ = 3 };

inline constexpr std::array<Lane, 4> kLanes{Lane::XI, Lane::XQ, Lane::YI, Lane::YQ};

constexpr const char* lane_name(Lane l) {
  switch (l) {
    case Lane::XI: return "XI";
    case Lane::XQ: return "XQ";
    case Lane::YI: return "YI";
    case Lane::YQ: return "YQ";
  }
  return "?";
}

/// Symbols of both polarizations.
struct DualPol {
  std::vector<cd> x;
  std::vector<cd> y;

  std::size_t size() const noexcept { return x.size(); }
  bool operator==(const DualPol&) const = default;
};

struct LaneView {
  Lane id;
  std::vector<double> values;
};

using Lanes = std::array<LaneView, 4>;

struct SymbolSequence {
  DualPol symbols;
  std::vector<std::uint32_t> x_labels;
  std::vector<std::uint32_t> y_labels;
  /// 2*m*N source bits in draw order: X label bits then Y label bits per symbol, MSB first.
  std::vector<std::uint8_t> bits;
  std::uint64_t seed = 0;
  std::string constellation_name;

  std::size_t size() const noexcept { return symbols.size(); }
};

inline SymbolSequence generate_frame(std::uint64_t seed, std::size_t n_symbols, const Constellation& c) {
  if (n_symbols < 1) fail(Errc::InvalidArgument, "frame needs at least one symbol");
  const unsigned m = c.bits_per_symbol();
  SymbolSequence s;
  s.seed = seed;
  s.constellation_name = c.name();
  s.bits.reserve(2 * m * n_symbols);
  s.symbols.x.reserve(n_symbols);
  s.symbols.y.reserve(n_symbols);
  s.x_labels.reserve(n_symbols);
  s.y_labels.reserve(n_symbols);
  Prbs23 prbs(seed);
  auto draw = [&] {
    std::uint32_t label = 0;
    for (unsigned i = 0; i < m; ++i) {
      const unsigned b = prbs.next();
      s.bits.push_back(static_cast<std::uint8_t>(b));
      label = (label << 1) | b;
    }
    return label;
  };
  for (std::size_t k = 0; k < n_symbols; ++k) {
    const auto lx = draw();
    const auto ly = draw();
    s.x_labels.push_back(lx);
    s.y_labels.push_back(ly);
    s.symbols.x.push_back(c.point_for_label(lx));
    s.symbols.y.push_back(c.point_for_label(ly));
  }
  return s;
}

inline Lanes lanes(const DualPol& s) {
  Lanes out{LaneView{Lane::XI, {}}, LaneView{Lane::XQ, {}}, LaneView{Lane::YI, {}}, LaneView{Lane::YQ, {}}};
  for (auto& l : out) l.values.reserve(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    out[0].values.push_back(s.x[k].real());
    out[1].values.push_back(s.x[k].imag());
    out[2].values.push_back(s.y[k].real());
    out[3].values.push_back(s.y[k].imag());
  }
  return out;
}

/// Inverse of lanes(). Views may come in any order but each lane id exactly once.
inline DualPol reassemble(std::span<const LaneView> views) {
  if (views.size() != 4) fail(Errc::LaneMismatch, "need exactly four lanes");
  std::array<const std::vector<double>*, 4> by_id{};
  for (const auto& v : views) {
    auto& slot = by_id[static_cast<std::size_t>(v.id)];
    if (slot) fail(Errc::LaneMismatch, std::string("lane ") + lane_name(v.id) + " given twice");
    slot = &v.values;
  }
  const std::size_t n = by_id[0]->size();
  for (const auto* p : by_id)
    if (p->size() != n) fail(Errc::LaneMismatch, "lanes have different lengths");
  DualPol s;
  s.x.resize(n);
  s.y.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.x[k] = {(*by_id[0])[k], (*by_id[1])[k]};
    s.y[k] = {(*by_id[2])[k], (*by_id[3])[k]};
  }
  return s;
}

/// FNV-1a over the IEEE-754 bit patterns of the lanes, lane-major.
inline std::uint64_t frame_hash(const DualPol& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](double v) {
    auto u = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (u >> (8 * i)) & 0xFFu;
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& l : lanes(s))
    for (double v : l.values) mix(v);
  return h;
}

struct FrameFile {
  DualPol symbols;
  std::uint64_t seed = 0;
  std::string constellation_name;
};

/// `<path>` receives 4*N little-endian float64 values (XI, XQ, YI, YQ lanes in
/// turn); `<path>.meta` receives seed, N and the constellation name.
inline void save_frame(const std::filesystem::path& path, const SymbolSequence& s) {
  std::string blob;
  for (const auto& l : lanes(s.symbols)) io::append_f64_le(blob, l.values);
  io::write_file_atomic(path, blob);
  auto meta = path;
  meta += ".meta";
  io::write_file_atomic(meta, io::format_sidecar({{"seed", std::to_string(s.seed)},
                                                  {"N", std::to_string(s.size())},
                                                  {"constellation", s.constellation_name},
                                                  {"layout", "f64le lane-major XI,XQ,YI,YQ"}}));
}

inline FrameFile load_frame(const std::filesystem::path& path) {
  auto meta_path = path;
  meta_path += ".meta";
  const auto meta = io::parse_sidecar(io::read_file(meta_path));
  const auto n = static_cast<std::size_t>(std::stoull(io::require(meta, "N")));
  const auto values = io::parse_f64_le(io::read_file(path));
  if (values.size() != 4 * n) fail(Errc::LaneMismatch, "frame payload does not hold 4*N values");
  Lanes ls;
  for (std::size_t i = 0; i < 4; ++i)
    ls[i] = LaneView{kLanes[i], std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(i * n),
                                                    values.begin() + static_cast<std::ptrdiff_t>((i + 1) * n))};
  FrameFile f;
  f.symbols = reassemble(ls);
  f.seed = std::stoull(io::require(meta, "seed"));
  f.constellation_name = io::require(meta, "constellation");
  return f;
}

}  // namespace pdlab
