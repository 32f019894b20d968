#pragma once
// Modulation formats: builtin square/cross QAM, the `bits,I,Q` text format,
// and the per-dimension amplitude alphabet that sizes pattern LUTs.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pdlab/error.hpp"

namespace pdlab {

using cd = std::complex<double>;

/// Default merge radius for exact (generated or file) constellations.
inline constexpr double kExactAlphabetTol = 1e-6;
/// Looser merge radius for centroids measured from a distorted channel.
inline constexpr double kMeasuredAlphabetTol = 1e-3;

/// Immutable, unit-average-energy constellation with m-bit labels.
///
/// Labels are stored as integers whose bit m-1 is the first character of the
/// textual label. Every label value in [0, 2^m) is present exactly once.
class Constellation {
 public:
  /// Validates and normalizes. `labels` must be a permutation of [0, 2^m).
  static Constellation make(std::string name, std::vector<cd> points,
                            std::vector<std::uint32_t> labels, unsigned m) {
    if (points.empty() || points.size() != labels.size())
      fail(Errc::BadCardinality, "point and label counts differ or are empty");
    if (m >= 32 || (std::size_t{1} << m) != points.size())
      fail(Errc::BadCardinality, "point count " + std::to_string(points.size()) +
                                     " is not 2^" + std::to_string(m));
    std::vector<int> index(points.size(), -1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= points.size()) fail(Errc::BadLabel, "label out of range");
      if (index[labels[i]] >= 0)
        fail(Errc::DuplicateLabel, "label " + label_string(labels[i], m) + " repeated");
      index[labels[i]] = static_cast<int>(i);
    }
    double energy = 0.0;
    for (const auto& p : points) energy += std::norm(p);
    energy /= static_cast<double>(points.size());
    if (!(energy > 0.0) || !std::isfinite(energy)) fail(Errc::ZeroSignal, "constellation has zero energy");
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& p : points) p *= scale;

    Constellation c;
    c.name_ = std::move(name);
    c.points_ = std::move(points);
    c.labels_ = std::move(labels);
    c.index_of_label_ = std::move(index);
    c.m_ = m;
    c.scale_ = scale;
    return c;
  }

  static std::string label_string(std::uint32_t label, unsigned m) {
    std::string s(m, '0');
    for (unsigned i = 0; i < m; ++i)
      if ((label >> (m - 1 - i)) & 1u) s[i] = '1';
    return s;
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<cd>& points() const noexcept { return points_; }
  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
  unsigned bits_per_symbol() const noexcept { return m_; }
  std::size_t size() const noexcept { return points_.size(); }
  /// Factor that was applied to the raw coordinates to reach unit energy.
  double scale() const noexcept { return scale_; }

  std::size_t index_of_label(std::uint32_t label) const {
    return static_cast<std::size_t>(index_of_label_.at(label));
  }
  const cd& point_for_label(std::uint32_t label) const { return points_[index_of_label(label)]; }

  double mean_energy() const {
    double e = 0.0;
    for (const auto& p : points_) e += std::norm(p);
    return e / static_cast<double>(points_.size());
  }

 private:
  Constellation() = default;

  std::string name_;
  std::vector<cd> points_;
  std::vector<std::uint32_t> labels_;
  std::vector<int> index_of_label_;
  unsigned m_ = 0;
  double scale_ = 1.0;
};

namespace detail {

inline std::uint32_t gray(std::uint32_t i) { return i ^ (i >> 1); }

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

// Square QAM with 2^k levels per dimension, Gray coded per dimension:
// label = gray(I index) << k | gray(Q index).
inline Constellation square_qam(std::string name, unsigned k) {
  const std::uint32_t side = 1u << k;
  std::vector<cd> pts;
  std::vector<std::uint32_t> labels;
  for (std::uint32_t i = 0; i < side; ++i) {
    for (std::uint32_t q = 0; q < side; ++q) {
      const double vi = 2.0 * i - (side - 1.0);
      const double vq = 2.0 * q - (side - 1.0);
      pts.emplace_back(vi, vq);
      labels.push_back(gray(i) << k | gray(q));
    }
  }
  return Constellation::make(std::move(name), std::move(pts), std::move(labels), 2 * k);
}

// Cross 128-QAM built by folding a Gray-coded 16x8 rectangle.
//
// The rectangle has I in {±1..±15} (4 Gray bits, MSBs) and Q in {±1..±7}
// (3 Gray bits, LSBs). Columns with |I| in {13, 15} are relocated:
//   I' = sgn(I) * (8 - |Q|),  Q' = sgn(Q) * (|I| - 4)
// which fills the rows |Q'| in {9, 11}, |I'| <= 7. Points adjacent in Q
// before the fold stay adjacent in I' after it.
inline Constellation cross_qam128() {
  std::vector<cd> pts;
  std::vector<std::uint32_t> labels;
  for (std::uint32_t i = 0; i < 16; ++i) {
    for (std::uint32_t q = 0; q < 8; ++q) {
      double vi = 2.0 * i - 15.0;
      double vq = 2.0 * q - 7.0;
      if (std::abs(vi) > 11.0) {
        const double ni = std::copysign(8.0 - std::abs(vq), vi);
        const double nq = std::copysign(std::abs(vi) - 4.0, vq);
        vi = ni;
        vq = nq;
      }
      pts.emplace_back(vi, vq);
      labels.push_back(gray(i) << 3 | gray(q));
    }
  }
  return Constellation::make("cross-qam128", std::move(pts), std::move(labels), 7);
}

}  // namespace detail

inline const std::vector<std::string>& builtin_constellation_names() {
  static const std::vector<std::string> names{"qpsk", "qam16", "qam64", "cross-qam128", "qam256"};
  return names;
}

inline Constellation builtin_constellation(std::string_view name) {
  if (name == "qpsk") return detail::square_qam("qpsk", 1);
  if (name == "qam16") return detail::square_qam("qam16", 2);
  if (name == "qam64") return detail::square_qam("qam64", 3);
  if (name == "cross-qam128") return detail::cross_qam128();
  if (name == "qam256") return detail::square_qam("qam256", 4);
  fail(Errc::UnknownFormat, "unknown constellation '" + std::string(name) + "'");
}

/// Parses the `bits,I,Q` text format. `#` starts a comment; blank lines are skipped.
inline Constellation parse_constellation(std::istream& in, std::string name) {
  std::vector<cd> pts;
  std::vector<std::string> label_text;
  std::vector<std::size_t> line_of;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    if (auto h = sv.find('#'); h != std::string_view::npos) sv = sv.substr(0, h);
    sv = detail::trim(sv);
    if (sv.empty()) continue;
    const auto c1 = sv.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : sv.find(',', c1 + 1);
    if (c2 == std::string_view::npos || sv.find(',', c2 + 1) != std::string_view::npos)
      fail(Errc::ParseError, "line " + std::to_string(lineno) + ": expected bits,I,Q");
    const auto bits = detail::trim(sv.substr(0, c1));
    double vi = 0.0, vq = 0.0;
    if (!detail::parse_double(sv.substr(c1 + 1, c2 - c1 - 1), vi) ||
        !detail::parse_double(sv.substr(c2 + 1), vq) || !std::isfinite(vi) || !std::isfinite(vq))
      fail(Errc::ParseError, "line " + std::to_string(lineno) + ": bad coordinate");
    if (bits.empty() || bits.find_first_not_of("01") != std::string_view::npos)
      fail(Errc::BadLabel, "line " + std::to_string(lineno) + ": label must be a non-empty bit string");
    pts.emplace_back(vi, vq);
    label_text.emplace_back(bits);
    line_of.push_back(lineno);
  }
  if (pts.empty()) fail(Errc::BadCardinality, "no constellation points");

  const std::size_t m = label_text.front().size();
  for (std::size_t i = 0; i < label_text.size(); ++i)
    if (label_text[i].size() != m)
      fail(Errc::BadLabel, "line " + std::to_string(line_of[i]) + ": label length " +
                               std::to_string(label_text[i].size()) + " differs from " + std::to_string(m));
  if (m >= 32) fail(Errc::BadLabel, "labels longer than 31 bits");
  std::vector<std::uint32_t> labels;
  labels.reserve(label_text.size());
  for (const auto& t : label_text) labels.push_back(static_cast<std::uint32_t>(std::stoul(t, nullptr, 2)));
  {
    auto sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    if (auto it = std::adjacent_find(sorted.begin(), sorted.end()); it != sorted.end())
      fail(Errc::DuplicateLabel, "label " + Constellation::label_string(*it, static_cast<unsigned>(m)) + " repeated");
  }
  const std::size_t count = pts.size();
  if ((count & (count - 1)) != 0)
    fail(Errc::BadCardinality, std::to_string(count) + " points is not a power of two");
  if ((std::size_t{1} << m) != count)
    fail(Errc::BadLabel, "label length " + std::to_string(m) + " does not match " + std::to_string(count) + " points");
  return Constellation::make(std::move(name), std::move(pts), std::move(labels), static_cast<unsigned>(m));
}

inline Constellation load_constellation(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  auto stem = path.substr(path.find_last_of("/\\") + 1);
  if (auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem.resize(dot);
  return parse_constellation(in, stem);
}

inline void write_constellation(std::ostream& out, const Constellation& c) {
  out << "# " << c.name() << " (" << c.size() << " points, unit average energy)\n";
  out << "# bits,I,Q\n";
  char buf[96];
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", c.points()[i].real(), c.points()[i].imag());
    out << Constellation::label_string(c.labels()[i], c.bits_per_symbol()) << buf;
  }
}

inline void save_constellation(const std::string& path, const Constellation& c) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  write_constellation(out, c);
  if (!out) fail(Errc::IoError, "write failed for " + path);
}

/// Sorted distinct coordinate values taken by either dimension.
struct AmplitudeAlphabet {
  std::vector<double> levels;
  double tolerance = kExactAlphabetTol;

  std::size_t size() const noexcept { return levels.size(); }

  double min_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < levels.size(); ++i) g = std::min(g, levels[i] - levels[i - 1]);
    return g;
  }

  /// Index of the nearest level.
  std::size_t nearest(double v) const {
    auto it = std::lower_bound(levels.begin(), levels.end(), v);
    if (it == levels.end()) return levels.size() - 1;
    if (it == levels.begin()) return 0;
    const auto hi = static_cast<std::size_t>(it - levels.begin());
    return (v - levels[hi - 1] <= levels[hi] - v) ? hi - 1 : hi;
  }
};

/// Single-linkage merge of all I and Q coordinates; each cluster is replaced by its mean.
/// A tolerance wider than half the true minimum gap silently merges levels.
inline AmplitudeAlphabet amplitude_alphabet(const Constellation& c, double tol = kExactAlphabetTol) {
  if (!(tol > 0.0)) fail(Errc::InvalidArgument, "alphabet tolerance must be positive");
  std::vector<double> v;
  v.reserve(2 * c.size());
  for (const auto& p : c.points()) {
    v.push_back(p.real());
    v.push_back(p.imag());
  }
  std::sort(v.begin(), v.end());
  AmplitudeAlphabet a;
  a.tolerance = tol;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= v.size(); ++i) {
    if (i == v.size() || v[i] - v[i - 1] > tol) {
      const double sum = std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(start),
                                         v.begin() + static_cast<std::ptrdiff_t>(i), 0.0);
      a.levels.push_back(sum / static_cast<double>(i - start));
      start = i;
    }
  }
  return a;
}

/// Number of entries of a full pattern table: dims * L^n, exact.
inline boost::multiprecision::cpp_int lut_size(std::uint64_t levels, std::uint64_t n, std::uint64_t dims) {
  if (n % 2 == 0) fail(Errc::EvenPatternLength, "pattern length must be odd, got " + std::to_string(n));
  if (levels < 2 || dims < 1) fail(Errc::InvalidArgument, "lut_size needs L >= 2 and dims >= 1");
  boost::multiprecision::cpp_int r = dims;
  for (std::uint64_t i = 0; i < n; ++i) r *= levels;
  return r;
}

}  // namespace pdlab
