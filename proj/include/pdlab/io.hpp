#pragma once
// Little-endian float64 blobs, key=value sidecars, and atomic file replacement.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pdlab/error.hpp"

namespace pdlab::io {

namespace detail {
inline std::uint64_t bswap64(std::uint64_t v) {
  v = ((v & 0x00FF00FF00FF00FFull) << 8) | ((v >> 8) & 0x00FF00FF00FF00FFull);
  v = ((v & 0x0000FFFF0000FFFFull) << 16) | ((v >> 16) & 0x0000FFFF0000FFFFull);
  return (v << 32) | (v >> 32);
}
inline std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return bswap64(v);
  return v;
}
}  // namespace detail

inline void append_f64_le(std::string& out, std::span<const double> values) {
  const auto base = out.size();
  out.resize(base + 8 * values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint64_t u = detail::to_le(std::bit_cast<std::uint64_t>(values[i]));
    std::memcpy(out.data() + base + 8 * i, &u, 8);
  }
}

inline std::vector<double> parse_f64_le(std::string_view bytes) {
  if (bytes.size() % 8 != 0) fail(Errc::ParseError, "binary payload is not a multiple of 8 bytes");
  std::vector<double> v(bytes.size() / 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t u;
    std::memcpy(&u, bytes.data() + 8 * i, 8);
    v[i] = std::bit_cast<double>(detail::to_le(u));
  }
  return v;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a temporary sibling and renames over the target, so readers never
/// observe a partial file.
inline void write_file_atomic(const std::filesystem::path& p, std::string_view content) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::IoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(Errc::IoError, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, p, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(Errc::IoError, "cannot rename into " + p.string());
  }
}

using Sidecar = std::map<std::string, std::string>;

inline std::string format_sidecar(const Sidecar& kv) {
  std::string s;
  for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
  return s;
}

inline Sidecar parse_sidecar(std::string_view text) {
  Sidecar kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(Errc::ParseError, "sidecar line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline const std::string& require(const Sidecar& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) fail(Errc::ParseError, "sidecar is missing '" + key + "'");
  return it->second;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace pdlab::io
