#pragma once
// Experiment configuration: a JSON document with nested sections. Every field
// is optional; missing fields take the documented defaults. Validation errors
// name the offending field path.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdlab/constellation.hpp"
#include "pdlab/error.hpp"
#include "pdlab/txchain.hpp"

namespace pdlab::harness {

using json = nlohmann::ordered_json;

enum class SweepVariable { Swing, Osnr, Iteration, Snr };

inline const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::Swing: return "swing";
    case SweepVariable::Osnr: return "osnr";
    case SweepVariable::Iteration: return "iteration";
    case SweepVariable::Snr: return "snr";
  }
  return "?";
}

struct PredistorterSpec {
  enum class Kind { Linear, PatternLut, SequenceWise };
  Kind kind = Kind::Linear;
  int n = 3;            ///< pattern length, PatternLut only
  int iterations = 10;  ///< SequenceWise only
  double mu = 1.0;

  /// Stable identifier used in CSV rows and seed derivation.
  std::string id() const {
    switch (kind) {
      case Kind::Linear: return "linear";
      case Kind::PatternLut: return "lut-n" + std::to_string(n);
      case Kind::SequenceWise: return "sw";
    }
    return "?";
  }

  static PredistorterSpec linear() { return {}; }
  static PredistorterSpec pattern(int n, double mu = 1.0) { return {Kind::PatternLut, n, 10, mu}; }
  static PredistorterSpec sequence_wise(int iterations = 10, double mu = 1.0) {
    return {Kind::SequenceWise, 3, iterations, mu};
  }
};

struct ExperimentConfig {
  // constellation
  std::string constellation = "cross-qam128";
  std::string constellation_file;  ///< overrides `constellation` when set

  // frame
  std::size_t symbols = 1u << 16;
  std::uint64_t seed = 1;

  // waveform
  int sps = 4;
  double symbol_rate = 48.8e9;
  double rrc_beta = 0.01;
  int rrc_span = 1024;  ///< long enough that truncation ISI stays below 1e-3 at beta = 0.01
  double precomp_epsilon = 1e-4;  ///< relative to peak |H|^2
  bool identity_link = false;     ///< bypass shaping and transmitter entirely

  TransmitterModel transmitter;

  std::vector<PredistorterSpec> predistorters{PredistorterSpec::linear(), PredistorterSpec::pattern(3),
                                              PredistorterSpec::pattern(5), PredistorterSpec::sequence_wise()};

  // noise
  double snr_ref_db = 28.0;  ///< transmitter SNR at swing_ref
  double swing_ref = 0.4;
  double training_snr_db = std::numeric_limits<double>::infinity();
  OsnrSpec osnr;             ///< osnr_db unused; rate, b_ref and pols for the conversion
  bool osnr_includes_tx_noise = true;
  std::size_t penalty_symbols = 1u << 18;

  // sweep
  SweepVariable sweep = SweepVariable::Swing;
  std::vector<double> grid;

  // output
  std::string output_dir = "out";
  bool record_wall_time = false;
  bool plots = true;

  /// Transmitter SNR for a swing: snr_ref + 20 log10(swing / swing_ref).
  double tx_snr_db(double swing) const { return snr_ref_db + 20.0 * std::log10(swing / swing_ref); }
};

inline std::vector<double> default_grid(SweepVariable v, int sw_iterations = 10) {
  std::vector<double> g;
  switch (v) {
    case SweepVariable::Swing:
      for (int i = 0; i <= 10; ++i) g.push_back((200 + 50 * i) / 1000.0);
      break;
    case SweepVariable::Osnr:
      for (int i = 26; i <= 40; ++i) g.push_back(i);
      break;
    case SweepVariable::Iteration:
      for (int i = 0; i <= sw_iterations; ++i) g.push_back(i);
      break;
    case SweepVariable::Snr:
      for (int i = 8; i <= 20; ++i) g.push_back(i);
      break;
  }
  return g;
}

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  fail(Errc::ConfigError, path + ": " + what);
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) config_error(path.empty() ? k : path + "." + k, "unknown field");
  }
}

template <typename T>
void read(const json& j, const std::string& path, const char* key, T& out) {
  if (!j.contains(key) || j[key].is_null()) return;
  const std::string p = path.empty() ? key : path + "." + key;
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (j[key].is_string()) {
        const auto s = j[key].get<std::string>();
        if (s == "inf") out = std::numeric_limits<double>::infinity();
        else if (s == "-inf") out = -std::numeric_limits<double>::infinity();
        else config_error(p, "expected a number or \"inf\"");
        return;
      }
      if (!j[key].is_number()) config_error(p, "expected a number");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!j[key].is_number_integer()) config_error(p, "expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (j[key].get<long long>() < 0) config_error(p, "must be non-negative");
    }
    out = j[key].get<T>();
  } catch (const json::exception& e) {
    config_error(p, e.what());
  }
}

inline json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  using detail::config_error;
  if (c.constellation_file.empty()) {
    bool known = false;
    for (const auto& n : builtin_constellation_names()) known = known || n == c.constellation;
    if (!known) config_error("constellation", "unknown builtin '" + c.constellation + "'");
  }
  if (c.symbols < 1) config_error("frame.symbols", "must be >= 1");
  if (c.sps < 2) config_error("waveform.sps", "must be >= 2");
  if (!(c.rrc_beta > 0.0) || c.rrc_beta > 1.0) config_error("waveform.rrc_beta", "must be in (0, 1]");
  if (c.rrc_span < 2 || c.rrc_span % 2) config_error("waveform.rrc_span", "must be even and >= 2");
  if (!(c.precomp_epsilon >= 0.0)) config_error("waveform.precomp_epsilon", "must be >= 0");
  if (!(c.symbol_rate > 0.0)) config_error("waveform.symbol_rate", "must be positive");
  try {
    c.transmitter.validate();
  } catch (const Error& e) {
    config_error("transmitter", e.what());
  }
  for (std::size_t i = 0; i < c.predistorters.size(); ++i) {
    const auto& p = c.predistorters[i];
    const std::string path = "predistorters[" + std::to_string(i) + "]";
    if (p.kind == PredistorterSpec::Kind::PatternLut && (p.n < 1 || p.n % 2 == 0))
      config_error(path + ".n", "must be odd and >= 1");
    if (p.kind == PredistorterSpec::Kind::SequenceWise && p.iterations < 0)
      config_error(path + ".iterations", "must be >= 0");
    if (!(p.mu > 0.0)) config_error(path + ".mu", "must be positive");
    for (std::size_t j = 0; j < i; ++j)
      if (c.predistorters[j].id() == p.id()) config_error(path, "duplicate predistorter " + p.id());
  }
  if (!(c.swing_ref > 0.0)) config_error("noise.swing_ref", "must be positive");
  if (!(c.osnr.symbol_rate > 0.0) || !(c.osnr.b_ref > 0.0) || !(c.osnr.pols > 0.0))
    config_error("noise.osnr", "symbol_rate, b_ref and pols must be positive");
  if (c.penalty_symbols < 1) config_error("noise.penalty_symbols", "must be >= 1");
  if (c.grid.empty()) config_error("sweep.grid", "must not be empty");
  for (std::size_t i = 1; i < c.grid.size(); ++i)
    if (!(c.grid[i] > c.grid[i - 1])) config_error("sweep.grid", "must be strictly increasing");
  if (c.sweep == SweepVariable::Swing)
    for (double g : c.grid)
      if (!(g > 0.0)) config_error("sweep.grid", "swings must be positive");
  if (c.output_dir.empty()) config_error("output.dir", "must not be empty");
}

/// `forced` pins the sweep variable (a subcommand); a conflicting file value is an error.
inline ExperimentConfig parse_config(const json& j, std::optional<SweepVariable> forced = std::nullopt) {
  using detail::check_keys;
  using detail::read;
  ExperimentConfig c;
  check_keys(j, "", {"constellation", "constellation_file", "frame", "waveform", "transmitter", "predistorters",
                     "noise", "sweep", "output"});
  read(j, "", "constellation", c.constellation);
  read(j, "", "constellation_file", c.constellation_file);

  if (j.contains("frame")) {
    const auto& f = j["frame"];
    check_keys(f, "frame", {"symbols", "seed"});
    read(f, "frame", "symbols", c.symbols);
    read(f, "frame", "seed", c.seed);
  }
  if (j.contains("waveform")) {
    const auto& w = j["waveform"];
    check_keys(w, "waveform", {"sps", "symbol_rate", "rrc_beta", "rrc_span", "precomp_epsilon", "identity_link"});
    read(w, "waveform", "sps", c.sps);
    read(w, "waveform", "symbol_rate", c.symbol_rate);
    read(w, "waveform", "rrc_beta", c.rrc_beta);
    read(w, "waveform", "rrc_span", c.rrc_span);
    read(w, "waveform", "precomp_epsilon", c.precomp_epsilon);
    read(w, "waveform", "identity_link", c.identity_link);
  }
  bool vsat_given = false;
  if (j.contains("transmitter")) {
    const auto& t = j["transmitter"];
    check_keys(t, "transmitter", {"swing", "memory_fir", "vsat", "quant_bits", "clip"});
    read(t, "transmitter", "swing", c.transmitter.swing);
    read(t, "transmitter", "memory_fir", c.transmitter.memory_fir);
    vsat_given = t.contains("vsat") && !t["vsat"].is_null();
    read(t, "transmitter", "vsat", c.transmitter.vsat);
    read(t, "transmitter", "quant_bits", c.transmitter.quant_bits);
    if (t.contains("clip") && !t["clip"].is_null()) {
      double clip = 0.0;
      read(t, "transmitter", "clip", clip);
      c.transmitter.clip = clip;
    }
  }
  if (j.contains("predistorters")) {
    const auto& ps = j["predistorters"];
    if (!ps.is_array()) detail::config_error("predistorters", "expected an array");
    c.predistorters.clear();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string path = "predistorters[" + std::to_string(i) + "]";
      const auto& p = ps[i];
      check_keys(p, path, {"type", "n", "iterations", "mu"});
      PredistorterSpec s;
      std::string type;
      read(p, path, "type", type);
      if (type == "linear" || type == "none") s.kind = PredistorterSpec::Kind::Linear;
      else if (type == "pattern-lut") s.kind = PredistorterSpec::Kind::PatternLut;
      else if (type == "sequence-wise") s.kind = PredistorterSpec::Kind::SequenceWise;
      else detail::config_error(path + ".type", "expected linear, pattern-lut or sequence-wise");
      read(p, path, "n", s.n);
      read(p, path, "iterations", s.iterations);
      read(p, path, "mu", s.mu);
      c.predistorters.push_back(s);
    }
    if (c.predistorters.empty()) c.predistorters.push_back(PredistorterSpec::linear());  // baseline only
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    check_keys(n, "noise", {"snr_ref_db", "swing_ref", "training_snr_db", "osnr", "osnr_includes_tx_noise",
                            "penalty_symbols"});
    read(n, "noise", "snr_ref_db", c.snr_ref_db);
    read(n, "noise", "swing_ref", c.swing_ref);
    read(n, "noise", "training_snr_db", c.training_snr_db);
    read(n, "noise", "osnr_includes_tx_noise", c.osnr_includes_tx_noise);
    read(n, "noise", "penalty_symbols", c.penalty_symbols);
    if (n.contains("osnr")) {
      const auto& o = n["osnr"];
      check_keys(o, "noise.osnr", {"symbol_rate", "b_ref", "pols"});
      read(o, "noise.osnr", "symbol_rate", c.osnr.symbol_rate);
      read(o, "noise.osnr", "b_ref", c.osnr.b_ref);
      read(o, "noise.osnr", "pols", c.osnr.pols);
    }
  }
  // Peak drive at the reference swing sits at 0.8 vsat unless vsat is given.
  if (!vsat_given) c.transmitter.vsat = c.swing_ref / 0.8;

  bool grid_given = false;
  bool var_given = false;
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    check_keys(s, "sweep", {"variable", "grid"});
    std::string var = "swing";
    var_given = s.contains("variable") && !s["variable"].is_null();
    read(s, "sweep", "variable", var);
    if (var == "swing") c.sweep = SweepVariable::Swing;
    else if (var == "osnr") c.sweep = SweepVariable::Osnr;
    else if (var == "iteration") c.sweep = SweepVariable::Iteration;
    else if (var == "snr") c.sweep = SweepVariable::Snr;
    else detail::config_error("sweep.variable", "expected swing, osnr, iteration or snr");
    grid_given = s.contains("grid") && !s["grid"].is_null();
    read(s, "sweep", "grid", c.grid);
  }
  if (forced) {
    if (var_given && c.sweep != *forced)
      detail::config_error("sweep.variable", std::string("is '") + to_string(c.sweep) + "' but the command sweeps '" +
                                                 to_string(*forced) + "'");
    c.sweep = *forced;
  }
  if (!grid_given) {
    int iterations = 10;
    for (const auto& p : c.predistorters)
      if (p.kind == PredistorterSpec::Kind::SequenceWise) iterations = p.iterations;
    c.grid = default_grid(c.sweep, iterations);
  }

  if (j.contains("output")) {
    const auto& o = j["output"];
    check_keys(o, "output", {"dir", "record_wall_time", "plots"});
    read(o, "output", "dir", c.output_dir);
    read(o, "output", "record_wall_time", c.record_wall_time);
    read(o, "output", "plots", c.plots);
  }
  validate(c);
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text,
                                          std::optional<SweepVariable> forced = std::nullopt) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(Errc::ConfigError, std::string("<file>: ") + e.what());
  }
  return parse_config(j, forced);
}

inline ExperimentConfig load_config(const std::string& path, std::optional<SweepVariable> forced = std::nullopt) {
  std::ifstream in(path);
  if (!in) fail(Errc::ConfigError, path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), forced);
}

/// The fully resolved configuration, in the input schema.
inline json to_json(const ExperimentConfig& c) {
  using detail::number_or_inf;
  json j;
  j["constellation"] = c.constellation;
  if (!c.constellation_file.empty()) j["constellation_file"] = c.constellation_file;
  j["frame"] = {{"symbols", c.symbols}, {"seed", c.seed}};
  j["waveform"] = {{"sps", c.sps},
                   {"symbol_rate", c.symbol_rate},
                   {"rrc_beta", c.rrc_beta},
                   {"rrc_span", c.rrc_span},
                   {"precomp_epsilon", c.precomp_epsilon},
                   {"identity_link", c.identity_link}};
  j["transmitter"] = {{"swing", c.transmitter.swing},
                      {"memory_fir", c.transmitter.memory_fir},
                      {"vsat", number_or_inf(c.transmitter.vsat)},
                      {"quant_bits", c.transmitter.quant_bits},
                      {"clip", c.transmitter.clip ? json(*c.transmitter.clip) : json(nullptr)}};
  json ps = json::array();
  for (const auto& p : c.predistorters) {
    switch (p.kind) {
      case PredistorterSpec::Kind::Linear: ps.push_back({{"type", "linear"}}); break;
      case PredistorterSpec::Kind::PatternLut: ps.push_back({{"type", "pattern-lut"}, {"n", p.n}, {"mu", p.mu}}); break;
      case PredistorterSpec::Kind::SequenceWise:
        ps.push_back({{"type", "sequence-wise"}, {"iterations", p.iterations}, {"mu", p.mu}});
        break;
    }
  }
  j["predistorters"] = ps;
  j["noise"] = {{"snr_ref_db", number_or_inf(c.snr_ref_db)},
                {"swing_ref", c.swing_ref},
                {"training_snr_db", number_or_inf(c.training_snr_db)},
                {"osnr", {{"symbol_rate", c.osnr.symbol_rate}, {"b_ref", c.osnr.b_ref}, {"pols", c.osnr.pols}}},
                {"osnr_includes_tx_noise", c.osnr_includes_tx_noise},
                {"penalty_symbols", c.penalty_symbols}};
  j["sweep"] = {{"variable", to_string(c.sweep)}, {"grid", c.grid}};
  j["output"] = {{"dir", c.output_dir}, {"record_wall_time", c.record_wall_time}, {"plots", c.plots}};
  return j;
}

inline Constellation resolve_constellation(const ExperimentConfig& c) {
  return c.constellation_file.empty() ? builtin_constellation(c.constellation) : load_constellation(c.constellation_file);
}

}  // namespace pdlab::harness
