// pdlab: command-line runner for the predistortion experiments.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pdlab/harness/config.hpp"
#include "pdlab/harness/output.hpp"
#include "pdlab/harness/sweeps.hpp"
#include "pdlab/pdlab.hpp"

namespace {

using namespace pdlab;
using namespace pdlab::harness;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

ExperimentConfig load(const std::string& path, SweepVariable var, const std::string& out_override) {
  auto cfg = path.empty() ? parse_config(json::object(), var) : load_config(path, var);
  if (!out_override.empty()) cfg.output_dir = out_override;
  return cfg;
}

void print_fec(const SweepResult& r) {
  for (const auto& f : r.fec)
    std::cout << "  " << f.predistorter << ": "
              << (f.first_value ? "meets NGMI " + format_metric(kFecNgmiLimit) + " from " + format_metric(*f.first_value)
                                : std::string("never meets the FEC limit"))
              << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transmitter predistortion laboratory: pattern-LUT and sequence-wise predistorters"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "experiment configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out_dir, "output directory (overrides output.dir)");
  };

  auto* swing = app.add_subcommand("sweep-swing", "NGMI vs DAC swing for every predistorter");
  add_common(swing);
  auto* osnr = app.add_subcommand("sweep-osnr", "NGMI vs OSNR at a fixed swing");
  add_common(osnr);
  auto* conv = app.add_subcommand("sw-converge", "residual and NGMI per sequence-wise training pass");
  add_common(conv);

  auto* penalty = app.add_subcommand("penalty", "AWGN NGMI of the original vs the distorted constellation");
  add_common(penalty);
  std::string source = "link";
  double drive = 0.8;
  penalty->add_option("--source", source, "distorted constellation source")
      ->check(CLI::IsMember({"link", "tanh"}))
      ->capture_default_str();
  penalty->add_option("--drive", drive, "tanh source: peak drive relative to vsat")->capture_default_str();

  auto* gen = app.add_subcommand("gen-const", "write a builtin constellation in bits,I,Q format");
  std::string const_name, const_out;
  gen->add_option("-n,--name", const_name, "builtin format")
      ->required()
      ->check(CLI::IsMember(builtin_constellation_names()));
  gen->add_option("-o,--output", const_out, "output file")->required();

  auto* trn = app.add_subcommand("train", "train one predistorter at the configured swing and serialize it");
  trn->add_option("-c,--config", config_path, "experiment configuration (JSON)")->check(CLI::ExistingFile);
  std::string kind = "sequence-wise", lut_out, frame_out;
  int n = 5, iterations = 10;
  double mu = 1.0;
  trn->add_option("-p,--predistorter", kind)->check(CLI::IsMember({"pattern-lut", "sequence-wise"}))->capture_default_str();
  trn->add_option("--n", n, "pattern length")->capture_default_str();
  trn->add_option("--iterations", iterations, "sequence-wise training passes")->capture_default_str();
  trn->add_option("--mu", mu, "damping")->capture_default_str();
  trn->add_option("-o,--output", lut_out, "LUT file (pattern: text; sequence-wise: binary + .meta)")->required();
  trn->add_option("--frame-out", frame_out, "also write the training frame (binary + .meta)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*swing || *osnr || *conv) {
      const auto var = *swing ? SweepVariable::Swing : *osnr ? SweepVariable::Osnr : SweepVariable::Iteration;
      const auto cfg = load(config_path, var, out_dir);
      SweepResult r = *swing ? run_swing_sweep(cfg) : *osnr ? run_osnr_sweep(cfg) : run_sw_convergence(cfg);
      emit_outputs(r, cfg, cfg.output_dir);
      std::cout << "wrote " << r.rows.size() << " rows to " << (std::filesystem::path(cfg.output_dir) / "sweep.csv").string()
                << "\n";
      if (*osnr) print_fec(r);
    } else if (*penalty) {
      const auto cfg = load(config_path, SweepVariable::Snr, out_dir);
      const auto p = run_penalty(cfg, source == "tanh" ? PenaltySource::Tanh : PenaltySource::Link, drive);
      emit_penalty(p, cfg, cfg.output_dir);
      std::cout << "max NGMI gap " << format_metric(p.curves.max_gap) << " at " << format_metric(p.curves.max_gap_snr_db)
                << " dB SNR\n";
    } else if (*gen) {
      save_constellation(const_out, builtin_constellation(const_name));
    } else if (*trn) {
      auto cfg = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
      const PredistorterSpec spec =
          kind == "pattern-lut" ? PredistorterSpec::pattern(n, mu) : PredistorterSpec::sequence_wise(iterations, mu);
      cfg.predistorters = {spec};
      validate(cfg);
      const auto c = resolve_constellation(cfg);
      const auto frame = generate_frame(cfg.seed, cfg.symbols, c);
      const Link link(cfg, frame.size(), cfg.transmitter.swing);
      const auto trained = train(spec, link, frame, amplitude_alphabet(c), noise_variance(cfg.training_snr_db),
                                 derive_seed(cfg.seed, 0, hash_id(spec.id())));
      if (trained.pattern) {
        std::ostringstream ss;
        write_pattern_lut(ss, *trained.pattern);
        io::write_file_atomic(lut_out, ss.str());
        const auto st = predistorter_storage(*trained.pattern);
        std::cout << "pattern LUT n=" << n << " entries per lane: " << st[0] << " " << st[1] << " " << st[2] << " "
                  << st[3] << "\n";
      } else {
        save_sequence_lut(lut_out, *trained.sequence);
        std::cout << "sequence LUT N=" << trained.sequence->N << " after " << trained.sequence->iterations
                  << " iterations\n";
      }
      if (!frame_out.empty()) save_frame(frame_out, frame);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::ConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
