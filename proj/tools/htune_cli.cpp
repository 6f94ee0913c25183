// Command line front end for the experiment harness.
//
//   htune run --config cfg.json [--out trace.csv]
//   htune repro fig1|fig2|fig3|example1 [--out trace.csv] [--tau N]
//   htune sweep --gamma-min 1.001 --gamma-max 4 --steps 3000 [--out sweep.csv]
//   htune certify --config cfg.json
//
// Exit codes: 0 success, 2 config error, 3 I/O error, 4 monitor violation
// under certified settings.

#include "htune/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

enum ExitCode : int { kOk = 0, kConfigError = 2, kIoError = 3, kMonitorViolation = 4 };

int emit(const htune::harness::RunTrace& trace, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    htune::harness::write_csv(trace, std::cout);
  } else {
    htune::harness::write_csv_file(trace, out_path);
  }
  for (const auto& v : trace.violations) {
    std::cerr << "monitor violation: " << v.optimizer << " at t=" << v.t << ": delta=" << v.verdict.delta
              << " bound=" << v.verdict.bound << '\n';
  }
  return trace.violations.empty() ? kOk : kMonitorViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order tuner experiments: runs, reproductions, stability sweeps and certificates"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  auto* run = app.add_subcommand("run", "Run an experiment config and write its CSV trace");
  run->add_option("--config", config_path, "JSON experiment config")->required();
  run->add_option("--out", out_path, "CSV output path (defaults to the config's output, '-' for stdout)");

  std::string preset_name;
  htune::Step tau = 100;
  auto* repro = app.add_subcommand("repro", "Run a built-in experiment");
  repro->add_option("name", preset_name, "fig1, fig2, fig3 or example1")
      ->required()
      ->check(CLI::IsMember(htune::harness::preset_names()));
  repro->add_option("--out", out_path, "CSV output path (stdout when omitted)");
  repro->add_option("--tau", tau, "switch step for example1")->check(CLI::PositiveNumber);

  double gamma_min = 1.001, gamma_max = 4.0;
  int steps = 3000;
  auto* sweep = app.add_subcommand("sweep", "Evaluate the stability conditions over a gamma grid");
  sweep->add_option("--gamma-min", gamma_min, "smallest gamma (>= 1)")->required();
  sweep->add_option("--gamma-max", gamma_max, "largest gamma")->required();
  sweep->add_option("--steps", steps, "number of grid points (>= 2)")->required();
  sweep->add_option("--out", out_path, "CSV output path (stdout when omitted)");

  auto* certify = app.add_subcommand("certify", "Print the per-step certificate summary of a config");
  certify->add_option("--config", config_path, "JSON experiment config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      const auto cfg = htune::harness::load_config(config_path);
      return emit(htune::harness::run_experiment(cfg), out_path.empty() ? cfg.output : out_path);
    }
    if (*repro) {
      return emit(htune::harness::run_experiment(htune::harness::preset(preset_name, tau)), out_path);
    }
    if (*sweep) {
      const auto rows = htune::harness::sweep_gamma(gamma_min, gamma_max, steps);
      if (out_path.empty() || out_path == "-") {
        htune::harness::write_sweep_csv(rows, std::cout);
      } else {
        std::ofstream out(out_path);
        if (!out) throw htune::harness::IoError("cannot open '" + out_path + "' for writing");
        htune::harness::write_sweep_csv(rows, out);
        if (!out.flush()) throw htune::harness::IoError("failed writing '" + out_path + "'");
      }
      return kOk;
    }
    if (*certify) {
      htune::harness::write_certificate_summary(htune::harness::certify(htune::harness::load_config(config_path)),
                                                std::cout);
      return kOk;
    }
  } catch (const htune::harness::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const htune::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
