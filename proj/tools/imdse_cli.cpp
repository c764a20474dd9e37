// imdse: simulate a faulted induction-motor feeder and run the windowed
// state-estimation detector over the recorded waveforms.
//
//   imdse simulate --config C --out measurements.csv [--truth truth.csv]
//   imdse estimate --config C --measurements M.csv --out-dir DIR
//   imdse run      --config C --out-dir DIR
//
// Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 fault detected,
// 4 malformed measurement CSV.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "imdse/pipeline.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::uint64_t> dse_seed;
  int verbosity = 1;
};

imdse::RunConfig load(const Common& c) {
  imdse::RunConfig cfg = imdse::load_config(c.config);
  if (c.sim_seed) cfg.scenario.sim.seed = *c.sim_seed;
  if (c.dse_seed) cfg.dse.seed = *c.dse_seed;
  return cfg;
}

void print_simulation(const imdse::SimulationSummary& s) {
  std::printf("samples            %zu\n", s.samples);
  std::printf("slip (no load)     %.6f\n", s.slip_no_load);
  std::printf("slip (loaded)      %.6f\n", s.slip_loaded);
  if (s.faulted) {
    std::printf("fault window       [%.4f, %.4f) s\n", s.t_fault_on, s.t_fault_off);
  } else {
    std::printf("fault window       none\n");
  }
}

int print_detection(const imdse::DetectionReport& r) {
  std::size_t faults = 0, errors = 0;
  for (const auto& w : r.sweep.windows) {
    if (!w.result) ++errors;
    else if (w.result->verdict == imdse::Verdict::Fault) ++faults;
  }
  std::printf("windows            %zu (%zu Fault, %zu failed)\n", r.sweep.windows.size(), faults, errors);
  for (const auto& s : r.sweep.intervals) {
    std::printf("  %-12s n=%-4d mean J=%-11.4g max J=%-11.4g max p=%.4f  %s\n", s.interval.label.c_str(), s.windows,
                s.mean_cost, s.max_cost, s.max_p, imdse::to_string(s.verdict));
  }
  return r.any_interval_fault() ? imdse::kExitFault : imdse::kExitOk;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const imdse::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return imdse::kExitConfig;
  } catch (const imdse::CsvError& e) {
    std::cerr << "measurement CSV error: " << e.what() << '\n';
    return imdse::kExitCsv;
  } catch (const imdse::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return imdse::kExitNumerical;
  } catch (const imdse::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return imdse::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return imdse::kExitConfig;
  }
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config, "Run configuration file")->required()->check(CLI::ExistingFile);
  sub->add_option("--sim-seed", c.sim_seed, "Override sim.seed");
  sub->add_option("--dse-seed", c.dse_seed, "Override dse.seed");
  sub->add_flag_function("-q,--quiet", [&c](std::int64_t) { c.verbosity = 0; }, "Suppress the summary");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Induction-motor fault simulation and state-estimation fault detection"};
  app.require_subcommand(1);
  // CLI11 reports bad arguments as exit 1 and --help as 0 through app.exit().

  Common common;

  std::string sim_out, sim_truth;
  auto* simulate = app.add_subcommand("simulate", "Simulate a scenario and write the measurement CSV");
  add_common(simulate, common);
  simulate->add_option("-o,--out", sim_out, "Measurement CSV to write")->required();
  simulate->add_option("--truth", sim_truth, "Optional ground-truth CSV to write");

  std::string est_csv, est_dir;
  auto* estimate = app.add_subcommand("estimate", "Run the detector on a measurement CSV");
  add_common(estimate, common);
  estimate->add_option("-m,--measurements", est_csv, "Measurement CSV")->required();
  estimate->add_option("-o,--out-dir", est_dir, "Directory for windows.csv and report.json")->required();

  std::string run_dir;
  auto* run = app.add_subcommand("run", "Simulate, estimate and write plot data");
  add_common(run, common);
  run->add_option("-o,--out-dir", run_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (simulate->parsed()) {
    return guarded([&] {
      const auto cfg = load(common);
      const auto summary = imdse::simulate_to_files(cfg, sim_out, sim_truth);
      if (common.verbosity > 0) print_simulation(summary);
      return int(imdse::kExitOk);
    });
  }
  if (estimate->parsed()) {
    return guarded([&] {
      const auto cfg = load(common);
      const auto report = imdse::estimate_files(cfg, est_csv, est_dir);
      const int code = common.verbosity > 0 ? print_detection(report)
                                            : (report.any_interval_fault() ? int(imdse::kExitFault) : 0);
      return code;
    });
  }
  return guarded([&] {
    const auto cfg = load(common);
    const auto out = imdse::run_to_dir(cfg, run_dir);
    if (common.verbosity > 0) {
      print_simulation(out.simulation);
      return print_detection(out.report);
    }
    return out.report.any_interval_fault() ? int(imdse::kExitFault) : 0;
  });
}
