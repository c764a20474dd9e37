#pragma once

// Simulate / estimate / full-run pipelines over files. The command-line tool
// only parses arguments and maps exceptions to exit codes; everything it
// does goes through here.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "imdse/config.hpp"
#include "imdse/csv_io.hpp"
#include "imdse/dse.hpp"
#include "imdse/report.hpp"
#include "imdse/simulator.hpp"

namespace imdse {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2, kExitFault = 3, kExitCsv = 4 };

[[nodiscard]] inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config(in);
}

struct SimulationSummary {
  std::size_t samples = 0;
  double slip_no_load = 0.0;  // just before the load step
  double slip_loaded = 0.0;   // just before fault onset (or at the end)
  double t_fault_on = 0.0;
  double t_fault_off = 0.0;
  bool faulted = false;
};

[[nodiscard]] inline SimulationSummary summarize(const Scenario& sc, const SimRecord& rec) {
  SimulationSummary s;
  s.samples = rec.samples.size();
  s.faulted = sc.fault.kind != FaultKind::None;
  s.t_fault_on = sc.fault.t_on;
  s.t_fault_off = sc.fault.t_off;
  const double sync = sc.frame().omega / sc.motor.pole_pairs;
  auto slip_before = [&](double t) {
    double w = rec.samples.front().omega_m;
    for (const auto& x : rec.samples) {
      if (x.t >= t - kEventTimeSlack) break;
      w = x.omega_m;
    }
    return 1.0 - w / sync;
  };
  s.slip_no_load = slip_before(sc.load.t_load);
  s.slip_loaded = slip_before(s.faulted ? sc.fault.t_on : rec.samples.back().t + 1.0);
  return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

/// Writes the measurement CSV (and optionally the ground-truth CSV).
inline SimulationSummary simulate_to_files(const RunConfig& cfg, const std::filesystem::path& measurements,
                                           const std::filesystem::path& truth = {}) {
  const SimRecord rec = run_scenario(cfg.scenario);
  {
    std::ofstream out(measurements, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + measurements.string() + "'");
    write_measurement_csv(out, rec.samples);
  }
  if (!truth.empty()) {
    std::ofstream out(truth, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + truth.string() + "'");
    write_truth_csv(out, rec.truth);
  }
  return summarize(cfg.scenario, rec);
}

[[nodiscard]] inline DetectionReport estimate(const RunConfig& cfg, const std::vector<SimSample>& samples,
                                              std::string source = {}) {
  const DqSeries series = to_dq_series(samples, cfg.scenario.frame());
  if (series.size() < 2) throw CsvError("measurement record has fewer than 2 samples");
  DetectionReport r;
  r.config = cfg;
  r.measurement_source = std::move(source);
  r.sample_count = samples.size();
  r.sweep = sliding_detection(series, cfg.scenario.frame().omega, cfg.scenario.motor, cfg.dse,
                              fault_intervals(cfg.scenario.fault, series.front().t, series.back().t));
  return r;
}

/// Reads the measurement CSV, runs the sliding estimator and writes
/// windows.csv and report.json into out_dir.
inline DetectionReport estimate_files(const RunConfig& cfg, const std::filesystem::path& measurements,
                                      const std::filesystem::path& out_dir) {
  std::ifstream in(measurements);
  if (!in) throw CsvError("cannot open measurement CSV '" + measurements.string() + "'");
  const std::vector<SimSample> samples = read_measurement_csv(in);
  DetectionReport r = estimate(cfg, samples, measurements.filename().string());
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "windows.csv", std::ios::binary);
    write_window_csv(out, r.sweep.windows);
  }
  write_text(out_dir / "report.json", to_json(r).dump(2) + "\n");
  return r;
}

/// Per-phase terminal voltage and source current at full simulation rate
/// over [t0, t1], noise included, for waveform plots.
inline void write_plot_data(const RunConfig& cfg, const std::filesystem::path& out_dir, double t0 = 4.5,
                            double t1 = 5.75) {
  const Scenario& sc = cfg.scenario;
  const SimRecord full = add_noise_and_decimate(simulate_clean(sc), sc.sim.sigma_v, sc.sim.sigma_i, sc.sim.seed, 1);
  std::ofstream v(out_dir / "plot_voltage.csv", std::ios::binary);
  std::ofstream i(out_dir / "plot_current.csv", std::ios::binary);
  v << "t,va,vb,vc\n";
  i << "t,ia,ib,ic\n";
  for (const auto& s : full.samples) {
    if (s.t < t0 - kEventTimeSlack || s.t > t1 + kEventTimeSlack) continue;
    detail::put_row(v, s.t, s.va, s.vb, s.vc);
    detail::put_row(i, s.t, s.ia, s.ib, s.ic);
  }
}

struct RunOutcome {
  SimulationSummary simulation;
  DetectionReport report;
};

/// Full pipeline into out_dir:
///   measurements.csv  truth.csv  windows.csv  report.json
///   plot_voltage.csv  plot_current.csv
inline RunOutcome run_to_dir(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  RunOutcome out;
  out.simulation = simulate_to_files(cfg, out_dir / "measurements.csv", out_dir / "truth.csv");
  out.report = estimate_files(cfg, out_dir / "measurements.csv", out_dir);
  write_plot_data(cfg, out_dir);
  return out;
}

}  // namespace imdse
