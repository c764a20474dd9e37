#pragma once

// Detection report: a JSON document carrying the full configuration echo,
// one record per window and the per-interval aggregates. Field names are
// stable; tooling downstream keys on them.

#include <string>

#include "json.hpp"

#include "imdse/config.hpp"
#include "imdse/dse.hpp"

namespace imdse {

inline constexpr const char* kReportFormat = "imdse-detection-report/1";

struct DetectionReport {
  RunConfig config;
  std::string measurement_source;
  std::size_t sample_count = 0;
  DetectionSweep sweep;

  [[nodiscard]] bool any_interval_fault() const {
    for (const auto& s : sweep.intervals)
      if (s.verdict == Verdict::Fault) return true;
    return false;
  }
};

[[nodiscard]] inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [section, entries] : to_sections(cfg)) {
    auto& sec = j[section];
    for (const auto& [k, v] : entries) sec[k] = v;
  }
  return j;
}

/// Rebuilds a configuration from a report's "config" object.
[[nodiscard]] inline RunConfig config_from_json(const nlohmann::ordered_json& j) {
  RunConfig cfg;
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) throw ConfigError("config echo: section '" + section + "' is not an object");
    for (const auto& [key, value] : body.items()) {
      if (!value.is_string()) throw ConfigError("config echo: '" + section + "." + key + "' is not a string");
      set_field(cfg, section, key, value.get<std::string>());
    }
  }
  validate(cfg);
  return cfg;
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const DetectionReport& r) {
  using json = nlohmann::ordered_json;
  json j;
  j["format"] = kReportFormat;
  j["config"] = config_to_json(r.config);

  j["measurements"] = {{"source", r.measurement_source}, {"samples", r.sample_count}};

  int errors = 0, converged = 0, faults = 0;
  json windows = json::array();
  for (const auto& w : r.sweep.windows) {
    json row;
    row["t_start"] = w.t_start;
    row["t_end"] = w.t_end;
    if (w.result) {
      const auto& e = *w.result;
      row["iterations"] = e.iterations;
      row["converged"] = e.converged;
      row["J"] = e.cost;
      row["dof"] = e.dof;
      row["p"] = e.p;
      row["verdict"] = to_string(e.verdict);
      converged += e.converged ? 1 : 0;
      faults += e.verdict == Verdict::Fault ? 1 : 0;
    } else {
      ++errors;
      row["verdict"] = "Error";
      row["error"] = w.error;
    }
    windows.push_back(std::move(row));
  }

  j["estimation"] = {{"windows", r.sweep.windows.size()},
                     {"converged_windows", converged},
                     {"fault_windows", faults},
                     {"failed_windows", errors},
                     {"start_mode", r.sweep.warm_started ? "warm" : "cold (parallel)"}};

  json intervals = json::array();
  for (const auto& s : r.sweep.intervals) {
    intervals.push_back({{"label", s.interval.label},
                         {"t_begin", s.interval.t_begin},
                         {"t_end", s.interval.t_end},
                         {"windows", s.windows},
                         {"mean_J", s.mean_cost},
                         {"max_J", s.max_cost},
                         {"mean_p", s.mean_p},
                         {"max_p", s.max_p},
                         {"verdict", to_string(s.verdict)}});
  }
  j["intervals"] = std::move(intervals);
  j["verdict"] = r.any_interval_fault() ? "Fault" : "Healthy";
  j["windows"] = std::move(windows);
  return j;
}

}  // namespace imdse
