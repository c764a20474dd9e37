#pragma once

// Run configuration: one INI-style document with the sections
// [motor] [source] [load] [fault] [sim] [dse]. Every key has a default (the
// values below), and unknown sections or keys are rejected.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "imdse/dse.hpp"
#include "imdse/errors.hpp"
#include "imdse/simulator.hpp"

namespace imdse {

struct RunConfig {
  Scenario scenario;
  DseConfig dse;
};

namespace config_detail {

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(const std::string& name, const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError(name + ": expected a number, got '" + s + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& name, const std::string& s) {
  Int v{};
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError(name + ": expected an integer, got '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& name, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(name + ": expected true or false, got '" + s + "'");
}

inline FaultKind parse_kind(const std::string& name, std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::toupper(c)); });
  if (s == "NONE") return FaultKind::None;
  if (s == "LG") return FaultKind::LineGround;
  if (s == "LL") return FaultKind::LineLine;
  if (s == "LLG") return FaultKind::LineLineGround;
  if (s == "3PG") return FaultKind::ThreePhaseGround;
  throw ConfigError(name + ": expected one of none, LG, LL, LLG, 3PG, got '" + s + "'");
}

// Phasing as in "AG", "AB", "ABCG"; a trailing G is accepted and ignored
// (grounding follows from the kind).
inline std::array<bool, 3> parse_phases(const std::string& name, const std::string& s) {
  std::array<bool, 3> out{false, false, false};
  if (s.empty() || s == "none" || s == "-") return out;
  for (char c : s) {
    const char u = char(std::toupper(static_cast<unsigned char>(c)));
    if (u >= 'A' && u <= 'C') {
      if (out[u - 'A']) throw ConfigError(name + ": phase listed twice in '" + s + "'");
      out[u - 'A'] = true;
    } else if (u != 'G') {
      throw ConfigError(name + ": unexpected character in phasing '" + s + "'");
    }
  }
  return out;
}

inline std::string format_phases(const FaultSpec& fs) {
  std::string out;
  for (int k = 0; k < 3; ++k)
    if (fs.phases[k]) out.push_back(char('A' + k));
  if (out.empty()) return "none";
  if (fs.grounded()) out.push_back('G');
  return out;
}

struct Field {
  std::string_view section;
  std::string_view key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& name, const std::string& value)> set;
};

#define IMDSE_DOUBLE_FIELD(sec, key, member)                                                  \
  Field {                                                                                     \
    sec, key, [](const RunConfig& c) { return format_double(c.member); },                     \
        [](RunConfig& c, const std::string& n, const std::string& v) { c.member = parse_double(n, v); } \
  }

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      IMDSE_DOUBLE_FIELD("motor", "R_s", scenario.motor.r_s),
      IMDSE_DOUBLE_FIELD("motor", "L_ls", scenario.motor.l_ls),
      IMDSE_DOUBLE_FIELD("motor", "R_r", scenario.motor.r_r),
      IMDSE_DOUBLE_FIELD("motor", "L_lr", scenario.motor.l_lr),
      IMDSE_DOUBLE_FIELD("motor", "L_m", scenario.motor.l_m),
      Field{"motor", "P", [](const RunConfig& c) { return std::to_string(c.scenario.motor.pole_pairs); },
            [](RunConfig& c, const std::string& n, const std::string& v) {
              c.scenario.motor.pole_pairs = parse_int<int>(n, v);
            }},
      IMDSE_DOUBLE_FIELD("motor", "J", scenario.motor.inertia),
      IMDSE_DOUBLE_FIELD("motor", "F", scenario.motor.friction),
      IMDSE_DOUBLE_FIELD("motor", "f_nom", scenario.motor.f_nom),
      IMDSE_DOUBLE_FIELD("motor", "V_ll", scenario.motor.v_ll),

      IMDSE_DOUBLE_FIELD("source", "V_ll", scenario.source.v_ll),
      IMDSE_DOUBLE_FIELD("source", "f", scenario.source.f),
      IMDSE_DOUBLE_FIELD("source", "theta0", scenario.source.theta0),
      IMDSE_DOUBLE_FIELD("source", "R_src", scenario.source.r_src),

      IMDSE_DOUBLE_FIELD("load", "T_m", scenario.load.t_m),
      IMDSE_DOUBLE_FIELD("load", "t_load", scenario.load.t_load),

      Field{"fault", "kind", [](const RunConfig& c) { return std::string(to_string(c.scenario.fault.kind)); },
            [](RunConfig& c, const std::string& n, const std::string& v) {
              c.scenario.fault.kind = parse_kind(n, v);
            }},
      Field{"fault", "phases", [](const RunConfig& c) { return format_phases(c.scenario.fault); },
            [](RunConfig& c, const std::string& n, const std::string& v) {
              c.scenario.fault.phases = parse_phases(n, v);
            }},
      IMDSE_DOUBLE_FIELD("fault", "R_f", scenario.fault.r_f),
      IMDSE_DOUBLE_FIELD("fault", "R_g", scenario.fault.r_g),
      IMDSE_DOUBLE_FIELD("fault", "t_on", scenario.fault.t_on),
      IMDSE_DOUBLE_FIELD("fault", "t_off", scenario.fault.t_off),

      IMDSE_DOUBLE_FIELD("sim", "dt", scenario.sim.dt),
      IMDSE_DOUBLE_FIELD("sim", "t_end", scenario.sim.t_end),
      IMDSE_DOUBLE_FIELD("sim", "sigma_v", scenario.sim.sigma_v),
      IMDSE_DOUBLE_FIELD("sim", "sigma_i", scenario.sim.sigma_i),
      Field{"sim", "seed", [](const RunConfig& c) { return std::to_string(c.scenario.sim.seed); },
            [](RunConfig& c, const std::string& n, const std::string& v) {
              c.scenario.sim.seed = parse_int<std::uint64_t>(n, v);
            }},
      IMDSE_DOUBLE_FIELD("sim", "f_sample", scenario.output.f_sample),

      Field{"dse", "N", [](const RunConfig& c) { return std::to_string(c.dse.window); },
            [](RunConfig& c, const std::string& n, const std::string& v) { c.dse.window = parse_int<int>(n, v); }},
      Field{"dse", "stride", [](const RunConfig& c) { return std::to_string(c.dse.stride); },
            [](RunConfig& c, const std::string& n, const std::string& v) { c.dse.stride = parse_int<int>(n, v); }},
      IMDSE_DOUBLE_FIELD("dse", "tol_dJ", dse.tol_delta_j),
      Field{"dse", "max_iter", [](const RunConfig& c) { return std::to_string(c.dse.max_iter); },
            [](RunConfig& c, const std::string& n, const std::string& v) { c.dse.max_iter = parse_int<int>(n, v); }},
      IMDSE_DOUBLE_FIELD("dse", "sigma_init", dse.sigma_init),
      Field{"dse", "seed", [](const RunConfig& c) { return std::to_string(c.dse.seed); },
            [](RunConfig& c, const std::string& n, const std::string& v) {
              c.dse.seed = parse_int<std::uint64_t>(n, v);
            }},
      IMDSE_DOUBLE_FIELD("dse", "sigma_voltage", dse.sigmas.voltage),
      IMDSE_DOUBLE_FIELD("dse", "sigma_current", dse.sigmas.current),
      IMDSE_DOUBLE_FIELD("dse", "sigma_flux", dse.sigmas.flux),
      IMDSE_DOUBLE_FIELD("dse", "sigma_torque", dse.sigmas.torque),
      IMDSE_DOUBLE_FIELD("dse", "sigma_speed", dse.sigmas.speed),
      IMDSE_DOUBLE_FIELD("dse", "p_threshold", dse.p_threshold),
      Field{"dse", "include_speed_residual",
            [](const RunConfig& c) { return std::string(c.dse.include_speed_residual ? "true" : "false"); },
            [](RunConfig& c, const std::string& n, const std::string& v) {
              c.dse.include_speed_residual = parse_bool(n, v);
            }},
      IMDSE_DOUBLE_FIELD("dse", "energization_block", dse.energization_block),
      Field{"dse", "parallel", [](const RunConfig& c) { return std::string(c.dse.parallel ? "true" : "false"); },
            [](RunConfig& c, const std::string& n, const std::string& v) { c.dse.parallel = parse_bool(n, v); }},
  };
  return table;
}

#undef IMDSE_DOUBLE_FIELD

}  // namespace config_detail

/// Sets one field by its section and key. Throws ConfigError naming
/// "section.key" if it is unknown or the value does not parse.
inline void set_field(RunConfig& cfg, std::string_view section, std::string_view key, const std::string& value) {
  const std::string name = std::string(section) + "." + std::string(key);
  for (const auto& f : config_detail::fields()) {
    if (f.section == section && f.key == key) {
      f.set(cfg, name, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + name + "'");
}

inline void validate(const RunConfig& cfg) {
  try {
    validate(cfg.scenario);
    validate(cfg.dse);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

/// Section -> key -> value text, in declaration order of the schema.
[[nodiscard]] inline std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> to_sections(
    const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> out;
  for (const auto& f : config_detail::fields()) {
    if (out.empty() || out.back().first != f.section) out.emplace_back(std::string(f.section), decltype(out)::value_type::second_type{});
    out.back().second.emplace_back(std::string(f.key), f.get(cfg));
  }
  return out;
}

[[nodiscard]] inline std::string to_ini(const RunConfig& cfg) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [section, entries] : to_sections(cfg)) {
    if (!first) os << '\n';
    first = false;
    os << '[' << section << "]\n";
    for (const auto& [k, v] : entries) os << k << " = " << v << '\n';
  }
  return os.str();
}

[[nodiscard]] inline RunConfig parse_config(std::istream& is) {
  namespace pt = boost::property_tree;
  // '#' comments are accepted in addition to the INI ';'.
  std::ostringstream cleaned;
  for (std::string line; std::getline(is, line);) {
    const auto pos = line.find_first_not_of(" \t");
    if (pos != std::string::npos && line[pos] == '#') line.clear();
    cleaned << line << '\n';
  }
  std::istringstream in(cleaned.str());
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty())
      throw ConfigError("unknown config key '" + section + "' (keys must live in a section)");
    for (const auto& [key, value] : body) set_field(cfg, section, key, value.data());
  }
  validate(cfg);
  return cfg;
}

[[nodiscard]] inline RunConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

}  // namespace imdse
