#pragma once

// Flat-file formats.
//
//   measurements:  t,va,vb,vc,ia,ib,ic,Tm,wm
//   ground truth:  t,lqs,lds,lqr,ldr,Te,wm
//   windows:       t_start,t_end,iterations,converged,J,dof,p,verdict
//
// Numbers are written with 17 significant digits so a write/read cycle is
// exact. The measurement header must match byte for byte on read.

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "imdse/dse.hpp"
#include "imdse/errors.hpp"
#include "imdse/simulator.hpp"

namespace imdse {

inline constexpr std::string_view kMeasurementHeader = "t,va,vb,vc,ia,ib,ic,Tm,wm";
inline constexpr std::string_view kTruthHeader = "t,lqs,lds,lqr,ldr,Te,wm";
inline constexpr std::string_view kWindowHeader = "t_start,t_end,iterations,converged,J,dof,p,verdict";

namespace detail {

inline constexpr std::array<std::string_view, 9> kMeasurementColumns = {"t",  "va", "vb", "vc", "ia",
                                                                        "ib", "ic", "Tm", "wm"};

inline void put_number(std::ostream& os, double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  os.write(buf.data(), res.ptr - buf.data());
}

template <typename... Ts>
void put_row(std::ostream& os, double first, Ts... rest) {
  put_number(os, first);
  ((os.put(','), put_number(os, rest)), ...);
  os.put('\n');
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace detail

inline void write_measurement_csv(std::ostream& os, const std::vector<SimSample>& samples) {
  os << kMeasurementHeader << '\n';
  for (const auto& s : samples) detail::put_row(os, s.t, s.va, s.vb, s.vc, s.ia, s.ib, s.ic, s.t_m, s.omega_m);
}

inline void write_truth_csv(std::ostream& os, const std::vector<TruthSample>& truth) {
  os << kTruthHeader << '\n';
  for (const auto& g : truth)
    detail::put_row(os, g.t, g.flux.l_qs, g.flux.l_ds, g.flux.l_qr, g.flux.l_dr, g.t_e, g.omega_m);
}

/// Reads a measurement CSV. Throws CsvError naming the missing or unexpected
/// column, or the offending line for malformed rows.
[[nodiscard]] inline std::vector<SimSample> read_measurement_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw CsvError("measurement CSV is empty; expected header " + std::string(kMeasurementHeader));
  detail::strip_cr(line);
  if (line != kMeasurementHeader) {
    const auto cols = detail::split(line, ',');
    for (std::size_t k = 0; k < detail::kMeasurementColumns.size(); ++k) {
      if (k >= cols.size() || cols[k] != detail::kMeasurementColumns[k])
        throw CsvError("measurement CSV header: missing column '" + std::string(detail::kMeasurementColumns[k]) +
                       "' at position " + std::to_string(k + 1));
    }
    throw CsvError("measurement CSV header: unexpected extra column '" +
                   std::string(cols[detail::kMeasurementColumns.size()]) + "'");
  }

  std::vector<SimSample> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != detail::kMeasurementColumns.size())
      throw CsvError("measurement CSV line " + std::to_string(lineno) + ": expected 9 fields, found " +
                     std::to_string(fields.size()));
    std::array<double, 9> v{};
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const auto f = fields[k];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v[k]);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw CsvError("measurement CSV line " + std::to_string(lineno) + ": column '" +
                       std::string(detail::kMeasurementColumns[k]) + "' is not a number");
    }
    if (!out.empty() && !(v[0] > out.back().t))
      throw CsvError("measurement CSV line " + std::to_string(lineno) + ": time is not strictly increasing");
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  return out;
}

inline void write_window_csv(std::ostream& os, const std::vector<WindowOutcome>& windows) {
  os << kWindowHeader << '\n';
  for (const auto& w : windows) {
    detail::put_number(os, w.t_start);
    os.put(',');
    detail::put_number(os, w.t_end);
    if (w.result) {
      const auto& r = *w.result;
      os << ',' << r.iterations << ',' << (r.converged ? "true" : "false") << ',';
      detail::put_number(os, r.cost);
      os << ',' << r.dof << ',';
      detail::put_number(os, r.p);
      os << ',' << to_string(r.verdict) << '\n';
    } else {
      os << ",0,false,,,,Error\n";
    }
  }
}

}  // namespace imdse
