#pragma once

// Synchronous-frame Park transform (amplitude invariant, 2/3 scaling).
//
//   [q]         [ cos(th)  cos(th-a)  cos(th+a) ] [a]
//   [d] = 2/3 * [ sin(th)  sin(th-a)  sin(th+a) ] [b]      a = 2*pi/3
//   [z]         [   1/2       1/2        1/2    ] [c]
//
// The inverse is the exact matrix inverse of the above:
//
//   a = cos(th)   q + sin(th)   d + z
//   b = cos(th-a) q + sin(th-a) d + z
//   c = cos(th+a) q + sin(th+a) d + z

#include <cmath>
#include <numbers>

namespace imdse {

inline constexpr double kPhaseShift = 2.0 * std::numbers::pi / 3.0;

struct ThreePhaseSample {
  double t = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

struct DqzSample {
  double t = 0.0;
  double q = 0.0;
  double d = 0.0;
  double z = 0.0;
};

/// Angle of the synchronously rotating frame, theta(t) = omega * t + theta0.
/// The simulator and the estimator must share one instance.
struct FrameAngle {
  double theta0 = 0.0;  // rad
  double omega = 0.0;   // electrical rad/s

  [[nodiscard]] double at(double t) const { return omega * t + theta0; }
};

[[nodiscard]] inline DqzSample abc_to_dq0(const ThreePhaseSample& s, const FrameAngle& fr) {
  const double th = fr.at(s.t);
  const double ca = std::cos(th), cb = std::cos(th - kPhaseShift), cc = std::cos(th + kPhaseShift);
  const double sa = std::sin(th), sb = std::sin(th - kPhaseShift), sc = std::sin(th + kPhaseShift);
  constexpr double k = 2.0 / 3.0;
  return {s.t, k * (ca * s.a + cb * s.b + cc * s.c), k * (sa * s.a + sb * s.b + sc * s.c),
          (s.a + s.b + s.c) / 3.0};
}

[[nodiscard]] inline ThreePhaseSample dq0_to_abc(const DqzSample& s, const FrameAngle& fr) {
  const double th = fr.at(s.t);
  return {s.t, std::cos(th) * s.q + std::sin(th) * s.d + s.z,
          std::cos(th - kPhaseShift) * s.q + std::sin(th - kPhaseShift) * s.d + s.z,
          std::cos(th + kPhaseShift) * s.q + std::sin(th + kPhaseShift) * s.d + s.z};
}

[[nodiscard]] inline double peak_phase_voltage(double v_ll_rms) {
  return v_ll_rms * std::numbers::sqrt2 / std::numbers::sqrt3;
}

/// Ideal balanced supply: phase a = V_pk cos(theta(t)), b lags by 2pi/3, c leads.
[[nodiscard]] inline ThreePhaseSample balanced_source(double v_ll_rms, const FrameAngle& fr, double t) {
  const double vpk = peak_phase_voltage(v_ll_rms);
  const double th = fr.at(t);
  return {t, vpk * std::cos(th), vpk * std::cos(th - kPhaseShift), vpk * std::cos(th + kPhaseShift)};
}

}  // namespace imdse
