#pragma once

// Fifth-order induction machine in the synchronous qd frame.
//
// Units are SI throughout: flux linkages in V*s, inductances in H, speeds in
// rad/s. P is the number of pole pairs, so the rotor electrical speed is
// omega_r = P * omega_m. Rotor quantities are referred to the stator and the
// rotor windings are short-circuited (squirrel cage).

#include <cmath>
#include <complex>
#include <numbers>

#include "imdse/errors.hpp"

namespace imdse {

struct MotorParams {
  double r_s = 1.115;        // stator resistance, ohm
  double l_ls = 5.974e-3;    // stator leakage inductance, H
  double r_r = 1.083;        // rotor resistance (referred), ohm
  double l_lr = 5.974e-3;    // rotor leakage inductance (referred), H
  double l_m = 203.7e-3;     // magnetizing inductance, H
  int pole_pairs = 2;
  double inertia = 0.02;     // kg*m^2
  double friction = 0.005752;  // N*m*s
  double f_nom = 60.0;       // Hz
  double v_ll = 460.0;       // V rms, line-line

  [[nodiscard]] double l_s() const { return l_ls + l_m; }
  [[nodiscard]] double l_r() const { return l_lr + l_m; }
  /// Determinant of the flux/current inductance matrix, L_s L_r - L_m^2.
  [[nodiscard]] double det() const { return l_s() * l_r() - l_m * l_m; }
};

inline constexpr double kMinDeterminant = 1e-12;  // H^2

/// Throws DegenerateParameters if the parameter set is not physical.
inline void validate(const MotorParams& p) {
  if (!(p.r_s > 0 && p.r_r > 0 && p.l_ls > 0 && p.l_lr > 0 && p.l_m >= 0))
    throw DegenerateParameters("motor resistances and inductances must be positive");
  if (p.pole_pairs < 1) throw DegenerateParameters("pole_pairs must be >= 1");
  if (!(p.inertia > 0)) throw DegenerateParameters("inertia must be positive");
  if (!(p.friction >= 0)) throw DegenerateParameters("friction must be non-negative");
  if (!(p.det() > kMinDeterminant)) throw DegenerateParameters("inductance determinant D <= 1e-12 H^2");
}

struct ElectricalState {
  double l_qs = 0.0;
  double l_ds = 0.0;
  double l_qr = 0.0;
  double l_dr = 0.0;
};

struct MechanicalState {
  double omega_m = 0.0;  // mechanical rad/s

  [[nodiscard]] double omega_r(const MotorParams& p) const { return p.pole_pairs * omega_m; }
};

struct DqCurrents {
  double i_qs = 0.0;
  double i_ds = 0.0;
  double i_qr = 0.0;
  double i_dr = 0.0;
};

[[nodiscard]] inline DqCurrents currents_from_fluxes(const MotorParams& p, const ElectricalState& es) {
  const double d = p.det();
  if (!(d > kMinDeterminant)) throw DegenerateParameters("inductance determinant D <= 1e-12 H^2");
  const double ls = p.l_s(), lr = p.l_r(), lm = p.l_m;
  return {(lr * es.l_qs - lm * es.l_qr) / d, (lr * es.l_ds - lm * es.l_dr) / d,
          (ls * es.l_qr - lm * es.l_qs) / d, (ls * es.l_dr - lm * es.l_ds) / d};
}

[[nodiscard]] inline ElectricalState fluxes_from_currents(const MotorParams& p, const DqCurrents& c) {
  const double ls = p.l_s(), lr = p.l_r(), lm = p.l_m;
  return {ls * c.i_qs + lm * c.i_qr, ls * c.i_ds + lm * c.i_dr, lr * c.i_qr + lm * c.i_qs,
          lr * c.i_dr + lm * c.i_ds};
}

/// Electromagnetic torque in N*m, flux-flux form: 3/2 P (L_m/D) (l_qs l_dr - l_qr l_ds).
[[nodiscard]] inline double electrical_torque(const MotorParams& p, const ElectricalState& es) {
  return 1.5 * p.pole_pairs * (p.l_m / p.det()) * (es.l_qs * es.l_dr - es.l_qr * es.l_ds);
}

/// Same torque through the stator currents: 3/2 P (l_ds i_qs - l_qs i_ds).
[[nodiscard]] inline double electrical_torque_from_currents(const MotorParams& p, const ElectricalState& es,
                                                            const DqCurrents& c) {
  return 1.5 * p.pole_pairs * (es.l_ds * c.i_qs - es.l_qs * c.i_ds);
}

struct StateDerivative {
  double d_qs = 0.0;
  double d_ds = 0.0;
  double d_qr = 0.0;
  double d_dr = 0.0;
  double d_omega_m = 0.0;
};

/// Right-hand side of the flux and shaft equations. omega is the frame
/// (synchronous) speed, t_m the load torque.
[[nodiscard]] inline StateDerivative state_derivative(const MotorParams& p, const ElectricalState& es,
                                                      const MechanicalState& ms, double v_qs, double v_ds,
                                                      double omega, double t_m) {
  const DqCurrents c = currents_from_fluxes(p, es);
  const double slip_speed = omega - ms.omega_r(p);
  const double t_e = electrical_torque(p, es);
  return {v_qs - omega * es.l_ds - p.r_s * c.i_qs,
          v_ds + omega * es.l_qs - p.r_s * c.i_ds,
          -slip_speed * es.l_dr - p.r_r * c.i_qr,
          slip_speed * es.l_qr - p.r_r * c.i_dr,
          (t_e - p.friction * ms.omega_m - t_m) / p.inertia};
}

// ---------------------------------------------------------------------------
// Per-phase equivalent circuit, used as an independent check of the
// time-domain model in steady state.

struct SteadyState {
  double slip = 0.0;
  double stator_current_rms = 0.0;  // A, phase rms
  double torque = 0.0;              // N*m
  double omega_m = 0.0;             // mechanical rad/s
};

namespace detail {

struct CircuitPoint {
  std::complex<double> i_s;
  double torque;
};

// Solves R_src + R_s + jX_ls in series with jX_m || (R_r/s + jX_lr).
inline CircuitPoint equivalent_circuit(const MotorParams& p, double v_ph, double f, double r_src, double slip) {
  using namespace std::complex_literals;
  const double w = 2.0 * std::numbers::pi * f;
  const std::complex<double> z_m = 1i * (w * p.l_m);
  const std::complex<double> z_stator = (p.r_s + r_src) + 1i * (w * p.l_ls);
  if (slip <= 0.0) {
    return {v_ph / (z_stator + z_m), 0.0};
  }
  const std::complex<double> z_rotor = p.r_r / slip + 1i * (w * p.l_lr);
  const std::complex<double> z_par = z_m * z_rotor / (z_m + z_rotor);
  const std::complex<double> i_s = v_ph / (z_stator + z_par);
  const std::complex<double> i_r = i_s * z_m / (z_m + z_rotor);
  const double sync_mech = w / p.pole_pairs;
  return {i_s, 3.0 * std::norm(i_r) * (p.r_r / slip) / sync_mech};
}

}  // namespace detail

/// Steady operating point for a constant load torque. Bisects on slip over
/// the stable branch (0, s_breakdown). r_src adds a resistive source
/// impedance in series with the stator; zero gives the classical circuit.
[[nodiscard]] inline SteadyState steady_state_oracle(const MotorParams& p, double v_ll, double f, double t_m,
                                                     double r_src = 0.0) {
  validate(p);
  const double v_ph = v_ll / std::numbers::sqrt3;
  const double sync_mech = 2.0 * std::numbers::pi * f / p.pole_pairs;
  auto net = [&](double s) {
    return detail::equivalent_circuit(p, v_ph, f, r_src, s).torque - t_m - p.friction * (1.0 - s) * sync_mech;
  };
  if (t_m == 0.0 && p.friction == 0.0) {
    const auto pt = detail::equivalent_circuit(p, v_ph, f, r_src, 0.0);
    return {0.0, std::abs(pt.i_s), 0.0, sync_mech};
  }

  // Walk up a log grid until the net torque turns positive; the first sign
  // change lies on the stable side of the breakdown point.
  constexpr int kGrid = 2000;
  double lo = 0.0, hi = -1.0;
  double prev = 1e-12;
  for (int i = 0; i <= kGrid; ++i) {
    const double s = std::pow(10.0, -12.0 + 12.0 * i / kGrid);
    if (net(s) > 0.0) {
      lo = prev;
      hi = s;
      break;
    }
    prev = s;
  }
  if (hi < 0.0) throw NoSolution("load torque exceeds the breakdown torque of the machine");

  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (net(mid) > 0.0 ? hi : lo) = mid;
  }
  const double s = 0.5 * (lo + hi);
  const auto pt = detail::equivalent_circuit(p, v_ph, f, r_src, s);
  return {s, std::abs(pt.i_s), pt.torque, (1.0 - s) * sync_mech};
}

}  // namespace imdse
