#pragma once

// Direct-online start of an induction motor fed from an ideal source behind a
// resistance, with a shunt fault block at the motor terminals.
//
//   e_abc --[R_src]--+-- motor
//                    |
//                  [G_f]  (active on [t_on, t_off))
//
// Recorded channels are the terminal line-ground voltages and the source
// phase currents, i.e. motor current plus fault current.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "imdse/errors.hpp"
#include "imdse/fault_network.hpp"
#include "imdse/motor_model.hpp"
#include "imdse/reference_frame.hpp"
#include "imdse/trapezoidal.hpp"

namespace imdse {

struct SourceSpec {
  double v_ll = 460.0;   // V rms line-line
  double f = 60.0;       // Hz
  double theta0 = 0.0;   // rad
  double r_src = 0.5;    // ohm
};

struct LoadSpec {
  double t_m = 50.0;     // N*m
  double t_load = 3.0;   // s
};

struct SimSettings {
  double dt = 50e-6;     // s
  double t_end = 6.0;    // s
  std::uint64_t seed = 1;
  double sigma_v = 3.76;    // V, 1% of peak phase voltage
  double sigma_i = 0.0662;  // A, 1% of peak current at 3.73 kW / (sqrt(3) 460 V)
};

struct OutputSpec {
  double f_sample = 100.0;  // Hz
};

struct Scenario {
  MotorParams motor;
  SourceSpec source;
  LoadSpec load;
  FaultSpec fault;
  SimSettings sim;
  OutputSpec output;

  [[nodiscard]] FrameAngle frame() const { return {source.theta0, 2.0 * std::numbers::pi * source.f}; }
  [[nodiscard]] double load_torque(double t) const {
    return t >= load.t_load - kEventTimeSlack ? load.t_m : 0.0;
  }
  /// Number of integrator steps between recorded samples.
  [[nodiscard]] long decimation() const { return std::lround(1.0 / (sim.dt * output.f_sample)); }
  [[nodiscard]] long step_count() const { return std::lround(sim.t_end / sim.dt); }
};

inline void validate(const Scenario& sc) {
  validate(sc.motor);
  validate(sc.fault);
  if (!(sc.source.v_ll >= 0)) throw DomainError("source.V_ll must be non-negative");
  if (!(sc.source.f > 0)) throw DomainError("source.f must be positive");
  if (!(sc.source.r_src > 0)) throw DomainError("source.R_src must be positive");
  if (!(sc.sim.dt > 0)) throw DomainError("sim.dt must be positive");
  if (sc.sim.dt > 1.0 / (200.0 * sc.source.f) * (1 + 1e-12))
    throw DomainError("sim.dt must not exceed 1/(200 f)");
  if (!(sc.sim.t_end > 0)) throw DomainError("sim.t_end must be positive");
  if (!(sc.sim.sigma_v >= 0 && sc.sim.sigma_i >= 0)) throw DomainError("noise levels must be non-negative");
  if (!(sc.output.f_sample > 0)) throw DomainError("output.f_sample must be positive");
  const double ratio = 1.0 / (sc.sim.dt * sc.output.f_sample);
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1)
    throw DomainError("output.f_sample must divide 1/sim.dt evenly");
  const double steps = sc.sim.t_end / sc.sim.dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps) throw DomainError("sim.t_end must be a multiple of sim.dt");
}

struct SimSample {
  double t = 0.0;
  double va = 0.0, vb = 0.0, vc = 0.0;
  double ia = 0.0, ib = 0.0, ic = 0.0;
  double t_m = 0.0;
  double omega_m = 0.0;
};

struct TruthSample {
  double t = 0.0;
  ElectricalState flux;
  double t_e = 0.0;
  double omega_m = 0.0;
};

struct SimRecord {
  std::vector<SimSample> samples;
  std::vector<TruthSample> truth;
};

namespace detail {

using MachineVec = Eigen::Matrix<double, 5, 1>;

inline ElectricalState flux_of(const MachineVec& x) { return {x[0], x[1], x[2], x[3]}; }

// Network inputs seen by the machine at one instant.
struct TerminalSolution {
  Eigen::Vector3d v_abc;
  Eigen::Vector3d i_src_abc;
  double v_q = 0.0, v_d = 0.0;
};

inline TerminalSolution solve_terminals(const Scenario& sc, const MachineVec& x, double t, const FrameAngle& fr,
                                        const Eigen::Matrix3d& g_f) {
  const DqCurrents c = currents_from_fluxes(sc.motor, flux_of(x));
  const ThreePhaseSample im = dq0_to_abc({t, c.i_qs, c.i_ds, 0.0}, fr);
  const ThreePhaseSample e = balanced_source(sc.source.v_ll, fr, t);
  const Eigen::Vector3d e_abc(e.a, e.b, e.c);
  const Eigen::Vector3d i_m(im.a, im.b, im.c);
  TerminalSolution out;
  out.v_abc = terminal_solve(e_abc, i_m, g_f, sc.source.r_src);
  out.i_src_abc = (e_abc - out.v_abc) / sc.source.r_src;
  const DqzSample vdq = abc_to_dq0({t, out.v_abc[0], out.v_abc[1], out.v_abc[2]}, fr);
  out.v_q = vdq.q;
  out.v_d = vdq.d;
  return out;
}

inline MachineVec machine_rhs(const MotorParams& p, const MachineVec& x, double v_q, double v_d, double omega,
                              double t_m) {
  const StateDerivative d = state_derivative(p, flux_of(x), {x[4]}, v_q, v_d, omega, t_m);
  MachineVec f;
  f << d.d_qs, d.d_ds, d.d_qr, d.d_dr, d.d_omega_m;
  return f;
}

}  // namespace detail

/// Integrates the scenario at sim.dt without noise or decimation. Every
/// integrator step is returned.
[[nodiscard]] inline SimRecord simulate_clean(const Scenario& sc) {
  validate(sc);
  using detail::MachineVec;
  const FrameAngle fr = sc.frame();
  const double dt = sc.sim.dt;
  const long steps = sc.step_count();

  SimRecord rec;
  rec.samples.reserve(steps + 1);
  rec.truth.reserve(steps + 1);

  auto record = [&](double t, const MachineVec& x, const detail::TerminalSolution& ts) {
    rec.samples.push_back({t, ts.v_abc[0], ts.v_abc[1], ts.v_abc[2], ts.i_src_abc[0], ts.i_src_abc[1],
                           ts.i_src_abc[2], sc.load_torque(t), x[4]});
    rec.truth.push_back({t, detail::flux_of(x), electrical_torque(sc.motor, detail::flux_of(x)), x[4]});
  };

  MachineVec x = MachineVec::Zero();
  detail::TerminalSolution ts = detail::solve_terminals(sc, x, 0.0, fr, fault_conductance(sc.fault, 0.0));
  MachineVec f = detail::machine_rhs(sc.motor, x, ts.v_q, ts.v_d, fr.omega, sc.load_torque(0.0));
  record(0.0, x, ts);

  for (long k = 1; k <= steps; ++k) {
    const double t = double(k) * dt;
    const Eigen::Matrix3d g_f = fault_conductance(sc.fault, t);
    const double t_m = sc.load_torque(t);
    auto rhs = [&](const MachineVec& xn) {
      ts = detail::solve_terminals(sc, xn, t, fr, g_f);
      return detail::machine_rhs(sc.motor, xn, ts.v_q, ts.v_d, fr.omega, t_m);
    };
    auto step = trapezoidal_step(rhs, x, f, dt);
    x = step.x;
    f = step.f;  // ts now holds the terminal solution at the accepted x
    record(t, x, ts);
  }
  return rec;
}

/// Adds seeded zero-mean Gaussian noise to the electrical channels, then keeps
/// every k-th sample. The draw order is fixed (va vb vc ia ib ic per sample)
/// so records sharing a seed share their noise.
[[nodiscard]] inline SimRecord add_noise_and_decimate(SimRecord rec, double sigma_v, double sigma_i,
                                                      std::uint64_t seed, long every) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (auto& s : rec.samples) {
    s.va += sigma_v * unit(rng);
    s.vb += sigma_v * unit(rng);
    s.vc += sigma_v * unit(rng);
    s.ia += sigma_i * unit(rng);
    s.ib += sigma_i * unit(rng);
    s.ic += sigma_i * unit(rng);
  }
  if (every <= 1) return rec;
  SimRecord out;
  for (std::size_t k = 0; k < rec.samples.size(); k += std::size_t(every)) {
    out.samples.push_back(rec.samples[k]);
    out.truth.push_back(rec.truth[k]);
  }
  return out;
}

[[nodiscard]] inline SimRecord run_scenario(const Scenario& sc) {
  return add_noise_and_decimate(simulate_clean(sc), sc.sim.sigma_v, sc.sim.sigma_i, sc.sim.seed, sc.decimation());
}

// ---------------------------------------------------------------------------

struct DqPoint {
  double t = 0.0;
  double v_q = 0.0, v_d = 0.0;
  double i_q = 0.0, i_d = 0.0;
  double t_m = 0.0;
  double omega_m = 0.0;
};

using DqSeries = std::vector<DqPoint>;

[[nodiscard]] inline DqSeries to_dq_series(const std::vector<SimSample>& samples, const FrameAngle& fr) {
  DqSeries out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const DqzSample v = abc_to_dq0({s.t, s.va, s.vb, s.vc}, fr);
    const DqzSample i = abc_to_dq0({s.t, s.ia, s.ib, s.ic}, fr);
    out.push_back({s.t, v.q, v.d, i.q, i.d, s.t_m, s.omega_m});
  }
  return out;
}

[[nodiscard]] inline DqSeries to_dq_series(const SimRecord& rec, const FrameAngle& fr) {
  return to_dq_series(rec.samples, fr);
}

}  // namespace imdse
