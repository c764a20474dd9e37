#pragma once

// Terminal fault block and the nodal solve at the motor terminal bus.
//
// Each faulted phase connects through R_f to a common star node; for ground
// faults the star node reaches ground through R_g. Eliminating the star node
// gives the Norton conductance seen from the three terminals:
//
//   G = diag(g_f m) - g_f^2 m m^T / (n g_f + g_g)
//
// with m the 0/1 mask of faulted phases, n = |m| and g_g = 1/R_g (zero for
// ungrounded faults).

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "imdse/errors.hpp"

namespace imdse {

enum class FaultKind { None, LineGround, LineLine, LineLineGround, ThreePhaseGround };

struct FaultSpec {
  FaultKind kind = FaultKind::None;
  std::array<bool, 3> phases{false, false, false};  // A, B, C
  double r_f = 5.0;    // ohm, per faulted phase
  double r_g = 0.1;    // ohm, star point to ground
  double t_on = 5.0;   // s
  double t_off = 5.25; // s

  [[nodiscard]] int phase_count() const { return int(phases[0]) + int(phases[1]) + int(phases[2]); }
  [[nodiscard]] bool grounded() const {
    return kind == FaultKind::LineGround || kind == FaultKind::LineLineGround ||
           kind == FaultKind::ThreePhaseGround;
  }
};

// Switching instants are compared with this slack so that a grid time k*dt
// landing a few ulps short of t_on still counts as faulted.
inline constexpr double kEventTimeSlack = 1e-9;  // s

[[nodiscard]] inline bool fault_active(const FaultSpec& fs, double t) {
  return fs.kind != FaultKind::None && t >= fs.t_on - kEventTimeSlack && t < fs.t_off - kEventTimeSlack;
}

inline void validate(const FaultSpec& fs) {
  if (fs.kind == FaultKind::None) return;
  if (!(fs.r_f > 0)) throw DomainError("fault.R_f must be positive");
  if (!(fs.r_g >= 0)) throw DomainError("fault.R_g must be non-negative");
  if (!(fs.t_on < fs.t_off)) throw DomainError("fault.t_on must precede fault.t_off");
  const int n = fs.phase_count();
  const int expected = fs.kind == FaultKind::LineGround         ? 1
                       : fs.kind == FaultKind::ThreePhaseGround ? 3
                                                                : 2;
  if (n != expected) throw DomainError("fault.phases inconsistent with fault.kind");
}

[[nodiscard]] inline Eigen::Matrix3d fault_conductance(const FaultSpec& fs, double t) {
  Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
  if (!fault_active(fs, t)) return g;
  const double g_f = 1.0 / fs.r_f;
  Eigen::Vector3d mask;
  for (int k = 0; k < 3; ++k) mask[k] = fs.phases[k] ? 1.0 : 0.0;
  g.diagonal() = g_f * mask;
  if (fs.grounded() && fs.r_g == 0.0) return g;  // star node tied to ground
  const double g_g = fs.grounded() ? 1.0 / fs.r_g : 0.0;
  g -= (g_f * g_f / (fs.phase_count() * g_f + g_g)) * (mask * mask.transpose());
  return g;
}

/// KCL at the terminal bus: (I/R_src + G_f) v = e/R_src - i_motor.
[[nodiscard]] inline Eigen::Vector3d terminal_solve(const Eigen::Vector3d& e_abc, const Eigen::Vector3d& i_motor_abc,
                                                    const Eigen::Matrix3d& g_f, double r_src) {
  if (!(r_src > 0)) throw DomainError("source resistance must be positive");
  const Eigen::Matrix3d y = Eigen::Matrix3d::Identity() / r_src + g_f;
  const Eigen::PartialPivLU<Eigen::Matrix3d> lu(y);
  if (!(std::abs(lu.determinant()) > 1e-300)) throw SingularMatrix("terminal admittance matrix is singular");
  return lu.solve(e_abc / r_src - i_motor_abc);
}

[[nodiscard]] inline std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::None: return "none";
    case FaultKind::LineGround: return "LG";
    case FaultKind::LineLine: return "LL";
    case FaultKind::LineLineGround: return "LLG";
    case FaultKind::ThreePhaseGround: return "3PG";
  }
  return "none";
}

}  // namespace imdse
