#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "imdse/errors.hpp"

namespace imdse {

inline constexpr double kTrapezoidalTol = 1e-10;
inline constexpr int kTrapezoidalMaxIter = 50;

template <typename Vec>
struct TrapezoidalResult {
  Vec x;
  Vec f;  // rhs evaluated at the accepted x, reused as f_prev on the next step
  int iterations = 0;
};

/// One implicit trapezoidal step
///   x = x_prev + dt/2 (f_prev + rhs(x))
/// solved by fixed-point iteration from an explicit Euler predictor. rhs must
/// already be bound to the inputs at the end of the step.
template <typename Vec, typename Rhs>
[[nodiscard]] TrapezoidalResult<Vec> trapezoidal_step(Rhs&& rhs, const Vec& x_prev, const Vec& f_prev, double dt,
                                                      double tol = kTrapezoidalTol,
                                                      int max_iter = kTrapezoidalMaxIter) {
  if (!(dt > 0)) throw DomainError("trapezoidal_step: dt must be positive");
  const Vec base = x_prev + (0.5 * dt) * f_prev;
  Vec x = x_prev + dt * f_prev;
  for (int it = 1; it <= max_iter; ++it) {
    Vec f = rhs(x);
    Vec next = base + (0.5 * dt) * f;
    const double change = (next - x).template lpNorm<Eigen::Infinity>();
    const double scale = next.template lpNorm<Eigen::Infinity>();
    if (!std::isfinite(change)) throw NonFinite("trapezoidal_step: iterate is not finite");
    x = std::move(next);
    if (change <= tol * scale) {
      return {x, rhs(x), it};
    }
  }
  throw ConvergenceError("trapezoidal_step: fixed-point iteration did not converge in 50 iterations");
}

}  // namespace imdse
