#pragma once

// Gauss-Newton for min_x ||eps(x)||^2 where eps = y - h(x).
//
// Each step solves the linearized problem min ||H dx - eps|| with H = dh/dx
// (numerically, H = -d eps/dx) by column-pivoted Householder QR. A step that
// would raise the cost is shortened or replaced by a Marquardt-damped one. Iteration stops
// once the change in log cost falls below tol_delta_log_j or after max_iter
// updates.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "imdse/errors.hpp"
#include "imdse/numerical_jacobian.hpp"

namespace imdse {

struct GaussNewtonOptions {
  double tol_delta_log_j = 1e-6;
  int max_iter = 50;
  int max_step_halvings = 20;
  int max_damping_steps = 30;
  // Below this cost the residual is at rounding level and log J is noise.
  double cost_floor = 1e-20;
};

struct GaussNewtonResult {
  Eigen::VectorXd x;
  double cost = 0.0;  // eps^T eps at x
  int iterations = 0;
  bool converged = false;
  bool used_ridge = false;
  int damped_steps = 0;              // iterations that needed the Marquardt fallback
  std::vector<double> cost_history;  // cost at every accepted iterate, starting with x0
};

/// Least-squares step for H dx ~= rhs. Falls back to a ridge-regularized
/// normal equation when QR reports rank deficiency.
[[nodiscard]] inline Eigen::VectorXd stable_least_squares(const Eigen::MatrixXd& h, const Eigen::VectorXd& rhs,
                                                          bool* used_ridge = nullptr) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(h);
  if (qr.rank() == h.cols()) {
    if (used_ridge) *used_ridge = false;
    return qr.solve(rhs);
  }
  const Eigen::MatrixXd normal = h.transpose() * h;
  const double mu = 1e-10 * normal.trace() / double(h.cols());
  if (!(mu > 0)) throw RankDeficient("gauss_newton: Jacobian is identically zero");
  Eigen::MatrixXd reg = normal;
  reg.diagonal().array() += mu;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
  Eigen::VectorXd dx = ldlt.solve(h.transpose() * rhs);
  if (ldlt.info() != Eigen::Success || !dx.allFinite())
    throw RankDeficient("gauss_newton: linearized system is rank deficient beyond ridge fallback");
  if (used_ridge) *used_ridge = true;
  return dx;
}

template <typename ResidualFn>
[[nodiscard]] GaussNewtonResult gauss_newton(ResidualFn&& residual, Eigen::VectorXd x0,
                                             const GaussNewtonOptions& opt = {}) {
  GaussNewtonResult out;
  out.x = std::move(x0);
  Eigen::VectorXd eps = residual(out.x);
  if (!eps.allFinite()) throw NonFinite("gauss_newton: residual is not finite at the initial point");
  double cost = eps.squaredNorm();
  out.cost_history.push_back(cost);
  double lambda = 1e-3;  // Marquardt damping, carried across iterations

  while (out.iterations < opt.max_iter) {
    if (cost <= opt.cost_floor) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd h = -numerical_jacobian(residual, out.x);
    bool ridge = false;
    const Eigen::VectorXd dx = stable_least_squares(h, eps, &ridge);
    out.used_ridge = out.used_ridge || ridge;

    Eigen::VectorXd x_new = out.x + dx;
    Eigen::VectorXd eps_new = residual(x_new);
    double cost_new = eps_new.squaredNorm();

    // The undamped step overshot. Two fallbacks are tried and the lower
    // cost wins: halving along the Gauss-Newton direction, which suits a
    // nearby minimum, and Marquardt damping
    //   (H^T H + lambda diag(H^T H)) dx = H^T eps,
    // which rotates toward the gradient and rescues starts far from the
    // solution where the speed-flux products are strongly nonlinear.
    if (!(std::isfinite(cost_new) && cost_new <= cost)) {
      Eigen::VectorXd x_half = out.x;
      Eigen::VectorXd eps_half;
      double cost_half = std::numeric_limits<double>::infinity();
      double scale = 1.0;
      for (int k = 0; k < opt.max_step_halvings; ++k) {
        scale *= 0.5;
        Eigen::VectorXd xt = out.x + scale * dx;
        Eigen::VectorXd et = residual(xt);
        const double ct = et.squaredNorm();
        if (std::isfinite(ct) && ct <= cost) {
          x_half = std::move(xt);
          eps_half = std::move(et);
          cost_half = ct;
          break;
        }
      }

      const Eigen::MatrixXd normal = h.transpose() * h;
      const Eigen::VectorXd grad = h.transpose() * eps;
      const Eigen::VectorXd diag = normal.diagonal().cwiseMax(1e-12 * normal.diagonal().maxCoeff());
      Eigen::VectorXd x_lm, eps_lm;
      double cost_lm = std::numeric_limits<double>::infinity();
      for (int k = 0; k < opt.max_damping_steps; ++k) {
        Eigen::MatrixXd damped = normal;
        damped.diagonal() += lambda * diag;
        Eigen::VectorXd xt = out.x + damped.ldlt().solve(grad);
        Eigen::VectorXd et = residual(xt);
        const double ct = et.squaredNorm();
        if (std::isfinite(ct) && ct <= cost) {
          x_lm = std::move(xt);
          eps_lm = std::move(et);
          cost_lm = ct;
          lambda = std::max(lambda * 0.1, 1e-12);
          break;
        }
        lambda *= 10.0;
      }

      if (!std::isfinite(cost_half) && !std::isfinite(cost_lm)) {
        // No descent along either direction: x is stationary to working
        // precision.
        out.converged = true;
        break;
      }
      if (cost_lm < cost_half) {
        x_new = std::move(x_lm);
        eps_new = std::move(eps_lm);
        cost_new = cost_lm;
        ++out.damped_steps;
      } else {
        x_new = std::move(x_half);
        eps_new = std::move(eps_half);
        cost_new = cost_half;
      }
    }
    if (!x_new.allFinite()) throw NonFinite("gauss_newton: iterate diverged");

    ++out.iterations;
    const double delta_log = (cost_new == 0.0) ? 0.0 : std::abs(std::log(cost_new) - std::log(cost));
    out.x = std::move(x_new);
    eps = std::move(eps_new);
    cost = cost_new;
    out.cost_history.push_back(cost);
    if (delta_log < opt.tol_delta_log_j) {
      out.converged = true;
      break;
    }
  }
  out.cost = cost;
  return out;
}

}  // namespace imdse
