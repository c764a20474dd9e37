#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "imdse/errors.hpp"

namespace imdse {

struct JacobianSteps {
  double rel = 1e-6;
  double abs = 1e-8;
};

/// Central-difference Jacobian of a vector function,
///   H(:, j) = (f(x + h_j e_j) - f(x - h_j e_j)) / (2 h_j),  h_j = max(rel |x_j|, abs).
template <typename Fn>
[[nodiscard]] Eigen::MatrixXd numerical_jacobian(Fn&& f, const Eigen::VectorXd& x, JacobianSteps steps = {}) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd xp = x;
  Eigen::MatrixXd jac;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = std::max(steps.rel * std::abs(x[j]), steps.abs);
    xp[j] = x[j] + h;
    const Eigen::VectorXd fp = f(xp);
    xp[j] = x[j] - h;
    const Eigen::VectorXd fm = f(xp);
    xp[j] = x[j];
    if (!fp.allFinite() || !fm.allFinite()) throw NonFinite("numerical_jacobian: non-finite function value");
    if (j == 0) jac.resize(fp.size(), n);
    // Divide by the representable step, not the nominal one.
    jac.col(j) = (fp - fm) / ((x[j] + h) - (x[j] - h));
  }
  return jac;
}

}  // namespace imdse
