#pragma once

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "imdse/errors.hpp"

namespace imdse {

/// CDF of the chi-squared distribution with k degrees of freedom at J,
/// P(k/2, J/2) with P the regularized lower incomplete gamma function.
[[nodiscard]] inline double chi_squared_cdf(double j, int k) {
  if (k < 1) throw DomainError("chi_squared_cdf: degrees of freedom must be >= 1");
  if (!(j >= 0)) throw DomainError("chi_squared_cdf: statistic must be non-negative");
  if (std::isinf(j)) return 1.0;
  return boost::math::gamma_p(0.5 * k, 0.5 * j);
}

}  // namespace imdse
