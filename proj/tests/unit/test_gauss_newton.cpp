#include <catch_amalgamated.hpp>

#include "imdse/gauss_newton.hpp"

using namespace imdse;
using Catch::Approx;

TEST_CASE("linear residual is solved in one iteration") {
  // eps = y - h(x) with h(x) = 2x, y = 4
  auto residual = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return Eigen::VectorXd::Constant(1, 4.0) - 2.0 * x; };
  const auto one = gauss_newton(residual, Eigen::VectorXd::Zero(1), {1e-6, 1});
  // the absolute step at x = 0 limits the first slope to ~1e-8 relative
  CHECK(one.iterations == 1);
  CHECK(one.x[0] == Approx(2.0).epsilon(1e-7));
  CHECK(one.cost < 1e-12);

  const auto full = gauss_newton(residual, Eigen::VectorXd::Zero(1));
  CHECK(full.converged);
  CHECK(full.x[0] == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("overdetermined linear fit reaches the least-squares solution") {
  Eigen::MatrixXd a(4, 2);
  a << 1, 0, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd y(4);
  y << 1.0, 2.9, 5.1, 7.0;
  auto residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return y - a * x; };
  const auto r = gauss_newton(residual, Eigen::VectorXd::Zero(2));
  const Eigen::VectorXd ls = (a.transpose() * a).ldlt().solve(a.transpose() * y);
  CHECK((r.x - ls).norm() < 1e-7);
  CHECK(r.converged);
}

TEST_CASE("nonlinear problem descends monotonically") {
  // exponential decay fit
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(12, 0.0, 3.0);
  const Eigen::VectorXd y = (2.5 * (-0.8 * t.array()).exp()).matrix();
  auto residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return y - (x[0] * (-x[1] * t.array()).exp()).matrix();
  };
  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.3;
  const auto r = gauss_newton(residual, x0, {1e-12, 100});
  CHECK(r.x[0] == Approx(2.5).epsilon(1e-6));
  CHECK(r.x[1] == Approx(0.8).epsilon(1e-6));
  for (std::size_t k = 1; k < r.cost_history.size(); ++k) CHECK(r.cost_history[k] <= r.cost_history[k - 1]);
}

TEST_CASE("rank-deficient Jacobian falls back to ridge") {
  // x0 + x1 is identified, x0 - x1 is not
  auto residual = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd e(2);
    e << 3.0 - (x[0] + x[1]), 6.0 - 2.0 * (x[0] + x[1]);
    return e;
  };
  const auto r = gauss_newton(residual, Eigen::VectorXd::Zero(2));
  CHECK(r.used_ridge);
  CHECK(r.x[0] + r.x[1] == Approx(3.0).epsilon(1e-6));

  auto flat = [](const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::VectorXd::Ones(2); };
  CHECK_THROWS_AS(gauss_newton(flat, Eigen::VectorXd::Zero(2)), RankDeficient);
}

TEST_CASE("iteration limit is honored") {
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(12, 0.0, 3.0);
  const Eigen::VectorXd y = (2.5 * (-0.8 * t.array()).exp()).matrix();
  auto residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return y - (x[0] * (-x[1] * t.array()).exp()).matrix();
  };
  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.3;
  const auto r = gauss_newton(residual, x0, {1e-14, 2});
  CHECK(r.iterations == 2);
  CHECK_FALSE(r.converged);
}

TEST_CASE("damped fallback rescues a start far from the minimum") {
  // Rosenbrock in residual form: eps = (1 - x0, 10 (x1 - x0^2))
  auto residual = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd e(2);
    e << 1.0 - x[0], 10.0 * (x[1] - x[0] * x[0]);
    return e;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const auto r = gauss_newton(residual, x0, {1e-12, 100});
  CHECK(r.x[0] == Approx(1.0).margin(1e-6));
  CHECK(r.x[1] == Approx(1.0).margin(1e-6));
  for (std::size_t k = 1; k < r.cost_history.size(); ++k) CHECK(r.cost_history[k] <= r.cost_history[k - 1]);
}
