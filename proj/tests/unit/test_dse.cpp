#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "imdse/dse.hpp"
#include "support/oracles.hpp"

using namespace imdse;
using namespace imdse::testing;
using Catch::Approx;

namespace {

struct Fixture {
  Scenario sc;
  SimRecord rec;
  DqSeries series;
  double omega;

  explicit Fixture(Scenario s) : sc(std::move(s)), rec(run_scenario(sc)), series(to_dq_series(rec, sc.frame())) {
    omega = sc.frame().omega;
  }

  [[nodiscard]] ObservationWindow window(std::size_t first, int n) const {
    return make_window(std::span(series).subspan(first, std::size_t(n)), omega);
  }
};

const Fixture& clean_record() {
  static const Fixture f(noise_free(Scenario{}));
  return f;
}

const Fixture& noisy_record() {
  static const Fixture f{Scenario{}};
  return f;
}

const Fixture& ag_record() {
  static const Fixture f{ag_fault()};
  return f;
}

// Rows of the residual that may depend on flux field `field` of sample k.
std::set<int> flux_support(int k, int n, bool speed) {
  std::set<int> rows;
  const int per_interval = speed ? 5 : 4;
  for (int j = std::max(0, k - 1); j <= std::min(n - 1, k + 1); ++j) {
    rows.insert(5 * j + 0);
    rows.insert(5 * j + 1);
  }
  for (int r = 2; r < 5; ++r) rows.insert(5 * k + r);
  for (int iv = std::max(1, k); iv <= std::min(n - 1, k + 1); ++iv)
    for (int r = 0; r < per_interval; ++r) rows.insert(5 * n + per_interval * (iv - 1) + r);
  return rows;
}

}  // namespace

TEST_CASE("row and state counts") {
  for (int n = 2; n <= 10; ++n) {
    CHECK(residual_rows(n, false) == 5 * n + 4 * (n - 1));
    CHECK(residual_rows(n, true) == 5 * n + 5 * (n - 1));
    CHECK(degrees_of_freedom(n, false) == 3 * n - 4);
    CHECK(degrees_of_freedom(n, true) == 4 * n - 5);
  }
}

TEST_CASE("zero state and zero measurements give a zero residual") {
  ObservationWindow w;
  w.dt = 0.01;
  w.omega = 377.0;
  w.samples.assign(5, DqPoint{});
  for (int k = 0; k < 5; ++k) w.samples[k].t = 0.01 * k;
  const DseConfig cfg;
  const auto eps = build_residual(Eigen::VectorXd::Zero(30), w, MotorParams{}, cfg);
  CHECK(eps.size() == 45);
  CHECK(eps.isZero(0.0));
  CHECK_THROWS_AS(build_residual(Eigen::VectorXd::Zero(29), w, MotorParams{}, cfg), DimensionMismatch);
}

TEST_CASE("ground truth of a noise-free steady window sits on the residual floor") {
  const auto& f = clean_record();
  const DseConfig cfg;
  for (std::size_t first : {150u, 250u, 350u, 420u, 480u}) {
    const auto w = f.window(first, cfg.window);
    const auto x = truth_state(f.rec, first, cfg.window, f.sc.motor.pole_pairs);
    const auto eps = build_residual(x, w, f.sc.motor, cfg);
    INFO("first sample " << first);
    CHECK(eps.lpNorm<Eigen::Infinity>() <= 1e-3);
  }
}

TEST_CASE("Jacobian sparsity follows the window coupling") {
  const auto& f = clean_record();
  const DseConfig cfg;
  const int n = 6;
  const auto w = f.window(400, n);
  const Eigen::VectorXd x = truth_state(f.rec, 400, n, f.sc.motor.pole_pairs);
  const Eigen::MatrixXd jac =
      numerical_jacobian([&](const Eigen::VectorXd& v) { return build_residual(v, w, f.sc.motor, cfg); }, x);

  for (int k = 0; k < n; ++k) {
    INFO("sample " << k);
    const auto allowed = flux_support(k, n, true);
    for (int field = slot::l_qs; field <= slot::l_dr; ++field)
      for (int r = 0; r < jac.rows(); ++r)
        if (jac(r, 6 * k + field) != 0.0) CHECK(allowed.count(r) == 1);

    // T_e enters its own torque row and the shaft rows of the intervals around k
    std::set<int> te_rows{5 * k + 4};
    if (k >= 1) te_rows.insert(5 * n + 5 * (k - 1) + 4);
    if (k + 1 <= n - 1) te_rows.insert(5 * n + 5 * k + 4);
    for (int r = 0; r < jac.rows(); ++r) {
      const bool nonzero = jac(r, 6 * k + slot::t_e) != 0.0;
      CHECK(nonzero == (te_rows.count(r) == 1));
    }
  }
}

TEST_CASE("residual Jacobian agrees with an independent forward difference") {
  const auto& f = noisy_record();
  const DseConfig cfg;
  const auto w = f.window(200, cfg.window);
  const Eigen::VectorXd x = random_initial_state(cfg.window, 0.3, 11) + truth_state(f.rec, 200, cfg.window, 2);
  auto fn = [&](const Eigen::VectorXd& v) { return build_residual(v, w, f.sc.motor, cfg); };
  const auto central = numerical_jacobian(fn, x);
  const auto forward = forward_difference_jacobian(fn, x);
  CHECK((central - forward).norm() / central.norm() < 1e-4);
}

TEST_CASE("warm start at ground truth stays put") {
  const auto& f = clean_record();
  const DseConfig cfg;
  const auto w = f.window(450, cfg.window);
  const auto x = truth_state(f.rec, 450, cfg.window, 2);
  const auto r = gauss_newton_solve(w, f.sc.motor, cfg, x);
  CHECK(r.iterations <= 2);
  CHECK(r.converged);
  CHECK(r.cost <= r.m * 1e-6);
  CHECK_FALSE(r.cold_start);
}

TEST_CASE("noisy steady window estimates fluxes within 2% rms") {
  const auto& f = noisy_record();
  const DseConfig cfg;
  for (std::size_t first : {120u, 260u, 380u, 470u, 560u}) {
    const auto w = f.window(first, cfg.window);
    const auto r = gauss_newton_solve(w, f.sc.motor, cfg);
    const auto x = truth_state(f.rec, first, cfg.window, 2);
    double err = 0.0, ref = 0.0;
    for (int k = 0; k < cfg.window; ++k)
      for (int s = slot::l_qs; s <= slot::l_dr; ++s) {
        err += std::pow(r.x[6 * k + s] - x[6 * k + s], 2);
        ref += std::pow(x[6 * k + s], 2);
      }
    INFO("first sample " << first);
    CHECK(r.converged);
    CHECK(std::sqrt(err / ref) < 0.02);
    CHECK(r.verdict == Verdict::Healthy);
  }
}

TEST_CASE("rescaling every weight rescales J and keeps the estimate") {
  const auto& f = noisy_record();
  DseConfig cfg;
  const auto w = f.window(300, cfg.window);
  const Eigen::VectorXd x = truth_state(f.rec, 300, cfg.window, 2);
  const double c = 3.0;
  DseConfig scaled = cfg;
  scaled.sigmas = {cfg.sigmas.voltage * c, cfg.sigmas.current * c, cfg.sigmas.flux * c, cfg.sigmas.torque * c,
                   cfg.sigmas.speed * c};
  const double j1 = build_residual(x, w, f.sc.motor, cfg).squaredNorm();
  const double j2 = build_residual(x, w, f.sc.motor, scaled).squaredNorm();
  CHECK(j2 == Approx(j1 / (c * c)).epsilon(1e-12));

  const auto r1 = gauss_newton_solve(w, f.sc.motor, cfg);
  const auto r2 = gauss_newton_solve(w, f.sc.motor, scaled);
  CHECK(r2.cost == Approx(r1.cost / (c * c)).epsilon(1e-4));
  CHECK((r1.x - r2.x).lpNorm<Eigen::Infinity>() < 1e-5 * r1.x.lpNorm<Eigen::Infinity>());
}

TEST_CASE("identical inputs give identical results") {
  const auto& f = noisy_record();
  const DseConfig cfg;
  const auto w = f.window(333, cfg.window);
  const auto a = gauss_newton_solve(w, f.sc.motor, cfg);
  const auto b = gauss_newton_solve(w, f.sc.motor, cfg);
  CHECK(a.x == b.x);
  CHECK(a.cost == b.cost);
  CHECK(a.iterations == b.iterations);
  CHECK(a.p == b.p);
}

TEST_CASE("verdict follows p and the threshold only") {
  const auto& f = noisy_record();
  DseConfig cfg;
  const auto w = f.window(333, cfg.window);
  const auto base = gauss_newton_solve(w, f.sc.motor, cfg);
  CHECK(base.p >= 0.0);
  CHECK(base.p <= 1.0);
  CHECK(base.dof == 15);
  REQUIRE(base.p > 0.0);
  cfg.p_threshold = base.p;
  CHECK(gauss_newton_solve(w, f.sc.motor, cfg).verdict == Verdict::Fault);
  cfg.p_threshold = std::nextafter(base.p, 1.0);
  CHECK(gauss_newton_solve(w, f.sc.motor, cfg).verdict == Verdict::Healthy);
}

TEST_CASE("disjoint windows are independent of their neighbours") {
  const auto& f = noisy_record();
  DseConfig cfg;
  cfg.stride = cfg.window;
  cfg.parallel = true;
  const DqSeries part(f.series.begin() + 100, f.series.begin() + 200);
  const auto sweep = sliding_detection(part, f.omega, f.sc.motor, cfg);
  CHECK_FALSE(sweep.warm_started);
  REQUIRE(sweep.windows.size() == 20);
  for (const auto& out : sweep.windows) {
    REQUIRE(out.result);
    const auto direct = gauss_newton_solve(make_window(std::span(part).subspan(out.first, 5), f.omega), f.sc.motor, cfg);
    CHECK(out.result->x == direct.x);
    CHECK(out.result->cost == direct.cost);
  }

  // sequential warm starts land on the same minima
  cfg.parallel = false;
  const auto warm = sliding_detection(part, f.omega, f.sc.motor, cfg);
  for (std::size_t k = 0; k < warm.windows.size(); ++k)
    CHECK(warm.windows[k].result->cost == Approx(sweep.windows[k].result->cost).epsilon(1e-3));
}

TEST_CASE("solver failures are recorded and the sweep continues") {
  const auto& f = noisy_record();
  DqSeries part(f.series.begin() + 100, f.series.begin() + 120);
  part[10].v_q = std::nan("");
  const auto sweep = sliding_detection(part, f.omega, f.sc.motor, DseConfig{});
  int failed = 0, solved = 0;
  for (const auto& w : sweep.windows) (w.result ? solved : failed) += 1;
  CHECK(failed == 5);
  CHECK(solved == 11);
}

TEST_CASE("unfaulted record stays Healthy; AG fault is flagged inside the fault interval") {
  const DseConfig cfg;
  const auto& nf = noisy_record();
  const auto healthy = sliding_detection(nf.series, nf.omega, nf.sc.motor, cfg,
                                         fault_intervals(nf.sc.fault, 0.0, 6.0));
  int faults = 0;
  for (const auto& w : healthy.windows) {
    REQUIRE(w.result);
    faults += w.result->verdict == Verdict::Fault;
  }
  CHECK(faults == 0);

  const auto& ag = ag_record();
  const auto intervals = fault_intervals(ag.sc.fault, 0.0, 6.0);
  const auto sweep = sliding_detection(ag.series, ag.omega, ag.sc.motor, cfg, intervals);
  int inside = 0;
  for (const auto& w : sweep.windows)
    if (w.result && w.result->verdict == Verdict::Fault && window_inside(w, intervals[1])) ++inside;
  CHECK(inside >= 1);
  CHECK(sweep.intervals[1].verdict == Verdict::Fault);
  CHECK(sweep.intervals[0].verdict == Verdict::Healthy);
}

TEST_CASE("windows over the energization inrush are inconsistent with the sampled model") {
  // Documents why the default configuration skips the first 0.1 s.
  const auto& f = noisy_record();
  DseConfig cfg;
  cfg.energization_block = 0.0;
  const DqSeries head(f.series.begin(), f.series.begin() + 12);
  const auto sweep = sliding_detection(head, f.omega, f.sc.motor, cfg);
  REQUIRE(sweep.windows.front().result);
  CHECK(sweep.windows.front().t_start == 0.0);
  CHECK(sweep.windows.front().result->verdict == Verdict::Fault);
}

TEST_CASE("interval labels") {
  FaultSpec fs;
  const auto iv = fault_intervals(fs, 0.0, 6.0);
  REQUIRE(iv.size() == 3);
  CHECK(iv[0].label == "pre_fault");
  CHECK(iv[1].t_begin == 5.0);
  CHECK(iv[1].t_end == 5.25);
  CHECK(iv[2].label == "post_fault");
}

TEST_CASE("cost never increases across accepted iterations on a noise-free window") {
  const auto& f = clean_record();
  const DseConfig cfg;
  for (std::size_t first : {150u, 450u}) {
    const auto w = f.window(first, cfg.window);
    auto residual = [&](const Eigen::VectorXd& x) { return build_residual(x, w, f.sc.motor, cfg); };
    const auto gn = gauss_newton(residual, random_initial_state(cfg.window, cfg.sigma_init, cfg.seed),
                                 {cfg.tol_delta_j, cfg.max_iter});
    CHECK(gn.converged);
    for (std::size_t k = 1; k < gn.cost_history.size(); ++k) CHECK(gn.cost_history[k] <= gn.cost_history[k - 1]);
  }
}
