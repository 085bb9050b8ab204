#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "volfn/errors.hpp"
#include "volfn/estimators.hpp"
#include "volfn/harness.hpp"
#include "volfn/kernels.hpp"
#include "volfn/numutil.hpp"
#include "volfn/simkit.hpp"

using namespace volfn;

TEST_CASE("constant-vol increments have the right variance") {
  ScenarioSpec spec = ScenarioSpec::constant_vol(1, SymMatrix::scalar(0.04), 1.0, 7);
  spec.fine_steps_per_obs = 1;
  double dt = 1e-5;  // n = 1e5 increments
  SimulatedPath path = simulate_path(spec, dt);
  int n = path.series.n_increments();
  REQUIRE(n == 100000);
  double s2 = 0.0;
  for (int i = 1; i <= n; ++i) {
    double d = path.series.increment(i, 0);
    s2 += d * d;
  }
  double var_hat = s2 / (n * dt);
  CHECK(std::abs(var_hat - 0.04) <= 3.0 * std::sqrt(2.0 / n) * 0.04);
}

TEST_CASE("x-jump counts are Poisson(rate * t)") {
  double rate = 5.0;
  int reps = 2000;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    ScenarioSpec spec = ScenarioSpec::constant_vol(1, SymMatrix::scalar(0.04), 1.0,
                                                   derive_seed(123, r));
    spec.fine_steps_per_obs = 1;
    spec.x_jumps.rate = rate;
    spec.x_jumps.law = XJumpSpec::Law::TwoPoint;
    spec.x_jumps.size = 0.05;
    SimulatedPath path = simulate_path(spec, 0.02);  // n = 50, cheap
    total += static_cast<double>(path.x_jump_times.size());
  }
  double mean = total / reps;
  CHECK(std::abs(mean - rate) <= 3.0 * std::sqrt(rate / reps));
}

TEST_CASE("square-root vol is ergodic around cbar") {
  ScenarioSpec spec = ScenarioSpec::square_root_vol(5.0, 0.04, 0.3, -0.5, 50.0, 11);
  spec.fine_steps_per_obs = 10;
  SimulatedPath path = simulate_path(spec, 0.01);
  MatrixFunctional id1 = MatrixFunctional::identity(1);
  double avg = true_integrated_functional(path, id1) / spec.horizon;
  // stationary sd of the time average over t=50 with mixing time 1/kappa:
  // sd ~ xi sqrt(cbar/(2 kappa)) * sqrt(2/(kappa t)) ~ 0.0012; allow 4x
  CHECK(std::abs(avg - 0.04) <= 0.005);

  // independently seeded reference run lands in the same neighborhood
  spec.seed = 1717;
  SimulatedPath ref = simulate_path(spec, 0.01);
  double avg_ref = true_integrated_functional(ref, id1) / spec.horizon;
  CHECK(std::abs(avg - avg_ref) <= 0.01);
}

TEST_CASE("true_integrated_functional") {
  SUBCASE("constant c, g=square: t * c^2") {
    ScenarioSpec spec = ScenarioSpec::constant_vol(1, SymMatrix::scalar(0.04), 1.0, 3);
    SimulatedPath path = simulate_path(spec, 1e-3);
    MatrixFunctional sq = MatrixFunctional::square(1);
    CHECK(true_integrated_functional(path, sq) ==
          doctest::Approx(0.0016).epsilon(1e-12));
  }
  SUBCASE("identity: fine-grid mean times t") {
    ScenarioSpec spec = ScenarioSpec::square_root_vol(5.0, 0.04, 0.3, 0.0, 1.0, 5);
    SimulatedPath path = simulate_path(spec, 1e-3);
    MatrixFunctional id1 = MatrixFunctional::identity(1);
    double mean = 0.0;
    int F = path.n_fine_steps();
    for (int k = 0; k < F; ++k) mean += path.c_fine[k](0, 0);
    mean /= F;
    CHECK(true_integrated_functional(path, id1) ==
          doctest::Approx(mean * 1.0).epsilon(1e-12));
  }
  SUBCASE("grid refinement: m vs 10m within 1e-6 relative") {
    // deterministic square-root relaxation (xi = 0) so the two resolutions
    // follow the same trajectory and the difference is pure quadrature error
    ScenarioSpec spec = ScenarioSpec::square_root_vol(5.0, 0.04, 0.0, 0.0, 0.2, 9);
    spec.vol.c0 = SymMatrix::scalar(0.042);
    spec.fine_steps_per_obs = 2000;
    MatrixFunctional sq = MatrixFunctional::square(1);
    double coarse = true_integrated_functional(simulate_path(spec, 0.01), sq);
    spec.fine_steps_per_obs = 20000;
    double fine = true_integrated_functional(simulate_path(spec, 0.01), sq);
    CHECK(std::abs(coarse - fine) <= 1e-6 * std::abs(fine));
  }
}

TEST_CASE("true_jump_functional") {
  JumpKernel y2 = [](const SymMatrix&, const SymMatrix& y) {
    return y(0, 0) * y(0, 0);
  };
  SUBCASE("no jumps") {
    ScenarioSpec spec = ScenarioSpec::constant_vol(1, SymMatrix::scalar(0.04), 1.0, 3);
    SimulatedPath path = simulate_path(spec, 1e-3);
    CHECK(true_jump_functional(path, y2) == 0.0);
  }
  SUBCASE("one scheduled jump") {
    ScenarioSpec spec = ScenarioSpec::constant_vol(1, SymMatrix::scalar(0.04), 1.0, 3);
    spec.c_jumps.scheduled.push_back({0.4, 0.0225});
    SimulatedPath path = simulate_path(spec, 1e-3);
    REQUIRE(path.c_jump_log.size() == 1);
    CHECK(path.c_jump_log[0].pre(0, 0) == doctest::Approx(0.04));
    CHECK(true_jump_functional(path, y2) ==
          doctest::Approx(5.0625e-4).epsilon(1e-12));
  }
  SUBCASE("multiple jumps add") {
    ScenarioSpec spec = ScenarioSpec::constant_vol(1, SymMatrix::scalar(0.04), 1.0, 3);
    spec.c_jumps.scheduled.push_back({0.2, 0.01});
    spec.c_jumps.scheduled.push_back({0.7, 0.02});
    SimulatedPath path = simulate_path(spec, 1e-3);
    REQUIRE(path.c_jump_log.size() == 2);
    CHECK(true_jump_functional(path, y2) ==
          doctest::Approx(0.0001 + 0.0004).epsilon(1e-12));
  }
}

TEST_CASE("theoretical_limits") {
  MatrixFunctional sq = MatrixFunctional::square(1);
  SUBCASE("constant c, d=1, g=square") {
    ScenarioSpec spec = ScenarioSpec::constant_vol(1, SymMatrix::scalar(0.04), 1.0, 3);
    SimulatedPath path = simulate_path(spec, 1e-3);
    TheoreticalLimits lim = theoretical_limits(path, sq, 1.0);
    CHECK(lim.a1 == doctest::Approx(-0.0016).epsilon(1e-12));
    CHECK(lim.a2 == doctest::Approx(0.0032).epsilon(1e-12));
    CHECK(lim.a3 == 0.0);
    CHECK(lim.a4 == 0.0);
    CHECK(lim.z_var == doctest::Approx(2.048e-5).epsilon(1e-12));
    // theta scaling: a1, a3, a4 scale up; a2 scales down
    TheoreticalLimits lim2 = theoretical_limits(path, sq, 2.0);
    CHECK(lim2.a1 == doctest::Approx(2.0 * lim.a1));
    CHECK(lim2.a2 == doctest::Approx(0.5 * lim.a2));
  }
  SUBCASE("identity kills a2, a3, a4") {
    ScenarioSpec spec = ScenarioSpec::square_root_vol(5.0, 0.04, 0.3, -0.5, 1.0, 21);
    spec.c_jumps.scheduled.push_back({0.5, 0.01});
    SimulatedPath path = simulate_path(spec, 1e-3);
    MatrixFunctional id1 = MatrixFunctional::identity(1);
    TheoreticalLimits lim = theoretical_limits(path, id1, 1.0);
    CHECK(lim.a2 == 0.0);
    CHECK(lim.a3 == 0.0);
    CHECK(std::abs(lim.a4) <= 1e-15);  // quadrature rounding only
    CHECK(lim.a1 == doctest::Approx(-(path.c_fine.front()(0, 0) +
                                      path.c_fine.back()(0, 0)) /
                                    2.0));
  }
  SUBCASE("a3 closed form for the square-root model") {
    // d=1, g=x^2: contraction = 2 xi^2 c, so a3 = -(theta/6) xi^2 int c ds
    ScenarioSpec spec = ScenarioSpec::square_root_vol(5.0, 0.04, 0.3, -0.5, 1.0, 33);
    SimulatedPath path = simulate_path(spec, 1e-3);
    TheoreticalLimits lim = theoretical_limits(path, sq, 1.3);
    MatrixFunctional id1 = MatrixFunctional::identity(1);
    double int_c = true_integrated_functional(path, id1);
    CHECK(lim.a3 == doctest::Approx(-(1.3 / 6.0) * 0.09 * int_c).epsilon(1e-10));
  }
  SUBCASE("a3 under grid refinement (same trajectory, coarser recording)") {
    ScenarioSpec spec = ScenarioSpec::square_root_vol(5.0, 0.04, 0.05, 0.0, 0.1, 77);
    spec.fine_steps_per_obs = 5000;  // fine_dt = 2e-7
    SimulatedPath hi = simulate_path(spec, 1e-3);
    SimulatedPath lo = hi.coarsen(10);
    TheoreticalLimits lim_hi = theoretical_limits(hi, sq, 1.0);
    TheoreticalLimits lim_lo = theoretical_limits(lo, sq, 1.0);
    CHECK(std::abs(lim_hi.a3 - lim_lo.a3) <= 1e-6 * std::abs(lim_hi.a3));
  }
}

TEST_CASE("drift and normal-law jumps") {
  SUBCASE("constant drift shifts increments by b dt") {
    ScenarioSpec spec = ScenarioSpec::constant_vol(1, SymMatrix::scalar(0.04), 1.0, 64);
    spec.fine_steps_per_obs = 1;
    spec.drift = {0.5};
    double dt = 1e-4;
    SimulatedPath path = simulate_path(spec, dt);
    int n = path.series.n_increments();
    double mean = 0.0;
    for (int i = 1; i <= n; ++i) mean += path.series.increment(i, 0);
    mean /= n;
    // mean increment = b dt up to 3 sd(c dt / n)
    CHECK(std::abs(mean - 0.5 * dt) <= 3.0 * std::sqrt(0.04 * dt / n));
    // drift does not disturb the estimator at CLT scale
    MatrixFunctional sq = MatrixFunctional::square(1);
    EstimatorConfig cfg;
    cfg.truncation_enabled = false;
    EstimateReport rep = run_estimate(path, sq, cfg);
    CHECK(std::abs(rep.error) <= 5.0 * std::sqrt(rep.variance_est));
  }
  SUBCASE("normal size law draws per-component jumps") {
    ScenarioSpec spec = ScenarioSpec::constant_vol(1, SymMatrix::scalar(0.04), 1.0, 65);
    spec.fine_steps_per_obs = 1;
    spec.x_jumps.rate = 20.0;
    spec.x_jumps.law = XJumpSpec::Law::Normal;
    spec.x_jumps.size = 0.03;
    SimulatedPath path = simulate_path(spec, 1e-3);
    CHECK(path.x_jump_times.size() > 5);
    for (double t : path.x_jump_times) {
      CHECK(t > 0.0);
      CHECK(t <= 1.0);
    }
    for (double v : path.series.values) CHECK(std::isfinite(v));
  }
}

TEST_CASE("determinism and PSD") {
  ScenarioSpec spec = ScenarioSpec::square_root_vol(5.0, 0.04, 0.3, -0.5, 1.0, 404);
  spec.c_jumps.rate = 2.0;
  spec.x_jumps.rate = 3.0;
  spec.x_jumps.size = 0.02;
  SimulatedPath a = simulate_path(spec, 1e-3);
  SimulatedPath b = simulate_path(spec, 1e-3);
  CHECK(a.series.values == b.series.values);  // bit identical
  CHECK(a.fine_x == b.fine_x);
  CHECK(a.c_jump_log.size() == b.c_jump_log.size());

  spec.seed = 405;
  SimulatedPath c = simulate_path(spec, 1e-3);
  CHECK(a.series.values != c.series.values);

  for (const auto& m : a.c_fine) CHECK(m(0, 0) >= 0.0);
}

TEST_CASE("multivariate PSD with jumps") {
  ScenarioSpec spec;
  spec.dim = 2;
  spec.horizon = 1.0;
  spec.seed = 90;
  spec.vol.model = VolSpec::Model::SquareRoot;
  spec.vol.kappa = {5.0, 3.0};
  spec.vol.cbar = {0.04, 0.09};
  spec.vol.xi = {0.3, 0.2};
  spec.vol.rho = {-0.5, 0.0};
  spec.vol.c0 = SymMatrix::diagonal({0.04, 0.09});
  spec.c_jumps.rate = 3.0;
  SimulatedPath path = simulate_path(spec, 1e-3);
  for (const auto& m : path.c_fine) CHECK(min_eigenvalue(m) >= 0.0);
  for (const auto& ev : path.c_jump_log) {
    CHECK(min_eigenvalue(ev.pre) >= 0.0);
    CHECK(ev.size(0, 0) > 0.0);
    CHECK(ev.size(0, 0) == ev.size(1, 1));  // common diagonal add
  }
}

TEST_CASE("observation values subsample the fine path exactly") {
  ScenarioSpec spec = ScenarioSpec::square_root_vol(5.0, 0.04, 0.3, -0.5, 1.0, 2);
  spec.fine_steps_per_obs = 10;
  spec.x_jumps.rate = 5.0;
  spec.x_jumps.size = 0.05;
  SimulatedPath path = simulate_path(spec, 1e-3);
  int n = path.series.n_observations();
  for (int i = 0; i < n; ++i)
    CHECK(path.series.value(i, 0) == path.fine_x_at(i * spec.fine_steps_per_obs, 0));
}

TEST_CASE("truncation sanity: truncated spots track c through x-jumps") {
  // With jumps of a few big increments, the truncated quarticity stays near
  // the truth while the untruncated one overshoots.
  MatrixFunctional sq = MatrixFunctional::square(1);
  double err_trunc = 0.0, err_plain = 0.0;
  int reps = 20;
  for (int r = 0; r < reps; ++r) {
    ScenarioSpec spec = ScenarioSpec::constant_vol(1, SymMatrix::scalar(0.04), 1.0,
                                                   derive_seed(31, r));
    spec.fine_steps_per_obs = 1;
    spec.x_jumps.rate = 5.0;
    spec.x_jumps.size = 0.05;
    SimulatedPath path = simulate_path(spec, 1.0 / 2000.0);
    double truth = true_integrated_functional(path, sq);
    int k_n = window_size(path.series.delta_n, 1.0);
    double u_n = 0.8 * std::pow(path.series.delta_n, 0.47);
    auto trunc = spot_cov_series(path.series, k_n, u_n);
    auto plain = spot_cov_series(path.series, k_n,
                                 std::numeric_limits<double>::infinity());
    err_trunc += plugin_functional(trunc, sq, path.series.delta_n) - truth;
    err_plain += plugin_functional(plain, sq, path.series.delta_n) - truth;
  }
  CHECK(std::abs(err_trunc / reps) * 5.0 < std::abs(err_plain / reps));
  CHECK(err_plain / reps > 0.0);  // jumps inflate the uncorrected estimate
}

TEST_CASE("scenario json round trip and validation") {
  ScenarioSpec spec = ScenarioSpec::square_root_vol(5.0, 0.04, 0.3, -0.5, 1.0, 42);
  spec.c_jumps.rate = 1.5;
  spec.c_jumps.scheduled.push_back({0.4, 0.0225});
  spec.x_jumps.rate = 5.0;
  spec.x_jumps.size = 0.05;
  nlohmann::json j = spec.to_json();
  ScenarioSpec back = ScenarioSpec::from_json(j);
  CHECK(back.dim == 1);
  CHECK(back.vol.kappa[0] == doctest::Approx(5.0));
  CHECK(back.vol.rho[0] == doctest::Approx(-0.5));
  CHECK(back.c_jumps.scheduled.size() == 1);
  CHECK(back.x_jumps.size == doctest::Approx(0.05));
  // same seed + same spec -> same path
  SimulatedPath a = simulate_path(spec, 1e-3);
  SimulatedPath b = simulate_path(back, 1e-3);
  CHECK(a.series.values == b.series.values);

  nlohmann::json bad = j;
  bad["vol"]["kappa"] = -1.0;
  CHECK_THROWS_AS(ScenarioSpec::from_json(bad), ConfigError);
  nlohmann::json bad2 = j;
  bad2["c_jumps"]["scheduled"][0]["size"] = -0.1;
  CHECK_THROWS_AS(ScenarioSpec::from_json(bad2), ConfigError);

  // constant-vol matrices must be PSD
  ScenarioSpec cspec;
  cspec.dim = 2;
  cspec.vol.model = VolSpec::Model::Constant;
  cspec.vol.c0 = SymMatrix(2, {1.0, 2.0, 2.0, 1.0});
  CHECK_THROWS_AS(cspec.validate(), ConfigError);

  // horizon must be a multiple of delta_n
  ScenarioSpec good = ScenarioSpec::constant_vol(1, SymMatrix::scalar(0.04), 1.0, 1);
  CHECK_THROWS_AS(simulate_path(good, 3e-4), ConfigError);
}
