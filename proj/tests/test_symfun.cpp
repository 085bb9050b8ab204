#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "volfn/errors.hpp"
#include "volfn/functional.hpp"
#include "volfn/kernels.hpp"
#include "volfn/numutil.hpp"

using namespace volfn;
using testutil::fd_grad_oracle;
using testutil::fd_hess_oracle;
using testutil::midpoint_integral;
using testutil::random_psd;
using testutil::random_sym;

TEST_CASE("functional catalog: values, gradients, degree") {
  MatrixFunctional id1 = MatrixFunctional::identity(1);
  SymMatrix c = SymMatrix::scalar(0.04);
  CHECK(id1.eval(c) == doctest::Approx(0.04).epsilon(1e-15));
  CHECK(id1.grad(c)(0, 0) == doctest::Approx(1.0));
  CHECK(id1.jump_kernel_vanishes());

  MatrixFunctional sq = MatrixFunctional::square(1);
  CHECK(sq.eval(c) == doctest::Approx(0.0016).epsilon(1e-15));
  CHECK(sq.grad(c)(0, 0) == doctest::Approx(0.08));
  CHECK(sq.hess(c)(0, 0, 0, 0) == doctest::Approx(2.0));
  CHECK(sq.jump_kernel_vanishes());

  MatrixFunctional cb = MatrixFunctional::cube(1);
  CHECK(cb.eval(c) == doctest::Approx(6.4e-5).epsilon(1e-15));
  CHECK_FALSE(cb.jump_kernel_vanishes());
  CHECK(cb.growth_exponent() == doctest::Approx(3.0));

  MatrixFunctional tp = MatrixFunctional::from_name("trace_power:2", 2);
  SymMatrix x(2, {1.0, 0.2, 0.2, 0.5});
  CHECK(tp.eval(x) == doctest::Approx(1.0 + 0.04 + 0.04 + 0.25).epsilon(1e-15));
  CHECK(tp.jump_kernel_vanishes());

  MatrixFunctional ep = MatrixFunctional::from_name("entry_power:1,2,2", 2);
  CHECK(ep.eval(x) == doctest::Approx(0.04).epsilon(1e-14));

  CHECK_THROWS_AS(MatrixFunctional::from_name("logdet", 1), ConfigError);
  CHECK_THROWS_AS(MatrixFunctional::from_name("entry_power:0,1,2", 2), ConfigError);
  CHECK_THROWS_AS(sq.eval(x), ConfigError);  // dimension mismatch
}

TEST_CASE("analytic derivatives agree with the finite-difference oracle") {
  auto rng = testutil::test_rng(12345);
  const char* names[] = {"square", "cube", "trace_power:2", "trace_power:3",
                         "entry_power:1,2,3"};
  for (const char* name : names) {
    for (int d : {1, 2, 3}) {
      if (d == 1 && std::string(name).find("1,2") != std::string::npos)
        continue;  // off-diagonal entry needs d >= 2
      MatrixFunctional g = MatrixFunctional::from_name(name, d);
      for (int trial = 0; trial < 3; ++trial) {
        SymMatrix x = random_psd(d, rng, 0.7);
        auto f = [&](const SymMatrix& m) { return g.eval(m); };
        SymMatrix gr_fd = fd_grad_oracle(f, x);
        SymMatrix gr = g.grad(x);
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k)
            CHECK(gr(j, k) ==
                  doctest::Approx(gr_fd(j, k)).epsilon(1e-6).scale(1.0));
        auto H_fd = fd_hess_oracle(f, x);
        HessTensor H = g.hess(x);
        double hmax = 0.0;
        for (double v : H.data()) hmax = std::max(hmax, std::abs(v));
        // FD second differences carry ~|g| eps / h^2 roundoff, so compare
        // with an absolute band tied to the tensor scale
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l)
              for (int m = 0; m < d; ++m) {
                double want = H_fd[((static_cast<size_t>(j) * d + k) * d + l) * d + m];
                CHECK(std::abs(H(j, k, l, m) - want) <= 2e-4 * (1.0 + hmax));
              }
      }
    }
  }
}

TEST_CASE("library finite-difference mode matches analytic on built-ins") {
  auto rng = testutil::test_rng(999);
  for (const char* name : {"square", "trace_power:2", "trace_power:3"}) {
    for (int d : {1, 2}) {
      MatrixFunctional g = MatrixFunctional::from_name(name, d);
      MatrixFunctional g_fd = MatrixFunctional::custom(
          g.name(), d, g.growth_exponent(),
          [g](const SymMatrix& x) { return g.eval(x); });
      CHECK(g_fd.derivative_mode() == DerivativeMode::FiniteDifference);
      for (int trial = 0; trial < 4; ++trial) {
        SymMatrix x = random_psd(d, rng, 0.5);
        double ha = h_from_g(g, x);
        double hf = h_from_g(g_fd, x);
        CHECK(std::abs(ha - hf) <= 1e-6 * (1.0 + std::abs(ha)));
        double ba = hbar_from_g(g, x);
        double bf = hbar_from_g(g_fd, x);
        CHECK(std::abs(ba - bf) <= 1e-6 * (1.0 + std::abs(ba)));
      }
    }
  }
}

TEST_CASE("h examples") {
  MatrixFunctional sq = MatrixFunctional::square(1);
  // d=1, g=x^2: h(x) = 2x^2
  CHECK(h_from_g(sq, SymMatrix::scalar(0.04)) ==
        doctest::Approx(0.0032).epsilon(1e-14));

  MatrixFunctional id1 = MatrixFunctional::identity(1);
  CHECK(h_from_g(id1, SymMatrix::scalar(0.123)) == 0.0);

  // d=2, g=tr(x^2): contract the FD-oracle Hessian
  MatrixFunctional tp = MatrixFunctional::from_name("trace_power:2", 2);
  SymMatrix x(2, {1.0, 0.2, 0.2, 0.5});
  auto H = fd_hess_oracle([&](const SymMatrix& m) { return tp.eval(m); }, x);
  double want = 0.0;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m)
          want += 0.5 * H[((static_cast<size_t>(j) * 2 + k) * 2 + l) * 2 + m] *
                  (x(j, l) * x(k, m) + x(j, m) * x(k, l));
  CHECK(h_from_g(tp, x) == doctest::Approx(want).epsilon(1e-4));
}

TEST_CASE("hbar examples") {
  MatrixFunctional sq = MatrixFunctional::square(1);
  // d=1, g=x^2: hbar(c) = 8c^4 -> asymptotic variance 8 int c^4
  CHECK(hbar_from_g(sq, SymMatrix::scalar(0.04)) ==
        doctest::Approx(2.048e-5).epsilon(1e-12));

  MatrixFunctional id1 = MatrixFunctional::identity(1);
  double c = 0.37;
  CHECK(hbar_from_g(id1, SymMatrix::scalar(c)) ==
        doctest::Approx(2.0 * c * c).epsilon(1e-14));

  MatrixFunctional tp = MatrixFunctional::from_name("trace_power:2", 2);
  SymMatrix x(2, {1.0, 0.2, 0.2, 0.5});
  SymMatrix D = fd_grad_oracle([&](const SymMatrix& m) { return tp.eval(m); }, x);
  double want = 0.0;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m)
          want += D(j, k) * D(l, m) * (x(j, l) * x(k, m) + x(j, m) * x(k, l));
  CHECK(hbar_from_g(tp, x) == doctest::Approx(want).epsilon(1e-4));
}

TEST_CASE("bias kernel G") {
  MatrixFunctional sq = MatrixFunctional::square(1);
  // g=x^2: G(x,y) = -y^2/6 for any x
  double y = 0.02;
  CHECK(bias_kernel_G(sq, SymMatrix::scalar(0.3), SymMatrix::scalar(y)) ==
        doctest::Approx(-y * y / 6.0).epsilon(1e-12));

  // y=0 -> 0 exactly
  MatrixFunctional cb = MatrixFunctional::cube(1);
  CHECK(bias_kernel_G(cb, SymMatrix::scalar(1.0), SymMatrix::scalar(0.0)) == 0.0);

  // g=x^3 at (x,y)=(1,0.5) against a 1e5-point midpoint oracle
  double x0 = 1.0, y0 = 0.5;
  auto g3 = [](double v) { return v * v * v; };
  double oracle = midpoint_integral([&](double w) {
    return g3(x0 + w * y0) - w * g3(x0 + y0) - (1.0 - w) * g3(x0);
  });
  CHECK(std::abs(bias_kernel_G(cb, SymMatrix::scalar(x0), SymMatrix::scalar(y0)) -
                 oracle) <= 1e-10);
}

TEST_CASE("bias kernel G'") {
  MatrixFunctional sq = MatrixFunctional::square(1);
  double y = 0.02;
  // g=x^2: ddg == 2, so G' = -(1/8)(2+2)(1/3) y^2 = -y^2/6
  CHECK(bias_kernel_Gprime(sq, SymMatrix::scalar(0.3), SymMatrix::scalar(y)) ==
        doctest::Approx(-y * y / 6.0).epsilon(1e-12));

  CHECK(bias_kernel_Gprime(sq, SymMatrix::scalar(0.3), SymMatrix::scalar(0.0)) == 0.0);

  // g=x^4 at (1, 0.3): ddg(v) = 12 v^2, Riemann oracle
  MatrixFunctional p4 = MatrixFunctional::entry_power(1, 1, 1, 4);
  double x0 = 1.0, y0 = 0.3;
  auto ddg = [](double v) { return 12.0 * v * v; };
  double oracle = midpoint_integral([&](double w) {
    return -(ddg(x0) + ddg(x0 + (1.0 - w) * y0)) * w * w * y0 * y0 / 8.0;
  });
  CHECK(std::abs(bias_kernel_Gprime(p4, SymMatrix::scalar(x0), SymMatrix::scalar(y0)) -
                 oracle) <= 1e-10);
}

TEST_CASE("bias kernel G'' = G - G'") {
  // quadratic g: G and G' coincide, so G'' == 0 (the quarticity case)
  MatrixFunctional sq = MatrixFunctional::square(1);
  for (double x0 : {0.01, 0.3, 2.0})
    for (double y0 : {-0.1, 0.02, 0.5})
      CHECK(std::abs(bias_kernel_Gsecond(sq, SymMatrix::scalar(x0),
                                         SymMatrix::scalar(y0))) <= 1e-15);

  CHECK(bias_kernel_Gsecond(sq, SymMatrix::scalar(0.3), SymMatrix::scalar(0.0)) == 0.0);

  // cubic g at (1, 0.5): dense oracle for G - G'
  MatrixFunctional cb = MatrixFunctional::cube(1);
  double x0 = 1.0, y0 = 0.5;
  auto g3 = [](double v) { return v * v * v; };
  auto ddg = [](double v) { return 6.0 * v; };
  double oracle_G = midpoint_integral([&](double w) {
    return g3(x0 + w * y0) - w * g3(x0 + y0) - (1.0 - w) * g3(x0);
  });
  double oracle_Gp = midpoint_integral([&](double w) {
    return -(ddg(x0) + ddg(x0 + (1.0 - w) * y0)) * w * w * y0 * y0 / 8.0;
  });
  CHECK(bias_kernel_Gsecond(cb, SymMatrix::scalar(x0), SymMatrix::scalar(y0)) ==
        doctest::Approx(oracle_G - oracle_Gp).epsilon(1e-9));
}

TEST_CASE("custom functional with requires_psd projects dipping arguments") {
  // g defined only on the PSD cone (guards against negative eigenvalues);
  // the G kernel evaluates it at x+wy with a signed jump y
  auto guarded = [](const SymMatrix& x) {
    if (min_eigenvalue(x) < -1e-12)
      throw NumericalError("evaluated off the PSD cone");
    double s = 0.0;
    for (double ev : sym_eigenvalues(x)) s += std::sqrt(std::max(ev, 0.0)) * ev;
    return s;
  };
  MatrixFunctional g =
      MatrixFunctional::custom("psd_only", 1, 3.0, guarded, {}, {}, true);
  SymMatrix x = SymMatrix::scalar(0.04);
  SymMatrix y = SymMatrix::scalar(-0.1);  // x + y is negative definite
  double v = 0.0;
  CHECK_NOTHROW(v = bias_kernel_G(g, x, y));
  CHECK(std::isfinite(v));
  // without the flag the same evaluation escapes the cone and throws
  MatrixFunctional raw = MatrixFunctional::custom("psd_only", 1, 3.0, guarded);
  CHECK_THROWS_AS(bias_kernel_G(raw, x, y), NumericalError);
}

TEST_CASE("invariant: hessian symmetries hold to 1e-8 relative") {
  auto rng = testutil::test_rng(777);
  for (const char* name : {"trace_power:3", "entry_power:1,2,3"}) {
    MatrixFunctional g = MatrixFunctional::from_name(name, 2);
    SymMatrix x = random_psd(2, rng);
    HessTensor H = g.hess(x);
    double scale = 0.0;
    for (double v : H.data()) scale = std::max(scale, std::abs(v));
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          for (int m = 0; m < 2; ++m) {
            CHECK(std::abs(H(j, k, l, m) - H(l, m, j, k)) <= 1e-8 * (1 + scale));
            CHECK(std::abs(H(j, k, l, m) - H(k, j, l, m)) <= 1e-8 * (1 + scale));
            CHECK(std::abs(H(j, k, l, m) - H(j, k, m, l)) <= 1e-8 * (1 + scale));
          }
  }
}

TEST_CASE("invariant: G growth bound |G| <= K (1+|x|)^p |y|^2") {
  auto rng = testutil::test_rng(31337);
  MatrixFunctional cb = MatrixFunctional::cube(1);
  double p = cb.growth_exponent();
  // fit K on one batch, verify on a fresh one
  double K = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    SymMatrix x = random_psd(1, rng, 1.0);
    SymMatrix y = random_sym(1, rng, 0.5);
    double bound = std::pow(1.0 + x.frobenius_norm(), p) *
                   y.frobenius_norm() * y.frobenius_norm();
    K = std::max(K, std::abs(bias_kernel_G(cb, x, y)) / bound);
  }
  K *= 1.5;
  for (int trial = 0; trial < 200; ++trial) {
    SymMatrix x = random_psd(1, rng, 1.0);
    SymMatrix y = random_sym(1, rng, 0.5);
    double bound = std::pow(1.0 + x.frobenius_norm(), p) *
                   y.frobenius_norm() * y.frobenius_norm();
    CHECK(std::abs(bias_kernel_G(cb, x, y)) <= K * bound);
  }
}

TEST_CASE("invariant: quadrature converges (doubling nodes is a no-op for poly g)") {
  MatrixFunctional p6 = MatrixFunctional::entry_power(1, 1, 1, 6);
  SymMatrix x = SymMatrix::scalar(0.8);
  SymMatrix y = SymMatrix::scalar(0.4);
  CHECK(std::abs(bias_kernel_G(p6, x, y, 16) - bias_kernel_G(p6, x, y, 32)) <= 1e-10);
  CHECK(std::abs(bias_kernel_Gprime(p6, x, y, 16) -
                 bias_kernel_Gprime(p6, x, y, 32)) <= 1e-10);

  MatrixFunctional tp3 = MatrixFunctional::from_name("trace_power:3", 2);
  auto rng = testutil::test_rng(5);
  SymMatrix X = random_psd(2, rng);
  SymMatrix Y = random_sym(2, rng, 0.3);
  CHECK(std::abs(bias_kernel_G(tp3, X, Y, 16) - bias_kernel_G(tp3, X, Y, 32)) <= 1e-10);
}

TEST_CASE("invariant: hbar nonnegative on PSD arguments") {
  auto rng = testutil::test_rng(2024);
  for (const char* name : {"identity", "square", "trace_power:2", "trace_power:3"}) {
    for (int d : {1, 2, 3}) {
      MatrixFunctional g = MatrixFunctional::from_name(name, d);
      for (int trial = 0; trial < 25; ++trial) {
        SymMatrix x = random_psd(d, rng, 0.8, 1e-6);
        CHECK(hbar_from_g(g, x) >= -1e-12);
      }
    }
  }
}

TEST_CASE("gauss-legendre rule integrates polynomials exactly") {
  const Quadrature& q = gauss_legendre_01(16);
  double sum_w = 0.0;
  for (double w : q.weights) sum_w += w;
  CHECK(sum_w == doctest::Approx(1.0).epsilon(1e-14));
  // int_0^1 w^31 dw = 1/32, the highest degree 16 nodes must get exactly
  double acc = 0.0;
  for (size_t i = 0; i < q.nodes.size(); ++i)
    acc += q.weights[i] * std::pow(q.nodes[i], 31);
  CHECK(acc == doctest::Approx(1.0 / 32.0).epsilon(1e-13));
}

TEST_CASE("normal quantile accuracy") {
  CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) <= 1e-9);
  CHECK(std::abs(normal_quantile(0.75) - 0.674489750196082) <= 1e-9);
  CHECK(std::abs(normal_quantile(0.5)) <= 1e-12);
  CHECK(normal_quantile(0.025) == doctest::Approx(-normal_quantile(0.975)));
  CHECK_THROWS_AS(normal_quantile(0.0), ConfigError);
  CHECK_THROWS_AS(normal_quantile(1.0), ConfigError);
}

TEST_CASE("psd projection and eigenvalues") {
  SymMatrix x(2, {1.0, 2.0, 2.0, 1.0});  // eigenvalues 3 and -1
  auto ev = sym_eigenvalues(x);
  CHECK(ev.front() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(ev.back() == doctest::Approx(3.0).epsilon(1e-12));
  SymMatrix pr = psd_project(x);
  CHECK(min_eigenvalue(pr) >= -1e-12);
  // projected matrix is 1.5 on diagonal, 1.5 off (3 * vv^T with v=(1,1)/sqrt2)
  CHECK(pr(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(pr(0, 1) == doctest::Approx(1.5).epsilon(1e-12));
}
