#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rfent/linalg.hpp"
#include "rfent/ode.hpp"
#include "rfent/quadrature.hpp"

using namespace rfent;

TEST_CASE("vec and mat basics") {
  Vec v(3);
  v[0] = 1;
  v[1] = 2;
  v[2] = 3;
  CHECK(v.dot(v) == doctest::Approx(14.0));

  Mat m(3);
  m(0, 0) = 4;
  m(0, 1) = 1;
  m(1, 0) = 1;
  m(1, 1) = 3;
  m(2, 2) = 2;
  CHECK(m.det() == doctest::Approx(22.0));

  Vec b(3);
  b[0] = 1;
  b[1] = 2;
  b[2] = 3;
  Vec x(3);
  REQUIRE(m.solve(b, x));
  Vec r = m.mul(x) - b;
  CHECK(r.max_abs() < 1e-13);

  Mat inv;
  REQUIRE(m.inverse(inv));
  Mat id = m.mul(inv);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(id(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("symmetric eigenvalue floor") {
  Mat m(2);
  m(0, 0) = 2;
  m(1, 1) = 5;
  m(0, 1) = m(1, 0) = 1;
  // eigenvalues (7 +- sqrt(13))/2
  CHECK(m.sym_eig_min() == doctest::Approx(0.5 * (7.0 - std::sqrt(13.0))).epsilon(1e-10));
  CHECK(m.is_spd());
  m(0, 0) = -1;
  CHECK_FALSE(m.is_spd());
}

TEST_CASE("gauss rules reproduce moments") {
  auto gl = gauss_legendre(12);
  double s0 = 0, s2 = 0;
  for (size_t i = 0; i < gl.x.size(); ++i) {
    s0 += gl.w[i];
    s2 += gl.w[i] * gl.x[i] * gl.x[i];
  }
  CHECK(s0 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s2 == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  auto gh = gauss_hermite(24);
  double h0 = 0, h2 = 0, h4 = 0;
  for (size_t i = 0; i < gh.x.size(); ++i) {
    h0 += gh.w[i];
    h2 += gh.w[i] * gh.x[i] * gh.x[i];
    h4 += gh.w[i] * std::pow(gh.x[i], 4);
  }
  double sp = std::sqrt(M_PI);
  CHECK(h0 == doctest::Approx(sp).epsilon(1e-13));
  CHECK(h2 == doctest::Approx(0.5 * sp).epsilon(1e-13));
  CHECK(h4 == doctest::Approx(0.75 * sp).epsilon(1e-13));

  for (double alpha : {0.0, 0.5, 1.0}) {
    auto glag = gauss_laguerre(32, alpha);
    double l0 = 0, l1 = 0, l2 = 0;
    for (size_t i = 0; i < glag.x.size(); ++i) {
      l0 += glag.w[i];
      l1 += glag.w[i] * glag.x[i];
      l2 += glag.w[i] * glag.x[i] * glag.x[i];
    }
    CHECK(l0 == doctest::Approx(std::tgamma(alpha + 1)).epsilon(1e-12));
    CHECK(l1 == doctest::Approx(std::tgamma(alpha + 2)).epsilon(1e-12));
    CHECK(l2 == doctest::Approx(std::tgamma(alpha + 3)).epsilon(1e-12));
  }
}

TEST_CASE("gauss-laguerre handles a gaussian-type integrand") {
  // int_0^inf e^{x/2} x^{1/2} e^{-x} dx = Gamma(3/2) 2^{3/2}
  auto glag = gauss_laguerre(64, 0.5);
  double s = 0;
  for (size_t i = 0; i < glag.x.size(); ++i) s += glag.w[i] * std::exp(0.5 * glag.x[i]);
  CHECK(s == doctest::Approx(std::tgamma(1.5) * std::pow(2.0, 1.5)).epsilon(1e-10));
}

TEST_CASE("panel integrator with doubling estimate") {
  auto est = integrate_doubling([](double x) { return std::exp(-x) * std::sin(3 * x); }, 0.0, 2.0,
                                1e-12);
  double exact = (3.0 - std::exp(-2.0) * (3.0 * std::cos(6.0) + std::sin(6.0))) / 10.0;
  CHECK(est.value == doctest::Approx(exact).epsilon(1e-11));
}

TEST_CASE("dp54 integrates a stiff-ish oscillator to tolerance") {
  // y'' = -y, energy-conserving reference
  OdeRhs rhs = [](double, const double* y, double* dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  OdeOptions oo;
  oo.rel_tol = oo.abs_tol = 1e-12;
  OdeSolver solver(2, rhs, oo);
  double y0[2] = {1.0, 0.0};
  auto res = solver.integrate(0.0, 10.0, y0);
  CHECK(res.y[0] == doctest::Approx(std::cos(10.0)).epsilon(1e-9));
  CHECK(res.y[1] == doctest::Approx(-std::sin(10.0)).epsilon(1e-9));
}

TEST_CASE("dp54 lands on requested outputs") {
  OdeRhs rhs = [](double, const double* y, double* dy) { dy[0] = y[0]; };
  OdeOptions oo;
  oo.rel_tol = oo.abs_tol = 1e-12;
  OdeSolver solver(1, rhs, oo);
  double y0[1] = {1.0};
  std::vector<double> outs = {0.25, 0.5, 0.75, 1.0};
  auto res = solver.integrate(0.0, 1.0, y0, outs);
  REQUIRE(res.outputs.size() == outs.size());
  for (size_t i = 0; i < outs.size(); ++i) {
    CHECK(res.outputs[i].s == doctest::Approx(outs[i]));
    CHECK(res.outputs[i].y[0] == doctest::Approx(std::exp(outs[i])).epsilon(1e-10));
  }
}

TEST_CASE("dp54 locates a sign-change event") {
  OdeRhs rhs = [](double, const double* y, double* dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  OdeOptions oo;
  oo.rel_tol = oo.abs_tol = 1e-12;
  OdeSolver solver(2, rhs, oo);
  double y0[2] = {1.0, 0.0};
  std::vector<OdeEvent> evs(1);
  evs[0].fn = [](double, const double* y) { return y[0]; };
  evs[0].stop = true;
  evs[0].s_tol = 1e-11;
  auto res = solver.integrate(0.0, 10.0, y0, {}, &evs);
  REQUIRE(res.truncated);
  CHECK(res.s_end == doctest::Approx(M_PI / 2.0).epsilon(1e-9));
}

TEST_CASE("dp54 integrates backward") {
  OdeRhs rhs = [](double s, const double*, double* dy) { dy[0] = 2.0 * s; };
  OdeSolver solver(1, rhs);
  double y0[1] = {4.0};  // y = s^2 at s = 2
  auto res = solver.integrate(2.0, 0.5, y0);
  CHECK(res.y[0] == doctest::Approx(0.25).epsilon(1e-10));
}
