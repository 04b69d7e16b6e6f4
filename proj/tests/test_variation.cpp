#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rfent/variation.hpp"

using namespace rfent;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v[0] = a;
  v[1] = b;
  return v;
}
Vec v3(double a, double b, double c) {
  Vec v(3);
  v[0] = a;
  v[1] = b;
  v[2] = c;
  return v;
}

const ManifoldModel& sphere_warped() {
  static ManifoldModel m = [] {
    WarpedSpec spec;
    spec.dim = 3;
    spec.mesh = 256;
    spec.s_max = M_PI;
    spec.closed = true;
    spec.phi0 = [](double s) { return std::sin(s); };
    spec.horizon = 0.1;
    return ManifoldModel::warped(spec);
  }();
  return m;
}

}  // namespace

TEST_CASE("flat jacobi frame: J_i(t) = 2 sqrt(t) E_i") {
  auto m = ManifoldModel::flat(3);
  Vec V = v3(0.5, -0.2, 0.8);
  for (double t : {0.1, 1.0}) {
    auto jf = jacobi_propagate(m, V, t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(jf.J_end(i, j) ==
              doctest::Approx(i == j ? 2.0 * std::sqrt(t) : 0.0).epsilon(1e-8).scale(1.0));
    CHECK(jf.detL == doctest::Approx(std::pow(2.0, 3) * std::pow(t, 1.5)).epsilon(1e-8));
    CHECK(std::isinf(jf.tau_V));
  }
}

TEST_CASE("einstein center frame matches the isotropic closed form") {
  for (double kap : {-1.0, 1.0}) {
    auto m = ManifoldModel::einstein(2, kap);
    oracles::EinsteinOracle eo{2, kap};
    double t = (kap > 0) ? 0.2 : 1.0;
    auto jf = jacobi_propagate(m, Vec::zero(2), t);
    CHECK(jf.detL == doctest::Approx(eo.detL_center(t)).epsilon(1e-8));
  }
}

TEST_CASE("small-time law detL / t^{n/2} -> 2^n") {
  double t = 1e-4;
  auto flat = ManifoldModel::flat(2);
  auto hyp = ManifoldModel::einstein(2, -1.0);
  auto sph = ManifoldModel::einstein(2, 1.0);
  const auto& w = sphere_warped();
  struct Case {
    const ManifoldModel* m;
    Vec V;
  };
  std::vector<Case> cases = {{&flat, v2(1.5, -0.7)},
                             {&hyp, v2(0.8, 0.6)},
                             {&sph, v2(1.2, 0.0)},
                             {&w, v3(0.9, 0.4, -0.3)}};
  for (auto& c : cases) {
    auto jf = jacobi_propagate(*c.m, c.V, t);
    double n = c.m->dim();
    double ratio = jf.detL / std::pow(t, 0.5 * n) / std::pow(2.0, n);
    CHECK(std::abs(ratio - 1.0) <= 1e-2);
  }
}

TEST_CASE("jacobi frames agree with the shooting finite-difference oracle") {
  auto check = [](const ManifoldModel& m, const Vec& V, double t) {
    auto jf = jacobi_propagate(m, V, t);
    Mat fd = jacobi_fd_oracle(m, V, t);
    double scale = fd.max_abs();
    for (int i = 0; i < m.dim(); ++i)
      for (int j = 0; j < m.dim(); ++j)
        CHECK(std::abs(jf.J_end(i, j) - fd(i, j)) <= 1e-3 * scale);
  };
  check(ManifoldModel::einstein(2, -1.0), v2(0.7, -0.3), 1.0);
  check(ManifoldModel::einstein(2, -1.0), v2(0.0, 0.9), 0.1);
  check(ManifoldModel::einstein(2, 1.0), v2(0.5, 0.2), 0.3);
  check(ManifoldModel::einstein(3, 1.0), v3(0.4, -0.1, 0.3), 0.1);
  check(sphere_warped(), v3(0.5, 0.3, -0.2), 0.08);
}

TEST_CASE("einstein center: FD oracle columns are isotropic") {
  auto m = ManifoldModel::einstein(2, -1.0);
  Mat fd = jacobi_fd_oracle(m, Vec::zero(2), 1.0);
  CHECK(std::abs(fd(0, 0) - fd(1, 1)) <= 1e-8);
  CHECK(std::abs(fd(0, 1)) <= 1e-8);
}

TEST_CASE("sphere radial shot: tau_V matches the antipode arrival closed form") {
  // r(tau) = pi with r(t) = sqrt(2) v atan... for kappa=+1 the radial chart
  // solves artanh(sqrt(2) sqrt(t)) = pi / (sqrt(2) v)
  auto m = ManifoldModel::einstein(2, 1.0);
  double v = 6.0;
  double tau_exact = std::pow(std::tanh(M_PI / (std::sqrt(2.0) * v)) / std::sqrt(2.0), 2);
  auto jf = jacobi_propagate(m, v2(v, 0.0), 0.2);
  CHECK(jf.tau_V == doctest::Approx(tau_exact).epsilon(5e-3));
  CHECK(jf.tau_V < 0.2);
  CHECK(jf.detL == 0.0);  // convention: zero from tau_V on
  // before tau the determinant is positive
  auto early = jacobi_propagate(m, v2(v, 0.0), 0.8 * tau_exact);
  CHECK(early.detL > 0.0);
}

TEST_CASE("detL is invariant under rotations of the initial frame") {
  auto m = ManifoldModel::einstein(2, -1.0);
  Vec V = v2(0.6, 0.2);
  auto plain = jacobi_propagate(m, V, 0.8);
  JacobiOptions jo;
  jo.frame = Mat(2);
  double c = std::cos(0.7), s = std::sin(0.7);
  jo.frame(0, 0) = c;
  jo.frame(0, 1) = -s;
  jo.frame(1, 0) = s;
  jo.frame(1, 1) = c;
  auto rot = jacobi_propagate(m, V, 0.8, jo);
  CHECK(rot.detL == doctest::Approx(plain.detL).epsilon(1e-9));
}

TEST_CASE("transported frame gram law <E~i, E~j> = (eta/t) delta") {
  auto run = [](const ManifoldModel& m, const Vec& V, double t) {
    auto g = shoot(m, V, t);
    auto tf = transported_frame(m, g, 33);
    CHECK(tf.max_gram_residual <= 1e-6);
    // terminal condition delta_ij and the midpoint value eta/t = 1/2
    const Mat& last = tf.gram.back();
    for (int i = 0; i < m.dim(); ++i) CHECK(last(i, i) == doctest::Approx(1.0).epsilon(1e-8));
  };
  run(ManifoldModel::flat(2), v2(0.8, -0.5), 1.0);
  run(ManifoldModel::einstein(2, -1.0), v2(0.6, 0.3), 1.0);
  run(ManifoldModel::einstein(2, 1.0), v2(0.5, -0.2), 0.25);
  run(sphere_warped(), v3(0.4, 0.2, 0.3), 0.08);
}

TEST_CASE("flat transported frame is sqrt(eta/t) E") {
  auto m = ManifoldModel::flat(2);
  auto g = shoot(m, v2(0.5, 0.1), 1.0);
  auto tf = transported_frame(m, g, 17);
  for (size_t k = 0; k < tf.eta.size(); ++k) {
    double expect = tf.eta[k] / 1.0;
    for (int i = 0; i < 2; ++i) CHECK(tf.gram[k](i, i) == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("density closed forms") {
  // flat: 2^n e^{|V|^2} independent of t
  auto f2 = ManifoldModel::flat(2);
  Vec V = v2(0.8, -0.4);
  double expect = 4.0 * std::exp(V.dot(V));
  CHECK(density(f2, V, 0.3) == doctest::Approx(expect).epsilon(1e-8));
  CHECK(density(f2, V, 1.7) == doctest::Approx(expect).epsilon(1e-8));

  // hyperbolic center: strict decrease, against the 1-D closed form
  auto h2 = ManifoldModel::einstein(2, -1.0);
  oracles::EinsteinOracle eo{2, -1.0};
  double d01 = density(h2, Vec::zero(2), 0.1);
  double d10 = density(h2, Vec::zero(2), 1.0);
  CHECK(d01 == doctest::Approx(eo.density_center(0.1)).epsilon(1e-7));
  CHECK(d10 == doctest::Approx(eo.density_center(1.0)).epsilon(1e-7));
  CHECK(d10 < d01);
}

TEST_CASE("density small-time limit 2^n e^{|V|^2}") {
  double t = 1e-4;
  for (double vnorm : {0.5, 1.4, 2.0}) {
    auto m = ManifoldModel::einstein(2, -1.0);
    Vec V = v2(vnorm, 0.0);
    double d = density(m, V, t);
    CHECK(std::abs(d * std::exp(-V.dot(V)) / 4.0 - 1.0) <= 1e-2);
  }
}

TEST_CASE("density monotonicity reports") {
  // flat: constant density, equality case
  auto f2 = ManifoldModel::flat(2);
  auto rep = density_monotonicity_check(f2, v2(0.7, 0.2), {0.1, 0.5, 1.0, 2.0});
  CHECK(rep.monotone_pass);
  CHECK(rep.logderiv_pass);
  for (size_t k = 1; k < rep.density.size(); ++k)
    CHECK(rep.density[k] == doctest::Approx(rep.density[0]).epsilon(1e-7));

  // hyperbolic center: strictly decreasing
  auto h3 = ManifoldModel::einstein(3, -1.0);
  auto rh = density_monotonicity_check(h3, Vec::zero(3), {0.1, 0.5, 1.0, 2.0});
  CHECK(rh.monotone_pass);
  CHECK(rh.logderiv_pass);
  for (size_t k = 1; k < rh.density.size(); ++k) CHECK(rh.density[k] < rh.density[k - 1]);

  // sphere shrinker inside the existence window
  auto s2 = ManifoldModel::einstein(2, 1.0);
  auto rs = density_monotonicity_check(s2, v2(0.4, 0.0), {0.05, 0.15, 0.3, 0.4});
  CHECK(rs.monotone_pass);
  CHECK(rs.logderiv_pass);
}

TEST_CASE("harnack form traces back to the scalar harnack") {
  auto run = [](const ManifoldModel& m, const Vec& u, double t, const Vec& bp, double tol) {
    auto b = m.curvature(u, t);
    int n = m.dim();
    std::vector<Vec> frame;
    for (int i = 0; i < n; ++i) {
      Vec e = Vec::basis(n, i);
      for (const auto& f : frame) e -= b.pt.inner(e, f) * f;
      e *= 1.0 / std::sqrt(b.pt.inner(e, e));
      frame.push_back(e);
    }
    double s = std::sqrt(t);
    Vec X = (1.0 / (2.0 * s)) * bp;
    double sum = 0.0;
    for (const auto& e : frame) sum += harnack_form(b, X, e, t);
    double expect = trace_harnack(m, u, bp, s);
    CHECK(sum == doctest::Approx(expect).epsilon(tol).scale(1.0 + std::abs(expect)));
  };
  run(ManifoldModel::einstein(2, -1.0), v2(0.5, 0.2), 0.8, v2(1.0, -0.3), 1e-9);
  run(ManifoldModel::einstein(2, 1.0), v2(0.6, -0.1), 0.2, v2(0.4, 0.8), 1e-9);
  run(sphere_warped(), v3(0.6, 0.2, -0.3), 0.05, v3(0.5, -0.7, 0.2), 1e-5);
}

TEST_CASE("hessian inequality: flat equality") {
  auto m = ManifoldModel::flat(2);
  double t = 0.7;
  auto rep = hessian_inequality_check(m, v2(0.9, 0.4), t);
  REQUIRE_FALSE(rep.skipped);
  CHECK(rep.pass);
  for (size_t i = 0; i < rep.lhs.size(); ++i) {
    CHECK(rep.lhs[i] == doctest::Approx(1.0 / std::sqrt(t)).epsilon(1e-4));
    CHECK(rep.rhs[i] == doctest::Approx(1.0 / std::sqrt(t)).epsilon(1e-6));
  }
}

TEST_CASE("hessian inequality on curved models") {
  auto h2 = ManifoldModel::einstein(2, -1.0);
  auto r1 = hessian_inequality_check(h2, v2(0.5, 0.0), 1.0);
  REQUIRE_FALSE(r1.skipped);
  CHECK(r1.pass);

  auto s2 = ManifoldModel::einstein(2, 1.0);
  auto r2 = hessian_inequality_check(s2, v2(0.6, 0.2), 0.2);
  REQUIRE_FALSE(r2.skipped);
  CHECK(r2.pass);

  auto r3 = hessian_inequality_check(sphere_warped(), v3(0.5, 0.2, -0.1), 0.06);
  REQUIRE_FALSE(r3.skipped);
  CHECK(r3.pass);
  // aggregate slack over directions stays nonnegative up to tolerance
  double sum = 0.0;
  for (size_t i = 0; i < r3.lhs.size(); ++i) sum += r3.rhs[i] - r3.lhs[i];
  CHECK(sum >= -1e-4);
}

TEST_CASE("second variation: flat linear field is exact") {
  auto m = ManifoldModel::flat(2);
  auto g = shoot(m, v2(0.7, -0.2), 1.0);
  Vec W = v2(0.4, 0.9);
  auto res = second_variation_check(
      m, g, [&](double s) { return s * W; }, [&](double) { return W; });
  CHECK(res.residual <= 1e-6);
  CHECK(res.fd == doctest::Approx(W.dot(W)).epsilon(1e-6));  // int |W|^2 ds over [0,1]
}

TEST_CASE("second variation: curvature terms verified by finite differences") {
  auto h2 = ManifoldModel::einstein(2, -1.0);
  auto g = shoot(h2, v2(0.6, 0.1), 1.0);
  Vec W = v2(-0.3, 0.8);
  auto res = second_variation_check(
      h2, g, [&](double s) { return (s + 0.3 * s * s) * W; },
      [&](double s) { return (1.0 + 0.6 * s) * W; });
  CHECK(res.residual <= 1e-3);

  auto s2 = ManifoldModel::einstein(2, 1.0);
  auto gs = shoot(s2, v2(0.8, -0.2), 0.2);
  auto rs = second_variation_check(
      s2, gs, [&](double s) { return s * W; }, [&](double) { return W; });
  CHECK(rs.residual <= 1e-3);
}

TEST_CASE("second variation on the warped model") {
  const auto& w = sphere_warped();
  auto g = shoot(w, v3(0.5, 0.2, -0.3), 0.08);
  Vec W = v3(0.6, -0.4, 0.2);
  auto res = second_variation_check(
      w, g, [&](double s) { return (s + 0.5 * s * s * s) * W; },
      [&](double s) { return (1.0 + 1.5 * s * s) * W; });
  CHECK(res.residual <= 1e-3);
}

TEST_CASE("zero variation field gives zero") {
  auto m = ManifoldModel::einstein(2, -1.0);
  auto g = shoot(m, v2(0.5, 0.0), 0.5);
  auto res = second_variation_check(
      m, g, [&](double) { return Vec::zero(2); }, [&](double) { return Vec::zero(2); });
  CHECK(std::abs(res.fd) <= 1e-9);
  CHECK(std::abs(res.formula) <= 1e-12);
}
