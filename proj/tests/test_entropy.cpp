#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "rfent/entropy.hpp"

using namespace rfent;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v[0] = a;
  v[1] = b;
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

TEST_CASE("schemes reproduce the gaussian normalization (pi/2)^{n/2}") {
  for (int n : {2, 3}) {
    double expect = std::pow(M_PI / 2.0, 0.5 * n);
    auto rad = QuadratureScheme::radial_spherical(n, 40);
    CHECK(rad.weight_sum() == doctest::Approx(expect).epsilon(1e-10));
    auto her = QuadratureScheme::tensor_hermite(n, 16);
    CHECK(her.weight_sum() == doctest::Approx(expect).epsilon(1e-10));
    auto mc = QuadratureScheme::monte_carlo(n, 500, 7);
    CHECK(mc.weight_sum() == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("monte carlo nodes estimate a gaussian moment within error") {
  // int |V|^2 e^{-2|V|^2} dV = (n/4) (pi/2)^{n/2}
  int n = 3;
  auto mc = QuadratureScheme::monte_carlo(n, 20000, 12345);
  double acc = 0;
  for (size_t k = 0; k < mc.nodes.size(); ++k) acc += mc.weights[k] * mc.nodes[k].dot(mc.nodes[k]);
  double expect = 0.25 * n * std::pow(M_PI / 2.0, 1.5);
  CHECK(std::abs(acc - expect) <= 0.02 * expect);
}

TEST_CASE("flat weighted volume equals (4 pi)^{n/2}") {
  for (int n : {2, 3}) {
    auto m = ManifoldModel::flat(n);
    auto scheme = QuadratureScheme::radial_spherical(n, 40);
    for (double t : {0.1, 1.0}) {
      auto res = weighted_volume(m, t, scheme, 1, false);
      double expect = std::pow(4.0 * M_PI, 0.5 * n);
      CHECK(std::abs(res.value - expect) <= 1e-6 * expect);
      CHECK(res.omega_fraction == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("tensor-hermite and radial schemes agree on symmetric models") {
  auto m = ManifoldModel::einstein(2, -1.0);
  auto rad = QuadratureScheme::radial_spherical(2, 40);
  auto her = QuadratureScheme::tensor_hermite(2, 32);
  auto a = weighted_volume(m, 0.8, rad, 2, false);
  auto b = weighted_volume(m, 0.8, her, 2, false);
  CHECK(std::abs(a.value - b.value) <= 1e-6 * (1.0 + std::abs(a.value)));
}

TEST_CASE("hyperbolic volume: monotone, strictly below the flat constant") {
  for (int n : {2, 3}) {
    auto m = ManifoldModel::einstein(n, -1.0);
    auto scheme = QuadratureScheme::radial_spherical(n, 40);
    auto rep = monotonicity_report(m, {0.1, 0.5, 1.0, 2.0}, scheme, 2);
    CHECK(rep.monotone_pass);
    CHECK(rep.node_monotone_pass);
    CHECK(rep.bound_pass);
    double cap = std::pow(4.0 * M_PI, 0.5 * n);
    for (size_t i = 0; i < rep.t_grid.size(); ++i) {
      if (rep.t_grid[i] >= 0.5) CHECK(rep.bound_gap[i] > 1e-3 * cap);
    }
    for (size_t i = 1; i < rep.Vtilde.size(); ++i) CHECK(rep.Vtilde[i] < rep.Vtilde[i - 1]);
  }
}

TEST_CASE("sphere shrinker volume: non-increasing and below the bound") {
  auto m = ManifoldModel::einstein(2, 1.0);
  auto scheme = QuadratureScheme::radial_spherical(2, 40);
  auto rep = monotonicity_report(m, {0.05, 0.15, 0.3}, scheme, 2);
  CHECK(rep.monotone_pass);
  CHECK(rep.node_monotone_pass);
  CHECK(rep.bound_pass);
  // omega shrinks as nodes stop minimizing
  CHECK(rep.omega_fraction.back() <= rep.omega_fraction.front());
}

TEST_CASE("flat monotonicity run is constant") {
  auto m = ManifoldModel::flat(2);
  auto scheme = QuadratureScheme::radial_spherical(2, 40);
  auto rep = monotonicity_report(m, {0.1, 0.5, 1.0, 2.0}, scheme, 1);
  for (double v : rep.Vtilde) CHECK(v == doctest::Approx(4.0 * M_PI).epsilon(1e-6));
  CHECK(rep.monotone_pass);
}

TEST_CASE("rescaling identity") {
  // flat: both sides are the constant
  auto f = ManifoldModel::flat(2);
  auto scheme = QuadratureScheme::radial_spherical(2, 32);
  auto rcf = rescale_check(f, 2.0, 1.0, scheme);
  CHECK(std::abs(rcf.difference) <= 1e-8);

  // hyperbolic surface at lambda in {0.5, 2, 4}
  auto m = ManifoldModel::einstein(2, -1.0);
  auto sch = QuadratureScheme::radial_spherical(2, 48);
  for (double lam : {0.5, 2.0, 4.0}) {
    auto rc = rescale_check(m, lam, 1.0, sch);
    CHECK(std::abs(rc.difference) <= 1e-5);
  }

  // identity rescaling is bit-for-bit
  auto rc1 = rescale_check(m, 1.0, 1.0, sch);
  CHECK(rc1.v_rescaled == rc1.v_base);
}

TEST_CASE("theta volume: sphere non-increasing, flat divergence report") {
  auto s = ManifoldModel::einstein(2, 1.0);
  double th1 = theta_volume(s, 0.05, 12).value;
  double th2 = theta_volume(s, 0.1, 12).value;
  double th3 = theta_volume(s, 0.2, 12).value;
  CHECK(th1 > 0);
  CHECK(th2 <= th1 * (1.0 + 1e-6));
  CHECK(th3 <= th2 * (1.0 + 1e-6));

  auto f = ManifoldModel::flat(2);
  auto tf = theta_volume(f, 0.5, 8);
  CHECK(tf.diverged);

  CHECK_THROWS_AS((void)theta_volume(f, 0.5, 1), ConfigError);
}

TEST_CASE("identity suite: flat closed forms") {
  auto m = ManifoldModel::flat(2);
  double t = 0.8;
  Vec V0 = v2(0.7, -0.3);
  Vec y = (2.0 * std::sqrt(t)) * V0;
  auto tab = identity_suite(m, y, t);
  REQUIRE_FALSE(tab.skipped);
  CHECK(tab.all_pass);
  // dl/dt = -l/t and |grad l|^2 = |V|^2 / t on flat space
  for (const auto& row : tab.rows) {
    if (row.check == "dl_dt") CHECK(row.lhs == doctest::Approx(-V0.dot(V0) / t).epsilon(1e-4));
    if (row.check == "grad_norm_sq")
      CHECK(row.lhs == doctest::Approx(V0.dot(V0) / t).epsilon(1e-4));
    // flat space is the equality case of the three inequalities
    if (!row.equality) CHECK(std::abs(row.residual) <= 1e-4);
  }
}

TEST_CASE("identity suite on curved models") {
  auto h = ManifoldModel::einstein(2, -1.0);
  auto t1 = identity_suite(h, v2(0.0, 0.0), 1.0);
  REQUIRE_FALSE(t1.skipped);
  CHECK(t1.all_pass);
  auto t2 = identity_suite(h, v2(0.7, 0.4), 1.3);
  REQUIRE_FALSE(t2.skipped);
  CHECK(t2.all_pass);

  auto s = ManifoldModel::einstein(2, 1.0);
  auto t3 = identity_suite(s, v2(0.5, -0.3), 0.2);
  REQUIRE_FALSE(t3.skipped);
  CHECK(t3.all_pass);

  auto t4 = identity_suite(sphere_warped(), [] {
    Vec v(3);
    v[0] = 0.5;
    v[1] = 0.3;
    v[2] = -0.2;
    return v;
  }(), 0.06);
  REQUIRE_FALSE(t4.skipped);
  CHECK(t4.all_pass);
}

TEST_CASE("lower bound under a ricci floor") {
  // flat, c = 0: equality l = d^2/(4t)
  auto f = ManifoldModel::flat(2);
  auto repf = lplus_lower_bound_check(f, {0.3, 0.8, 1.5}, 0.7, 0.0);
  CHECK(repf.pass);
  for (const auto& row : repf.rows) CHECK(std::abs(row.margin) <= 1e-7 * (1.0 + row.l_plus));

  // hyperbolic surface, c = 1
  auto h = ManifoldModel::einstein(2, -1.0);
  auto reph = lplus_lower_bound_check(h, {0.3, 0.8, 1.5}, 0.5, 1.0);
  CHECK(reph.pass);
  for (const auto& row : reph.rows) CHECK(row.margin > 0.0);

  // certificate failure: hyperbolic curvature needs c >= 1 at t = 0
  CHECK_THROWS_AS((void)lplus_lower_bound_check(h, {0.5}, 0.5, 0.2), ConfigError);
}

TEST_CASE("volume evaluation is independent of the worker count") {
  auto m = ManifoldModel::einstein(2, -1.0);
  auto scheme = QuadratureScheme::radial_spherical(2, 32);
  auto s1 = weighted_volume_series(m, {0.3, 1.0}, scheme, 1);
  auto s4 = weighted_volume_series(m, {0.3, 1.0}, scheme, 4);
  for (size_t i = 0; i < s1.value.size(); ++i) {
    CHECK(std::memcmp(&s1.value[i], &s4.value[i], sizeof(double)) == 0);
  }
}

TEST_CASE("monte carlo volume on flat space") {
  auto m = ManifoldModel::flat(2);
  auto mc = QuadratureScheme::monte_carlo(2, 4000, 99);
  auto res = weighted_volume(m, 0.5, mc, 2, true);
  CHECK(std::abs(res.value - 4.0 * M_PI) <= 5.0 * std::max(res.error_estimate, 1e-3));
}

TEST_CASE("scheme dimension mismatch is rejected") {
  auto m = ManifoldModel::flat(3);
  auto scheme = QuadratureScheme::radial_spherical(2, 16);
  CHECK_THROWS_AS((void)weighted_volume(m, 0.5, scheme), ConfigError);
}
