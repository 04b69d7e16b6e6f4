#pragma once

// Weighted forward reduced volume and the reduced-length identity suite.
//
// The weighted forward reduced volume is the tangent-space integral
//   V~_+(t) = int_{T_xM} t^{-n/2} e^{l_+(gamma_V(t), t)} detL_V(t)
//             e^{-2|V|^2} dV ,
// with the convention that a node contributes zero from its first loss of
// minimality on. Nodes are shared across a time grid, which realizes the
// nesting of the minimizing sets exactly and makes the per-node density
// monotonicity a deterministic check rather than a statistical one.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "rfent/quadrature.hpp"
#include "rfent/variation.hpp"

namespace rfent {

// ---------------------------------------------------------------------------
// quadrature schemes on the tangent space with weight e^{-2|V|^2}
// ---------------------------------------------------------------------------

enum class SchemeKind { TensorHermite, RadialSpherical, MonteCarlo };

inline double sphere_area(int nm1) {
  // |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)
  double n = nm1 + 1;
  return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

struct QuadratureScheme {
  SchemeKind kind = SchemeKind::RadialSpherical;
  int dim = 2;
  int order = 32;
  std::uint64_t seed = 0;
  std::vector<Vec> nodes;
  std::vector<double> weights;  // gaussian weight folded in

  double weight_sum() const {
    double s = 0;
    for (double w : weights) s += w;
    return s;
  }

  static QuadratureScheme tensor_hermite(int n, int order) {
    QuadratureScheme q;
    q.kind = SchemeKind::TensorHermite;
    q.dim = n;
    q.order = order;
    QuadRule gh = gauss_hermite(order);
    // int f(V) e^{-2|V|^2} dV = 2^{-n/2} int f(U/sqrt 2) e^{-|U|^2} dU
    long total = 1;
    for (int i = 0; i < n; ++i) total *= order;
    double norm = std::pow(2.0, -0.5 * n);
    for (long c = 0; c < total; ++c) {
      long cc = c;
      Vec v(n);
      double w = norm;
      for (int i = 0; i < n; ++i) {
        int k = static_cast<int>(cc % order);
        cc /= order;
        v[i] = gh.x[static_cast<size_t>(k)] / std::sqrt(2.0);
        w *= gh.w[static_cast<size_t>(k)];
      }
      q.nodes.push_back(v);
      q.weights.push_back(w);
    }
    return q;
  }

  // For rotationally symmetric integrands: generalized Gauss-Laguerre in
  // tau = 2 rho^2 along a single ray, weighted by the sphere area.
  static QuadratureScheme radial_spherical(int n, int order) {
    QuadratureScheme q;
    q.kind = SchemeKind::RadialSpherical;
    q.dim = n;
    q.order = order;
    QuadRule gl = gauss_laguerre(order, 0.5 * n - 1.0);
    double norm = sphere_area(n - 1) * std::pow(2.0, -0.5 * (n + 2));
    for (int k = 0; k < order; ++k) {
      Vec v(n);
      v[0] = std::sqrt(gl.x[static_cast<size_t>(k)] / 2.0);
      q.nodes.push_back(v);
      q.weights.push_back(norm * gl.w[static_cast<size_t>(k)]);
    }
    return q;
  }

  static QuadratureScheme monte_carlo(int n, int count, std::uint64_t seed) {
    QuadratureScheme q;
    q.kind = SchemeKind::MonteCarlo;
    q.dim = n;
    q.order = count;
    q.seed = seed;
    auto splitmix = [](std::uint64_t& x) {
      x += 0x9e3779b97f4a7c15ull;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      return z ^ (z >> 31);
    };
    double wnode = std::pow(M_PI / 2.0, 0.5 * n) / count;
    for (int k = 0; k < count; ++k) {
      // counter-keyed draws: node k is independent of evaluation order
      std::uint64_t st = seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(k) + 1;
      Vec v(n);
      for (int i = 0; i < n; i += 2) {
        double u1 = (splitmix(st) >> 11) * 0x1.0p-53 + 0x1.0p-54;
        double u2 = (splitmix(st) >> 11) * 0x1.0p-53;
        double rad = std::sqrt(-2.0 * std::log(u1)) * 0.5;  // sd 1/2: weight e^{-2|V|^2}
        v[i] = rad * std::cos(2.0 * M_PI * u2);
        if (i + 1 < n) v[i + 1] = rad * std::sin(2.0 * M_PI * u2);
      }
      q.nodes.push_back(v);
      q.weights.push_back(wnode);
    }
    return q;
  }
};

inline QuadratureScheme make_scheme(SchemeKind kind, int dim, int order, std::uint64_t seed = 0) {
  switch (kind) {
    case SchemeKind::TensorHermite:
      return QuadratureScheme::tensor_hermite(dim, order);
    case SchemeKind::RadialSpherical:
      return QuadratureScheme::radial_spherical(dim, order);
    case SchemeKind::MonteCarlo:
      return QuadratureScheme::monte_carlo(dim, order, seed);
  }
  throw ConfigError("unknown quadrature scheme");
}

// ---------------------------------------------------------------------------
// deterministic parallel map over nodes
// ---------------------------------------------------------------------------

template <typename F>
inline void parallel_for_nodes(size_t count, int jobs, F&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count < 2) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= count) break;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  int nt = static_cast<int>(std::min<size_t>(static_cast<size_t>(jobs), count));
  pool.reserve(static_cast<size_t>(nt));
  for (int k = 0; k < nt; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// weighted forward reduced volume over a shared time grid
// ---------------------------------------------------------------------------

struct VolumeSeries {
  std::vector<double> t_grid;
  std::vector<double> value;           // V~_+(t)
  std::vector<double> omega_fraction;  // share of nodes still minimizing
  std::vector<std::vector<double>> node_density;  // [node][time]
  std::vector<double> node_weight;
  int failed_nodes = 0;
  bool node_monotone_pass = true;      // per-node density non-increase
};

inline VolumeSeries weighted_volume_series(const ManifoldModel& model,
                                           const std::vector<double>& t_grid,
                                           const QuadratureScheme& scheme, int jobs = 1,
                                           double tol = 1e-10, double mono_slack = 1e-6) {
  if (scheme.dim != model.dim()) throw ConfigError("scheme dimension does not match the model");
  for (double t : t_grid) model.check_time(t);
  VolumeSeries vs;
  vs.t_grid = t_grid;
  size_t nn = scheme.nodes.size();
  vs.node_density.assign(nn, {});
  vs.node_weight = scheme.weights;
  std::vector<double> tau(nn, 0.0);
  std::vector<char> failed(nn, 0);

  parallel_for_nodes(nn, jobs, [&](size_t k) {
    NodeTrace nt = propagate_node(model, scheme.nodes[k], t_grid, tol);
    if (nt.failed) {
      failed[k] = 1;
      vs.node_density[k].assign(t_grid.size(), 0.0);
      return;
    }
    vs.node_density[k] = nt.density;
    tau[k] = std::isfinite(nt.tau_V) ? nt.tau_V : std::numeric_limits<double>::infinity();
  });

  for (size_t k = 0; k < nn; ++k) vs.failed_nodes += failed[k];
  double failed_fraction = static_cast<double>(vs.failed_nodes) / static_cast<double>(nn);
  if (failed_fraction > 0.2) throw CoverageError(failed_fraction);

  for (size_t i = 0; i < t_grid.size(); ++i) {
    double acc = 0.0;
    double in_omega = 0.0;
    for (size_t k = 0; k < nn; ++k) {
      acc += scheme.weights[k] * vs.node_density[k][i];
      if (!failed[k] && tau[k] > t_grid[i]) in_omega += 1.0;
    }
    vs.value.push_back(acc);
    vs.omega_fraction.push_back(in_omega / static_cast<double>(nn));
  }
  for (size_t k = 0; k < nn; ++k)
    for (size_t i = 1; i < t_grid.size(); ++i)
      if (vs.node_density[k][i] >
          vs.node_density[k][i - 1] * (1.0 + mono_slack) + 1e-14)
        vs.node_monotone_pass = false;
  return vs;
}

struct VolumeResult {
  double value = 0;
  double error_estimate = 0;
  double omega_fraction = 0;
};

inline VolumeResult weighted_volume(const ManifoldModel& model, double t,
                                    const QuadratureScheme& scheme, int jobs = 1,
                                    bool estimate_error = true, double tol = 1e-10) {
  VolumeSeries vs = weighted_volume_series(model, {t}, scheme, jobs, tol);
  VolumeResult out;
  out.value = vs.value[0];
  out.omega_fraction = vs.omega_fraction[0];
  if (estimate_error) {
    if (scheme.kind == SchemeKind::MonteCarlo) {
      // standard error of the weighted mean
      double mean = 0.0;
      for (size_t k = 0; k < vs.node_density.size(); ++k) mean += vs.node_density[k][0];
      mean /= static_cast<double>(vs.node_density.size());
      double var = 0.0;
      for (size_t k = 0; k < vs.node_density.size(); ++k) {
        double d = vs.node_density[k][0] - mean;
        var += d * d;
      }
      var /= std::max<size_t>(1, vs.node_density.size() - 1);
      out.error_estimate = std::pow(M_PI / 2.0, 0.5 * model.dim()) *
                           std::sqrt(var / static_cast<double>(vs.node_density.size()));
    } else {
      int lower = std::max(8, scheme.order - scheme.order / 4);
      QuadratureScheme coarse = make_scheme(scheme.kind, scheme.dim, lower, scheme.seed);
      VolumeSeries vc = weighted_volume_series(model, {t}, coarse, jobs, tol);
      out.error_estimate = std::abs(vc.value[0] - out.value);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// entropy report (volume series + bound and monotonicity flags)
// ---------------------------------------------------------------------------

struct EntropyReport {
  std::vector<double> t_grid;
  std::vector<double> Vtilde;
  std::vector<double> Vtilde_err;
  std::vector<double> theta;          // empty unless computed separately
  std::vector<double> omega_fraction;
  std::vector<double> bound_gap;      // (4 pi)^{n/2} - V~
  bool monotone_pass = true;
  bool node_monotone_pass = true;
  bool bound_pass = true;
};

inline EntropyReport monotonicity_report(const ManifoldModel& model,
                                         const std::vector<double>& t_grid,
                                         const QuadratureScheme& scheme, int jobs = 1,
                                         double tol = 1e-10) {
  VolumeSeries vs = weighted_volume_series(model, t_grid, scheme, jobs, tol);
  EntropyReport rep;
  rep.t_grid = t_grid;
  rep.Vtilde = vs.value;
  rep.Vtilde_err.assign(t_grid.size(), 0.0);
  rep.omega_fraction = vs.omega_fraction;
  rep.node_monotone_pass = vs.node_monotone_pass;
  double cap = std::pow(4.0 * M_PI, 0.5 * model.dim());
  for (size_t i = 0; i < t_grid.size(); ++i) {
    rep.bound_gap.push_back(cap - vs.value[i]);
    if (vs.value[i] > cap * (1.0 + 1e-6)) rep.bound_pass = false;
    if (i > 0 && vs.value[i] > vs.value[i - 1] * (1.0 + 1e-6)) rep.monotone_pass = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// unweighted forward reduced volume by direct spatial integration
// ---------------------------------------------------------------------------

struct ThetaResult {
  double value = 0;
  bool diverged = false;
  double tail_ratio = 0;  // growth factor of successive tail masses
  std::string note;
};

// theta_+(t) = int_M t^{-n/2} e^{l_+(y, t)} dvol(y), radial reduction. On
// noncompact models the integrand is tested under domain doubling and a
// divergence report is produced when the tails grow.
inline ThetaResult theta_volume(const ManifoldModel& model, double t, int cells, int jobs = 1) {
  if (cells < 2) throw ConfigError("theta integration needs at least 2 radial cells");
  model.check_time(t);
  int n = model.dim();
  ThetaResult out;
  double area = sphere_area(n - 1);

  bool compact = std::isfinite(model.chart_r_max());
  // noncompact probing stays at moderate radii: tail growth shows up long
  // before the chart stretching makes shooting ill-scaled
  double r_hi = compact ? std::min(model.chart_safe_radius(), model.chart_r_max() * 0.97)
                        : std::min(8.0 * std::sqrt(t), 6.0);
  if (!compact) r_hi = std::min(r_hi, 0.8 * model.chart_safe_radius());

  auto integrate_panel = [&](double lo, double hi, int ncells) {
    QuadRule gl = gauss_legendre(5);
    std::vector<double> vals(static_cast<size_t>(ncells) * gl.x.size(), 0.0);
    std::vector<double> radii;
    for (int c = 0; c < ncells; ++c) {
      double a = lo + (hi - lo) * c / ncells;
      double b = lo + (hi - lo) * (c + 1) / ncells;
      for (size_t q = 0; q < gl.x.size(); ++q)
        radii.push_back(0.5 * (a + b) + 0.5 * (b - a) * gl.x[q]);
    }
    std::atomic<bool> overflow{false};
    std::vector<double> lvals(radii.size(), 0.0);
    // warm-started sweep; sequential in r for reuse of the previous minimizer
    Vec warm = Vec::zero(n);
    bool have_warm = false;
    for (size_t i = 0; i < radii.size(); ++i) {
      Vec y(n);
      y[0] = radii[i];
      InverseOptions io;
      io.global = !have_warm;
      try {
        InverseResult inv = exp_inverse(model, y, t, io, have_warm ? &warm : nullptr);
        warm = inv.V;
        have_warm = true;
        lvals[i] = inv.geodesic.length / (2.0 * std::sqrt(t));
      } catch (const NonconvergenceError&) {
        lvals[i] = std::numeric_limits<double>::quiet_NaN();
      }
      if (lvals[i] > 300.0) {
        overflow.store(true);
        break;
      }
    }
    if (overflow.load()) return std::numeric_limits<double>::infinity();
    double acc = 0.0;
    size_t idx = 0;
    for (int c = 0; c < ncells; ++c) {
      double a = lo + (hi - lo) * c / ncells;
      double b = lo + (hi - lo) * (c + 1) / ncells;
      for (size_t q = 0; q < gl.x.size(); ++q, ++idx) {
        double r = radii[idx];
        if (std::isnan(lvals[idx])) continue;
        GeoPoint p = model.point([&] {
          Vec y(n);
          y[0] = r;
          return y;
        }(), t);
        double dens = std::pow(t, -0.5 * n) * std::exp(lvals[idx]) * p.sqrt_det_metric();
        acc += 0.5 * (b - a) * gl.w[q] * area * dens;
      }
    }
    return acc;
  };

  if (compact) {
    out.value = integrate_panel(1e-8, r_hi, cells);
    return out;
  }
  // noncompact: tail masses under domain growth
  double m1 = integrate_panel(1e-8, r_hi, cells);
  double t1 = integrate_panel(r_hi, 1.5 * r_hi, cells);
  double t2 = integrate_panel(1.5 * r_hi, 2.25 * r_hi, cells);
  if (!std::isfinite(m1) || !std::isfinite(t1) || !std::isfinite(t2) || t2 > t1) {
    out.diverged = true;
    out.tail_ratio = (std::isfinite(t1) && t1 > 0 && std::isfinite(t2)) ? t2 / t1
                                                                        : std::numeric_limits<double>::infinity();
    out.note = "integrand mass grows under domain doubling";
    out.value = std::isfinite(m1) ? m1 : 0.0;
    return out;
  }
  out.value = m1 + t1 + t2;
  out.tail_ratio = (t1 > 0) ? t2 / t1 : 0.0;
  (void)jobs;
  return out;
}

// ---------------------------------------------------------------------------
// reduced-length identity suite
// ---------------------------------------------------------------------------

struct IdentityRow {
  std::string check;
  double lhs = 0;
  double rhs = 0;
  double residual = 0;  // lhs - rhs (signed); inequalities pass when <= slack
  bool equality = true;
  bool pass = false;
};

struct IdentityTable {
  bool skipped = false;
  std::string skip_reason;
  std::vector<IdentityRow> rows;
  bool all_pass = true;
};

inline IdentityTable identity_suite(const ManifoldModel& model, const Vec& y, double t,
                                    double tol = 1e-4) {
  IdentityTable tab;
  InverseResult inv;
  try {
    inv = exp_inverse(model, y, t);
  } catch (const NonconvergenceError&) {
    tab.skipped = true;
    tab.skip_reason = "shooting inversion did not converge";
    return tab;
  }
  if (!inv.unique_root) {
    tab.skipped = true;
    tab.skip_reason = "multiple minimizers: cut-locus certificate failed";
    return tab;
  }
  JacobiFrame jf = jacobi_propagate(model, inv.V, t);
  if (jf.tau_V <= t) {
    tab.skipped = true;
    tab.skip_reason = "conjugate point before t";
    return tab;
  }

  int n = model.dim();
  double st = std::sqrt(t);
  double l0 = inv.geodesic.length / (2.0 * st);
  double K = inv.geodesic.K;
  GeoPoint p = model.point(y, t);
  double R = p.rd.R;

  InverseOptions io;
  io.global = false;
  io.endpoint_tol = 1e-11;
  auto l_at = [&](const Vec& yy, double tt) {
    InverseResult r = exp_inverse(model, yy, tt, io, &inv.V);
    return r.geodesic.length / (2.0 * std::sqrt(tt));
  };

  double ht = std::max(1e-6, 1e-4 * t);
  double dl_dt = (l_at(y, t + ht) - l_at(y, t - ht)) / (2.0 * ht);

  double hg = 1e-5 * (1.0 + y.norm());
  Vec grad(n);
  for (int i = 0; i < n; ++i) {
    Vec yp = y, ym = y;
    yp[i] += hg;
    ym[i] -= hg;
    grad[i] = (l_at(yp, t) - l_at(ym, t)) / (2.0 * hg);
  }
  Mat ginv = p.metric_inverse();
  double grad_sq = ginv.mul(grad).dot(grad);

  double hh = 5e-3 * (1.0 + y.norm());
  Mat hess(n);
  for (int i = 0; i < n; ++i) {
    Vec yp = y, ym = y;
    yp[i] += hh;
    ym[i] -= hh;
    hess(i, i) = (l_at(yp, t) - 2.0 * l0 + l_at(ym, t)) / (hh * hh);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Vec a = y, b = y, c = y, d = y;
      a[i] += hh;
      a[j] += hh;
      b[i] += hh;
      b[j] -= hh;
      c[i] -= hh;
      c[j] += hh;
      d[i] -= hh;
      d[j] -= hh;
      double v = (l_at(a, t) - l_at(b, t) - l_at(c, t) + l_at(d, t)) / (4.0 * hh * hh);
      hess(i, j) = hess(j, i) = v;
    }
  // Laplace-Beltrami: g^{ij} (d2_ij - Gamma^k_ij d_k)
  double lap = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec gij = p.gamma_bilinear(Vec::basis(n, i), Vec::basis(n, j));
      lap += ginv(i, j) * (hess(i, j) - gij.dot(grad));
    }

  auto push = [&](const std::string& name, double lhs, double rhs, bool equality) {
    IdentityRow row;
    row.check = name;
    row.lhs = lhs;
    row.rhs = rhs;
    row.residual = lhs - rhs;
    row.equality = equality;
    row.pass = equality ? std::abs(row.residual) <= tol : row.residual <= tol;
    if (!row.pass) tab.all_pass = false;
    tab.rows.push_back(row);
  };

  push("dl_dt", dl_dt, R - l0 / t - K / (2.0 * std::pow(t, 1.5)), true);
  push("grad_norm_sq", grad_sq, l0 / t - R + K / std::pow(t, 1.5), true);
  push("laplace_upper", lap, R + 0.5 * n / t - K / (2.0 * std::pow(t, 1.5)), false);
  push("heat_subsolution", dl_dt + lap + grad_sq - R - 0.5 * n / t, 0.0, false);
  push("elliptic", 2.0 * lap + grad_sq - R - (l0 + n) / t, 0.0, false);
  return tab;
}

// ---------------------------------------------------------------------------
// rescaling check
// ---------------------------------------------------------------------------

struct RescaleCheck {
  double lambda = 1;
  double v_rescaled = 0;   // V~ of g_j(t) = lambda g(t / lambda) at time t
  double v_base = 0;       // V~ of g at time t / lambda
  double difference = 0;
  double error_estimate = 0;
};

inline RescaleCheck rescale_check(const ManifoldModel& model, double lambda, double t,
                                  const QuadratureScheme& scheme, int jobs = 1) {
  RescaleCheck rc;
  rc.lambda = lambda;
  ManifoldModel resc = ManifoldModel::rescaled(model, lambda);
  if (t / lambda >= model.t_max()) throw FlowDomainError(t / lambda, model.t_max());
  VolumeResult a = weighted_volume(resc, t, scheme, jobs);
  VolumeResult b = weighted_volume(model, t / lambda, scheme, jobs);
  rc.v_rescaled = a.value;
  rc.v_base = b.value;
  rc.difference = a.value - b.value;
  rc.error_estimate = a.error_estimate + b.error_estimate;
  return rc;
}

// ---------------------------------------------------------------------------
// reduced-length lower bound under a Ricci lower bound
// ---------------------------------------------------------------------------

struct LowerBoundRow {
  double r = 0;
  double l_plus = 0;
  double bound = 0;
  double margin = 0;
};

struct LowerBoundReport {
  double c = 0;
  std::vector<LowerBoundRow> rows;
  bool pass = true;
};

// Checks l_+(y, t) >= e^{-2ct} d_{g(0)}(x,y)^2 / (4t) - n c t / 3 on a radial
// grid, after certifying Rc >= -c g over the sampled flow window. The
// distance enters squared: the flat case pins that reading (c = 0 gives
// exactly d^2/(4t)).
inline LowerBoundReport lplus_lower_bound_check(const ManifoldModel& model,
                                                const std::vector<double>& radii, double t,
                                                double c) {
  // certificate: min Ricci eigenvalue >= -c over sampled (p, eta)
  double worst = 0.0;
  for (int ir = 0; ir <= 8; ++ir) {
    double rmax = *std::max_element(radii.begin(), radii.end());
    double r = rmax * ir / 8.0;
    for (int it = 0; it <= 8; ++it) {
      double eta = std::max(1e-6, t * it / 8.0);
      RadialData d = model.radial(r, eta);
      double af = (model.dim() - 1) * d.lambda;
      double bf = d.lambda + (model.dim() - 2) * d.mu;
      worst = std::min(worst, std::min(af, bf));
    }
  }
  if (worst < -c * (1.0 + 1e-9))
    throw ConfigError("ricci lower bound certificate failed: min eigenvalue " +
                      std::to_string(worst) + " below -c");

  LowerBoundReport rep;
  rep.c = c;
  int n = model.dim();
  for (double r : radii) {
    Vec y(n);
    y[0] = r;
    double l = reduced_length(model, y, t);
    double d0 = model.initial_distance(y);
    LowerBoundRow row;
    row.r = r;
    row.l_plus = l;
    row.bound = std::exp(-2.0 * c * t) * d0 * d0 / (4.0 * t) - n * c * t / 3.0;
    row.margin = l - row.bound;
    if (row.margin < -1e-6 * (1.0 + std::abs(l))) rep.pass = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace rfent
