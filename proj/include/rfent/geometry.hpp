#pragma once

// Ricci flow backgrounds and their curvature data.
//
// All models are rotationally symmetric around the basepoint and live in a
// single global Cartesian chart u in R^n with r = |u|:
//
//   g_ij(u, t) = B(r,t) delta_ij + (A(r,t) - B(r,t)) uhat_i uhat_j
//
// where A = g(d_r, d_r) and B = (C/r)^2 with C the warping radius of the
// distance sphere. Three families:
//   Flat          A = B = 1, all curvature zero, T_max = infinity.
//   Einstein(k)   g(t) = (1 - 2(n-1)k t) g0 with Rc(g0) = (n-1)k g0; the
//                 sphere (k > 0), hyperbolic space (k < 0).
//   Warped        profile evolved numerically (see warped.hpp).
// A rescaled wrapper realizes g_j(t) = lambda g(lambda^{-1} t) on any base.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>

#include "rfent/errors.hpp"
#include "rfent/linalg.hpp"
#include "rfent/warped.hpp"

namespace rfent {

enum class Family { Flat, Einstein, Warped };

// Scalar radial data at (r, t); enough to assemble every tensor we need.
struct RadialData {
  double A = 1, Ar = 0;          // g(d_r, d_r) and its r-derivative
  double B = 1, Br = 0;          // tangential factor (C/r)^2
  double Dar = 0;                // (A - B)/r, odd in r
  double lambda = 0, mu = 0;     // sectional curvatures (radial / tangential plane)
  double lambda_s = 0, mu_s = 0; // arclength derivatives
  double R = 0;                  // scalar curvature = 2(n-1)lambda + (n-1)(n-2)mu
  double Rs = 0, Rss = 0;        // arclength derivatives of R
  double hessR_tang = 0;         // Rs * C_s/C  (tangential Hess R eigenvalue)
  double q_ns = 0;               // (n-2)(lambda - mu) * C_s/C  (for nabla Rc)
};

namespace detail {

// sin(x)/x and sinh(x)/x with series fallback near zero.
inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}
inline double sinhc(double x) {
  if (std::abs(x) < 1e-4) {
    double x2 = x * x;
    return 1.0 + x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sinh(x) / x;
}

// f(u) = (sin u / u)^2 or (sinh u / u)^2 and derivative, sign selects.
inline double warp_factor(double u, bool spherical) {
  double c = spherical ? sinc(u) : sinhc(u);
  return c * c;
}
inline double warp_factor_du(double u, bool spherical) {
  if (std::abs(u) < 1e-3) {
    double u2 = u * u;
    double core = 2.0 * u / 3.0 + 8.0 * u2 * u / 45.0;
    return spherical ? -core : core;
  }
  if (spherical) return 2.0 * std::sin(u) * (u * std::cos(u) - std::sin(u)) / (u * u * u);
  return 2.0 * std::sinh(u) * (u * std::cosh(u) - std::sinh(u)) / (u * u * u);
}
// (1 - f(u))/u with cancellation-safe series.
inline double one_minus_warp_over(double u, bool spherical) {
  if (std::abs(u) < 5e-2) {
    double u2 = u * u;
    double core = u / 3.0 - 2.0 * u * u2 / 45.0 + u2 * u2 * u / 315.0;
    return spherical ? core : -(u / 3.0 + 2.0 * u * u2 / 45.0 + u2 * u2 * u / 315.0);
  }
  return (1.0 - warp_factor(u, spherical)) / u;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tensor assembly at a chart point: metric, Christoffels, curvature pieces.
// ---------------------------------------------------------------------------

struct GeoPoint {
  int n = 0;
  double t = 0;
  double r = 0;
  Vec u;     // chart coordinates
  Vec uhat;  // zero vector at the basepoint
  RadialData rd;
  double alpha_f = 0, beta_f = 0;      // Ricci frame eigenvalues (radial / tangential)
  double alpha_s = 0, beta_s = 0;      // their arclength derivatives

  double radial_component(const Vec& z) const { return uhat.dot(z); }
  // tangential projection; computed componentwise so that nearly radial
  // vectors keep a clean square (the tangential metric factor can be huge)
  Vec tangential(const Vec& z) const { return z - radial_component(z) * uhat; }

  Mat metric() const {
    Mat g(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) g(i, j) = (rd.A - rd.B) * uhat[i] * uhat[j];
      g(i, i) += rd.B;
    }
    return g;
  }
  Mat metric_inverse() const {
    Mat g(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) g(i, j) = (1.0 / rd.A - 1.0 / rd.B) * uhat[i] * uhat[j];
      g(i, i) += 1.0 / rd.B;
    }
    return g;
  }
  double inner(const Vec& z, const Vec& w) const {
    double zr = radial_component(z), wr = radial_component(w);
    return rd.A * zr * wr + rd.B * tangential(z).dot(w);
  }
  double norm2(const Vec& z) const {
    double zr = radial_component(z);
    Vec zt = tangential(z);
    return rd.A * zr * zr + rd.B * zt.dot(zt);
  }
  double sqrt_det_metric() const { return std::sqrt(rd.A) * std::pow(std::sqrt(rd.B), n - 1); }

  // Gamma(w, w), the geodesic quadratic form. The tangential part is built
  // only when w has one: exactly radial motion must stay finite even where
  // the tangential metric factor degenerates (the far pole of a sphere chart).
  Vec gamma_quad(const Vec& w) const {
    double p = radial_component(w);
    Vec tang = tangential(w);
    double wt2 = tang.dot(tang);
    Vec out = (tang.max_abs() != 0.0) ? (rd.Br * p / rd.B) * tang : Vec::zero(n);
    double rad = (0.5 * rd.Ar * p * p + (rd.Dar - 0.5 * rd.Br) * wt2) / rd.A;
    out += rad * uhat;
    return out;
  }
  Vec gamma_bilinear(const Vec& a, const Vec& b) const {
    Vec vp = a + b, vm = a - b;
    return 0.25 * (gamma_quad(vp) - gamma_quad(vm));
  }

  // Ricci as a bilinear form (lower indices) applied to vectors.
  double ricci(const Vec& z, const Vec& w) const {
    double zr = radial_component(z), wr = radial_component(w);
    return alpha_f * rd.A * zr * wr + beta_f * rd.B * tangential(z).dot(w);
  }
  Mat ricci_form() const {
    Mat rc(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        rc(i, j) = (alpha_f * rd.A - beta_f * rd.B) * uhat[i] * uhat[j];
      rc(i, i) += beta_f * rd.B;
    }
    return rc;
  }
  // Ricci with one index raised, applied to a vector.
  Vec ricci_sharp(const Vec& z) const {
    double zr = radial_component(z);
    return alpha_f * zr * uhat + beta_f * (z - zr * uhat);
  }
  double ricci_sharp_norm2(const Vec& z) const {
    // |Rc(z, .)|^2 = <Rc# z, Rc# z>_g
    Vec s = ricci_sharp(z);
    return inner(s, s);
  }

  // Curvature tensor applied as R(x, y, x, y) (positive on the round sphere).
  double rm(const Vec& x, const Vec& y) const {
    double xr = radial_component(x), yr = radial_component(y);
    Vec xt = tangential(x), yt = tangential(y);
    double xt2 = rd.B * xt.dot(xt);
    double yt2 = rd.B * yt.dot(yt);
    double xyt = rd.B * xt.dot(yt);
    double mixed = rd.A * (xr * xr * yt2 - 2.0 * xr * yr * xyt + yr * yr * xt2);
    double tang = xt2 * yt2 - xyt * xyt;
    return rd.lambda * mixed + rd.mu * tang;
  }

  Vec grad_R() const { return (rd.Rs / std::sqrt(rd.A)) * uhat; }

  double hess_R(const Vec& z, const Vec& w) const {
    double zr = radial_component(z), wr = radial_component(w);
    return rd.Rss * rd.A * zr * wr + rd.hessR_tang * rd.B * tangential(z).dot(w);
  }

  // (nabla_z Rc)(a, b) from the radial structure.
  double nabla_rc(const Vec& z, const Vec& a, const Vec& b) const {
    double sqa = std::sqrt(rd.A);
    double zr = radial_component(z), ar = radial_component(a), br = radial_component(b);
    Vec zt = tangential(z);
    double gab = inner(a, b);
    double out = beta_s * sqa * zr * gab + (alpha_s - beta_s) * sqa * zr * rd.A * ar * br;
    out += rd.q_ns * rd.B * sqa * (zt.dot(a) * br + zt.dot(b) * ar);
    return out;
  }
};

// Full curvature record at a spacetime point.
struct CurvatureBundle {
  GeoPoint pt;
  double R = 0;
  double dRdt = 0;
  Mat ricci;       // lower indices
  Mat hessR;       // lower indices
  Mat dRcdt;       // d/dt of the chart components of Ricci
  Vec gradR;       // raised
  double lambda = 0, mu = 0;
  // Christoffel symbols Gamma^i_{jk}
  double christoffel(int i, int j, int k) const { return gamma_[i][j][k]; }
  double gamma_[kMaxDim][kMaxDim][kMaxDim] = {};
};

// ---------------------------------------------------------------------------
// ManifoldModel
// ---------------------------------------------------------------------------

class ManifoldModel {
 public:
  static ManifoldModel flat(int n) {
    ManifoldModel m;
    m.family_ = Family::Flat;
    m.n_ = check_dim_(n);
    m.t_max_ = std::numeric_limits<double>::infinity();
    return m;
  }

  static ManifoldModel einstein(int n, double kappa) {
    ManifoldModel m;
    m.family_ = Family::Einstein;
    m.n_ = check_dim_(n);
    if (kappa == 0.0) throw ConfigError("einstein model needs kappa != 0 (use flat)");
    m.kappa_ = kappa;
    m.t_max_ = (kappa > 0) ? 1.0 / (2.0 * (n - 1) * kappa)
                           : std::numeric_limits<double>::infinity();
    return m;
  }

  static ManifoldModel warped(WarpedSpec spec) {
    ManifoldModel m;
    m.family_ = Family::Warped;
    m.n_ = check_dim_(spec.dim);
    m.warp_ = std::make_shared<const WarpedFlow>(std::move(spec));
    m.t_max_ = m.warp_->t_max();
    return m;
  }

  static ManifoldModel rescaled(const ManifoldModel& base, double lambda) {
    if (lambda <= 0) throw ConfigError("rescale factor must be positive");
    ManifoldModel m = base;
    m.lambda_ *= lambda;
    m.t_max_ = base.t_max_ * lambda;
    return m;
  }

  Family family() const { return family_; }
  int dim() const { return n_; }
  double kappa() const { return kappa_; }
  double t_max() const { return t_max_; }
  double rescale_factor() const { return lambda_; }
  // g(x, 0) = metric0_scale * identity in chart components at the basepoint
  double metric0_scale() const { return lambda_; }
  const WarpedFlow* warped_flow() const { return warp_.get(); }
  Vec basepoint() const { return Vec::zero(n_); }

  // Distance from the basepoint in g(0); the chart radius is the initial
  // arclength for every family.
  double initial_distance(const Vec& u) const { return std::sqrt(lambda_) * u.norm(); }

  // Exclusive chart bound and the radius safe for geodesic integration.
  double chart_r_max() const {
    switch (family_) {
      case Family::Flat:
        return std::numeric_limits<double>::infinity();
      case Family::Einstein:
        return (kappa_ > 0) ? M_PI / std::sqrt(kappa_)
                            : std::numeric_limits<double>::infinity();
      case Family::Warped:
        return warp_->s_max();
    }
    return 0;
  }
  double chart_safe_radius() const {
    switch (family_) {
      case Family::Flat:
        return std::numeric_limits<double>::infinity();
      case Family::Einstein:
        return (kappa_ > 0) ? (M_PI / std::sqrt(kappa_)) * (1.0 - 1e-3)
                            : std::numeric_limits<double>::infinity();
      case Family::Warped:
        return warp_->closed() ? warp_->s_max() * (1.0 - 1e-3)
                               : warp_->s_max() - warp_->sponge();
    }
    return 0;
  }

  // Closed models are covered twice by the chart through the far pole:
  // chart radius rho in (Rp, 2 Rp) represents the physical point at radius
  // 2 Rp - rho on the opposite side. Zero for models without a far pole.
  double pole_radius() const {
    if (family_ == Family::Einstein && kappa_ > 0) return M_PI / std::sqrt(kappa_);
    if (family_ == Family::Warped && warp_->closed()) return warp_->s_max();
    return 0.0;
  }
  // Largest radius metric/curvature queries accept (second sheet included).
  double query_r_max() const {
    double rp = pole_radius();
    if (rp > 0.0) return 2.0 * rp - (chart_r_max() - chart_safe_radius());
    return chart_safe_radius();
  }

  void check_time(double t) const {
    if (!(t >= 0.0) || t >= t_max_) throw FlowDomainError(t, t_max_);
  }
  void check_chart(double r) const {
    if (r > query_r_max()) throw ChartError(r, chart_r_max());
  }

  RadialData radial(double r, double t) const {
    check_time(t);
    double lam = lambda_;
    double tb = t / lam;
    RadialData d;
    switch (family_) {
      case Family::Flat:
        break;
      case Family::Einstein:
        d = einstein_radial_(r, tb);
        break;
      case Family::Warped:
        d = warped_radial_(r, tb);
        break;
    }
    if (lam != 1.0) {
      double s12 = std::sqrt(lam);
      d.A *= lam;
      d.Ar *= lam;
      d.B *= lam;
      d.Br *= lam;
      d.Dar *= lam;
      d.lambda /= lam;
      d.mu /= lam;
      d.lambda_s /= lam * s12;
      d.mu_s /= lam * s12;
      d.R /= lam;
      d.Rs /= lam * s12;
      d.Rss /= lam * lam;
      d.hessR_tang /= lam * lam;
      d.q_ns /= lam * s12;
    }
    return d;
  }

  double scalar_R(double r, double t) const { return radial(r, t).R; }

  // d R / d t at fixed chart point: closed form on Einstein, centered FD on
  // warped products (step 1e-4 clipped to the domain).
  double dRdt(double r, double t) const {
    switch (family_) {
      case Family::Flat:
        return 0.0;
      case Family::Einstein: {
        double lam = lambda_, tb = t / lam;
        double a = einstein_a_(tb);
        double v = 2.0 * n_ * (n_ - 1) * (n_ - 1) * kappa_ * kappa_ / (a * a);
        return v / (lam * lam);
      }
      case Family::Warped: {
        double lo, hi;
        fd_time_window_(t, lo, hi);
        return (radial(r, hi).R - radial(r, lo).R) / (hi - lo);
      }
    }
    return 0.0;
  }

  GeoPoint point(const Vec& u, double t) const {
    GeoPoint p;
    p.n = n_;
    p.t = t;
    p.u = u;
    p.r = u.norm();
    check_chart(p.r);
    p.uhat = (p.r > 0) ? (1.0 / p.r) * u : Vec::zero(n_);
    p.rd = radial(p.r, t);
    p.alpha_f = (n_ - 1) * p.rd.lambda;
    p.beta_f = p.rd.lambda + (n_ - 2) * p.rd.mu;
    p.alpha_s = (n_ - 1) * p.rd.lambda_s;
    p.beta_s = p.rd.lambda_s + (n_ - 2) * p.rd.mu_s;
    return p;
  }

  Mat metric(const Vec& u, double t) const { return point(u, t).metric(); }

  CurvatureBundle curvature(const Vec& u, double t) const {
    CurvatureBundle b;
    b.pt = point(u, t);
    b.R = b.pt.rd.R;
    b.lambda = b.pt.rd.lambda;
    b.mu = b.pt.rd.mu;
    b.dRdt = dRdt(b.pt.r, t);
    b.ricci = b.pt.ricci_form();
    b.gradR = b.pt.grad_R();
    b.hessR = Mat(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        b.hessR(i, j) = b.pt.hess_R(Vec::basis(n_, i), Vec::basis(n_, j));
    b.dRcdt = Mat(n_);
    if (family_ == Family::Warped) {
      double lo, hi;
      fd_time_window_(t, lo, hi);
      Mat rp = point(u, hi).ricci_form();
      Mat rm = point(u, lo).ricci_form();
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) b.dRcdt(i, j) = (rp(i, j) - rm(i, j)) / (hi - lo);
    }
    for (int j = 0; j < n_; ++j)
      for (int k = j; k < n_; ++k) {
        Vec gjk = b.pt.gamma_bilinear(Vec::basis(n_, j), Vec::basis(n_, k));
        for (int i = 0; i < n_; ++i) {
          b.gamma_[i][j][k] = gjk[i];
          b.gamma_[i][k][j] = gjk[i];
        }
      }
    return b;
  }

  // Max-norm of (g(t+h) - g(t-h))/(2h) + 2 Rc(t): a direct check that the
  // background actually solves the flow, valid for every family.
  double flow_residual(const Vec& u, double t, double h) const {
    if (t - h <= 0.0 || t + h >= t_max_) throw FlowDomainError(t, t_max_);
    Mat gp = metric(u, t + h);
    Mat gm = metric(u, t - h);
    Mat rc = point(u, t).ricci_form();
    double res = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        res = std::max(res, std::abs((gp(i, j) - gm(i, j)) / (2.0 * h) + 2.0 * rc(i, j)));
    return res;
  }

 private:
  static int check_dim_(int n) {
    if (n < 2 || n > kMaxDim) throw ConfigError("dimension must lie in [2, 6]");
    return n;
  }

  // Centered window [t-h, t+h] shifted to stay inside [0, t_max).
  void fd_time_window_(double t, double& lo, double& hi) const {
    double h = 1e-4;
    double top = std::isfinite(t_max_) ? t_max_ * (1.0 - 1e-9) : t + h;
    if (top < 2.0 * h) h = std::max(top / 4.0, 1e-9);
    lo = t - h;
    hi = t + h;
    if (lo < 0.0) {
      lo = 0.0;
      hi = 2.0 * h;
    }
    if (hi > top) {
      hi = top;
      lo = top - 2.0 * h;
    }
  }

  double einstein_a_(double t) const { return 1.0 - 2.0 * (n_ - 1) * kappa_ * t; }

  RadialData einstein_radial_(double r, double t) const {
    bool spherical = kappa_ > 0;
    double k = std::sqrt(std::abs(kappa_));
    double u = k * r;
    double a = einstein_a_(t);
    RadialData d;
    double b0 = detail::warp_factor(u, spherical);
    d.A = a;
    d.Ar = 0.0;
    d.B = a * b0;
    d.Br = a * k * detail::warp_factor_du(u, spherical);
    d.Dar = a * k * detail::one_minus_warp_over(u, spherical);
    d.lambda = d.mu = kappa_ / a;
    d.R = n_ * (n_ - 1) * kappa_ / a;
    return d;
  }

  // Sectional data of the warped metric from series values; ratios with
  // removable singularities are evaluated at a floored radius (they are
  // even in sigma, so the bias is O(floor^2)).
  struct WarpScalars {
    double lambda, mu, R;
  };
  WarpScalars warp_scalars_(const WarpedFlow::Slice& sl, double sigma) const {
    WarpState w = warp_->eval_slice(sl, sigma);
    double phis = w.phis / w.psi;
    double phiss = w.phiss / (w.psi * w.psi) - w.phis * w.psis / (w.psi * w.psi * w.psi);
    WarpScalars s;
    s.lambda = -phiss / w.phi;
    s.mu = (1.0 - phis * phis) / (w.phi * w.phi);
    s.R = 2.0 * (n_ - 1) * s.lambda + (n_ - 1) * (n_ - 2) * s.mu;
    return s;
  }

  RadialData warped_radial_(double r, double t) const {
    const WarpedFlow& wf = *warp_;
    if (!wf.closed() && r > wf.s_max() - wf.sponge() + 1e-12) throw ChartError(r, wf.s_max());
    RadialData d;
    WarpedFlow::Slice sl = wf.slice(t);
    WarpState w = wf.eval_slice(sl, r);
    d.A = w.psi * w.psi;
    d.Ar = 2.0 * w.psi * w.psis;
    double pos = w.phi_over_sigma;
    d.B = pos * pos;

    const double rfloor = 3e-5 * std::max(1.0, wf.s_max());
    double rq = std::max(r, rfloor);
    WarpState wq = (r < rfloor) ? wf.eval_slice(sl, rq) : w;
    double posq = wq.phi_over_sigma;
    // Br = 2 (phi/r) (phi_sigma - phi/r)/r and Dar = (A - B)/r are odd
    double Br_q = 2.0 * posq * (wq.phis - posq) / rq;
    double Dar_q = (wq.psi - posq) * (wq.psi + posq) / rq;
    double Ar_q = 2.0 * wq.psi * wq.psis;
    double odd_scale = (r < rfloor) ? r / rq : 1.0;
    d.Br = Br_q * odd_scale;
    d.Dar = Dar_q * odd_scale;
    if (r < rfloor) d.Ar = Ar_q * odd_scale;

    // curvature scalars and radial derivatives from a 3-point analytic stencil
    const double del = 1e-3 * std::max(1.0, wf.s_max() / M_PI);
    WarpScalars c0 = warp_scalars_(sl, rq);
    WarpScalars cm = warp_scalars_(sl, rq - del);
    WarpScalars cp = warp_scalars_(sl, rq + del);
    d.lambda = c0.lambda;
    d.mu = c0.mu;
    d.R = c0.R;
    double lam_r = (cp.lambda - cm.lambda) / (2.0 * del);
    double mu_r = (cp.mu - cm.mu) / (2.0 * del);
    double R_r = (cp.R - cm.R) / (2.0 * del);
    double R_rr = (cp.R - 2.0 * c0.R + cm.R) / (del * del);
    double psi = wq.psi, psir = wq.psis;
    d.lambda_s = lam_r / psi;
    d.mu_s = mu_r / psi;
    d.Rs = R_r / psi;
    d.Rss = R_rr / (psi * psi) - R_r * psir / (psi * psi * psi);
    double csc = (wq.phis / psi) / wq.phi;  // C_s / C at the floored radius
    d.hessR_tang = d.Rs * csc;
    d.q_ns = (n_ - 2) * (c0.lambda - c0.mu) * csc;
    if (r < rfloor) {
      d.Rs *= odd_scale;
      d.lambda_s *= odd_scale;
      d.mu_s *= odd_scale;
      d.q_ns *= odd_scale;
    }
    return d;
  }

  Family family_ = Family::Flat;
  int n_ = 2;
  double kappa_ = 0.0;
  double t_max_ = std::numeric_limits<double>::infinity();
  double lambda_ = 1.0;
  std::shared_ptr<const WarpedFlow> warp_;
};

}  // namespace rfent
