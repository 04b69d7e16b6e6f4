#pragma once

// Rotationally symmetric Ricci flow for warped-product metrics
//
//   g(t) = psi(sigma,t)^2 dsigma^2 + phi(sigma,t)^2 g_{S^{n-1}}
//
// evolved in the fixed coordinate sigma (arclength of the initial slice).
// With s-derivatives taken in arclength (d/ds = psi^{-1} d/dsigma) the flow
// reads
//
//   d phi/dt = phi_ss - (n-2) (1 - phi_s^2) / phi
//   d psi/dt = (n-1) psi phi_ss / phi
//
// which keeps the chart fixed, so the flow equation can be checked directly
// on metric components.
//
// The profiles are represented spectrally: phi in an odd trigonometric basis
// (plus odd polynomial modes on open domains) and psi in the matching even
// basis. Pole regularity (phi odd, psi even, dphi/ds = +-1 at the poles) is
// then structural or enforced by a rank-two projection of the psi
// coefficients, and every sigma-derivative is analytic. Time stepping is RK4
// on the coefficients with collocation least squares, plus a weak spectral
// tail filter.

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rfent/errors.hpp"

namespace rfent {

struct WarpedSpec {
  int dim = 3;
  int mesh = 256;          // collocation points
  int modes = 0;           // 0 -> min(48, mesh/4)
  double s_max = M_PI;
  bool closed = true;      // second pole at s_max (sphere-like profile)
  std::function<double(double)> phi0;
  double horizon = 0.1;    // evolve this far (or until degeneration)
  double cfl = 0.25;       // dt = cfl * (smallest resolved wavelength)^2 * min(psi)^2
  int snapshot_stride = 4;
  double sponge = 0.8;     // open topology: outer band excluded from queries
};

// Profile data at one (sigma, t): values and analytic sigma-derivatives.
struct WarpState {
  double phi = 0, phis = 0, phiss = 0;
  double phi_over_sigma = 0;  // stable at the origin
  double psi = 1, psis = 0;
};

namespace detail {

// sin(x)/x with series fallback
inline double sinc_stable(double x) {
  if (std::abs(x) < 1e-4) {
    double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

// dense symmetric positive definite solve (normal equations are small)
class SpdSolver {
 public:
  explicit SpdSolver(std::vector<double> a, int n) : l_(std::move(a)), n_(n) {
    for (int j = 0; j < n_; ++j) {
      for (int k = 0; k < j; ++k) {
        double s = at(j, k);
        for (int i = 0; i < k; ++i) s -= at(j, i) * at(k, i);
        at(j, k) = s / at(k, k);
      }
      double s = at(j, j);
      for (int i = 0; i < j; ++i) s -= at(j, i) * at(j, i);
      if (s <= 0) throw ConfigError("spectral normal matrix not positive definite");
      at(j, j) = std::sqrt(s);
    }
  }
  void solve(std::vector<double>& x) const {
    for (int i = 0; i < n_; ++i) {
      double s = x[static_cast<size_t>(i)];
      for (int k = 0; k < i; ++k) s -= at(i, k) * x[static_cast<size_t>(k)];
      x[static_cast<size_t>(i)] = s / at(i, i);
    }
    for (int i = n_ - 1; i >= 0; --i) {
      double s = x[static_cast<size_t>(i)];
      for (int k = i + 1; k < n_; ++k) s -= at(k, i) * x[static_cast<size_t>(k)];
      x[static_cast<size_t>(i)] = s / at(i, i);
    }
  }

 private:
  double& at(int i, int j) { return l_[static_cast<size_t>(i * n_ + j)]; }
  double at(int i, int j) const { return l_[static_cast<size_t>(i * n_ + j)]; }
  std::vector<double> l_;
  int n_;
};

}  // namespace detail

class WarpedFlow {
 public:
  explicit WarpedFlow(WarpedSpec spec) : spec_(std::move(spec)) {
    if (spec_.dim < 2) throw ConfigError("warped model needs dim >= 2");
    if (spec_.mesh < 32) throw ConfigError("warped mesh too coarse (need >= 32 points)");
    if (spec_.s_max <= 0) throw ConfigError("warped s_max must be positive");
    if (!spec_.phi0) throw ConfigError("warped model needs an initial profile");
    m_ = spec_.mesh;
    nk_ = (spec_.modes > 0) ? spec_.modes : std::min(48, m_ / 4);
    if (nk_ < 8) throw ConfigError("warped model needs at least 8 modes");
    npoly_ = spec_.closed ? 0 : 2;  // odd polynomial helpers sigma, sigma^3 on open domains
    na_ = nk_ + npoly_;
    nb_ = nk_ + 1 + (spec_.closed ? 0 : 1);  // DC mode, and sigma^2 on open domains

    col_.resize(static_cast<size_t>(m_));
    for (int i = 0; i < m_; ++i) col_[static_cast<size_t>(i)] = (i + 0.5) * spec_.s_max / m_;

    build_projectors_();

    // initial coefficients from the profile and psi == 1
    std::vector<double> f(static_cast<size_t>(m_));
    for (int i = 0; i < m_; ++i) f[static_cast<size_t>(i)] = spec_.phi0(col_[static_cast<size_t>(i)]);
    a_ = project_phi_(f);
    b_.assign(static_cast<size_t>(nb_), 0.0);
    b_[0] = 1.0;
    project_closure_(a_, b_);

    std::vector<double> chk = phi_values_(a_);
    double fit_err = 0.0;
    for (int i = 0; i < m_; ++i)
      fit_err = std::max(fit_err, std::abs(chk[static_cast<size_t>(i)] - f[static_cast<size_t>(i)]));
    for (int i = 0; i < m_; ++i)
      if (chk[static_cast<size_t>(i)] <= 0.0)
        throw ConfigError("initial profile must be positive away from the poles");
    (void)fit_err;

    t_ = 0.0;
    record_snapshot_();
    evolve_to_(spec_.horizon);
  }

  int dim() const { return spec_.dim; }
  int mesh() const { return m_; }
  int modes() const { return nk_; }
  double s_max() const { return spec_.s_max; }
  bool closed() const { return spec_.closed; }
  double time() const { return t_; }
  double sponge() const { return spec_.sponge; }
  double t_max() const { return degenerate_ ? t_ : spec_.horizon; }
  bool degenerated() const { return degenerate_; }

  // shortest resolved wavelength sets the explicit step restriction
  double cfl_limit() const {
    double wmax = omega_(nk_ - 1);
    double pmin = 1e300;
    std::vector<double> pv = psi_values_(b_);
    for (double p : pv) pmin = std::min(pmin, p);
    return spec_.cfl * (1.0 / (wmax * wmax)) * pmin * pmin;
  }

  std::vector<double> collocation() const { return col_; }
  std::vector<double> phi_now() const { return phi_values_(a_); }
  std::vector<double> psi_now() const { return psi_values_(b_); }

  // One RK4 step of the coefficient system. Throws ConfigError when dt
  // violates the step restriction and NeckDegenerationError when phi touches
  // zero away from the poles (the flow is stopped at the last good time).
  void step(double dt) {
    if (degenerate_) throw NeckDegenerationError(t_);
    if (dt <= 0) throw ConfigError("warped step needs dt > 0");
    if (dt > cfl_limit() * (1.0 + 1e-9))
      throw ConfigError("warped step restriction violated: dt = " + std::to_string(dt) +
                        " exceeds " + std::to_string(cfl_limit()));
    auto sum = [&](const std::vector<double>& x, const std::vector<double>& k, double c) {
      std::vector<double> r(x.size());
      for (size_t i = 0; i < x.size(); ++i) r[i] = x[i] + c * k[i];
      return r;
    };
    std::vector<double> ka1, kb1, ka2, kb2, ka3, kb3, ka4, kb4;
    rhs_(a_, b_, ka1, kb1);
    auto a2 = sum(a_, ka1, 0.5 * dt), b2 = sum(b_, kb1, 0.5 * dt);
    project_closure_(a2, b2);
    rhs_(a2, b2, ka2, kb2);
    auto a3 = sum(a_, ka2, 0.5 * dt), b3 = sum(b_, kb2, 0.5 * dt);
    project_closure_(a3, b3);
    rhs_(a3, b3, ka3, kb3);
    auto a4 = sum(a_, ka3, dt), b4 = sum(b_, kb3, dt);
    project_closure_(a4, b4);
    rhs_(a4, b4, ka4, kb4);
    std::vector<double> an(a_.size()), bn(b_.size());
    for (size_t i = 0; i < a_.size(); ++i)
      an[i] = a_[i] + dt / 6.0 * (ka1[i] + 2 * ka2[i] + 2 * ka3[i] + ka4[i]);
    for (size_t i = 0; i < b_.size(); ++i)
      bn[i] = b_[i] + dt / 6.0 * (kb1[i] + 2 * kb2[i] + 2 * kb3[i] + kb4[i]);
    filter_(an, bn);
    project_closure_(an, bn);
    std::vector<double> pv = phi_values_(an);
    for (double p : pv)
      if (p <= 0.0) {
        degenerate_ = true;
        throw NeckDegenerationError(t_);
      }
    a_.swap(an);
    b_.swap(bn);
    t_ += dt;
  }

  // Hermite-interpolated coefficient slice at a fixed time; lets callers
  // evaluate several radii without re-blending.
  struct Slice {
    std::array<double, 80> a{}, b{};
  };
  Slice slice(double t) const {
    Slice s;
    blend_(t, s.a.data(), s.b.data());
    return s;
  }
  WarpState eval_slice(const Slice& s, double sigma) const {
    WarpState st;
    eval_coeffs_(sigma, s.a.data(), s.b.data(), st);
    return st;
  }

  // Profile values and analytic derivatives at (sigma, t); sigma may run
  // through the poles (trig parity extends the profiles smoothly). The
  // coefficients are Hermite-interpolated in t between snapshots.
  WarpState eval(double sigma, double t) const {
    Slice s = slice(t);
    return eval_slice(s, sigma);
  }

 private:
  double omega_(int k) const {
    return spec_.closed ? (k + 1) * M_PI / spec_.s_max : (k + 0.5) * M_PI / spec_.s_max;
  }

  void build_projectors_() {
    // normal-equation pseudoinverses for the phi and psi bases
    int M = m_;
    sphi_.assign(static_cast<size_t>(M * na_), 0.0);
    spsi_.assign(static_cast<size_t>(M * nb_), 0.0);
    for (int i = 0; i < M; ++i) {
      double s = col_[static_cast<size_t>(i)];
      for (int k = 0; k < nk_; ++k)
        sphi_[static_cast<size_t>(i * na_ + k)] = std::sin(omega_(k) * s);
      if (npoly_ > 0) {
        sphi_[static_cast<size_t>(i * na_ + nk_)] = s;
        sphi_[static_cast<size_t>(i * na_ + nk_ + 1)] = s * s * s;
      }
      spsi_[static_cast<size_t>(i * nb_ + 0)] = 1.0;
      for (int k = 0; k < nk_; ++k)
        spsi_[static_cast<size_t>(i * nb_ + 1 + k)] = std::cos(omega_(k) * s);
      if (!spec_.closed) spsi_[static_cast<size_t>(i * nb_ + 1 + nk_)] = s * s;
    }
    auto normal = [M](const std::vector<double>& S, int n) {
      std::vector<double> g(static_cast<size_t>(n * n), 0.0);
      for (int i = 0; i < M; ++i)
        for (int a = 0; a < n; ++a)
          for (int c = 0; c < n; ++c)
            g[static_cast<size_t>(a * n + c)] +=
                S[static_cast<size_t>(i * n + a)] * S[static_cast<size_t>(i * n + c)];
      for (int a = 0; a < n; ++a) g[static_cast<size_t>(a * n + a)] *= 1.0 + 1e-13;
      return g;
    };
    chol_phi_ = std::make_unique<detail::SpdSolver>(normal(sphi_, na_), na_);
    chol_psi_ = std::make_unique<detail::SpdSolver>(normal(spsi_, nb_), nb_);
  }

  std::vector<double> project_phi_(const std::vector<double>& f) const {
    std::vector<double> rhs(static_cast<size_t>(na_), 0.0);
    for (int i = 0; i < m_; ++i)
      for (int k = 0; k < na_; ++k)
        rhs[static_cast<size_t>(k)] += sphi_[static_cast<size_t>(i * na_ + k)] * f[static_cast<size_t>(i)];
    chol_phi_->solve(rhs);
    return rhs;
  }
  std::vector<double> project_psi_(const std::vector<double>& f) const {
    std::vector<double> rhs(static_cast<size_t>(nb_), 0.0);
    for (int i = 0; i < m_; ++i)
      for (int k = 0; k < nb_; ++k)
        rhs[static_cast<size_t>(k)] += spsi_[static_cast<size_t>(i * nb_ + k)] * f[static_cast<size_t>(i)];
    chol_psi_->solve(rhs);
    return rhs;
  }

  std::vector<double> phi_values_(const std::vector<double>& a) const {
    std::vector<double> f(static_cast<size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i)
      for (int k = 0; k < na_; ++k)
        f[static_cast<size_t>(i)] += sphi_[static_cast<size_t>(i * na_ + k)] * a[static_cast<size_t>(k)];
    return f;
  }
  std::vector<double> psi_values_(const std::vector<double>& b) const {
    std::vector<double> f(static_cast<size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i)
      for (int k = 0; k < nb_; ++k)
        f[static_cast<size_t>(i)] += spsi_[static_cast<size_t>(i * nb_ + k)] * b[static_cast<size_t>(k)];
    return f;
  }

  // dphi/ds = 1 at the origin pole (and -1 at the far pole when closed):
  // psi(0) = phi_sigma(0), psi(smax) = -phi_sigma(smax). Minimal-norm
  // correction of the psi coefficients enforces these exactly.
  void project_closure_(const std::vector<double>& a, std::vector<double>& b) const {
    double dphi0 = 0.0, dphi1 = 0.0;
    for (int k = 0; k < nk_; ++k) {
      double w = omega_(k);
      dphi0 += a[static_cast<size_t>(k)] * w;
      dphi1 += a[static_cast<size_t>(k)] * w * std::cos(w * spec_.s_max);
    }
    if (npoly_ > 0) {
      dphi0 += a[static_cast<size_t>(nk_)];
      dphi1 += a[static_cast<size_t>(nk_)] +
               3.0 * spec_.s_max * spec_.s_max * a[static_cast<size_t>(nk_ + 1)];
    }
    // rows of the constraint matrix in coefficient space
    std::vector<double> u(static_cast<size_t>(nb_), 0.0), w2(static_cast<size_t>(nb_), 0.0);
    u[0] = 1.0;
    for (int k = 0; k < nk_; ++k) u[static_cast<size_t>(1 + k)] = 1.0;  // cos(0)
    double c1 = dphi0, r1 = 0.0;
    for (int k = 0; k < nb_; ++k) r1 += u[static_cast<size_t>(k)] * b[static_cast<size_t>(k)];
    if (spec_.closed) {
      w2[0] = 1.0;
      for (int k = 0; k < nk_; ++k)
        w2[static_cast<size_t>(1 + k)] = std::cos(omega_(k) * spec_.s_max);
      double c2 = -dphi1, r2 = 0.0;
      for (int k = 0; k < nb_; ++k) r2 += w2[static_cast<size_t>(k)] * b[static_cast<size_t>(k)];
      // 2x2 normal system for the minimal-norm correction b += U alpha
      double uu = 0, uw = 0, ww = 0;
      for (int k = 0; k < nb_; ++k) {
        uu += u[static_cast<size_t>(k)] * u[static_cast<size_t>(k)];
        uw += u[static_cast<size_t>(k)] * w2[static_cast<size_t>(k)];
        ww += w2[static_cast<size_t>(k)] * w2[static_cast<size_t>(k)];
      }
      double d1 = c1 - r1, d2 = c2 - r2;
      double det = uu * ww - uw * uw;
      double al = (ww * d1 - uw * d2) / det;
      double be = (uu * d2 - uw * d1) / det;
      for (int k = 0; k < nb_; ++k)
        b[static_cast<size_t>(k)] += al * u[static_cast<size_t>(k)] + be * w2[static_cast<size_t>(k)];
    } else {
      double uu = 0;
      for (int k = 0; k < nb_; ++k) uu += u[static_cast<size_t>(k)] * u[static_cast<size_t>(k)];
      double al = (c1 - r1) / uu;
      for (int k = 0; k < nb_; ++k) b[static_cast<size_t>(k)] += al * u[static_cast<size_t>(k)];
    }
  }

  void rhs_(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& da,
            std::vector<double>& db) const {
    int n = spec_.dim;
    std::vector<double> fphi(static_cast<size_t>(m_)), fpsi(static_cast<size_t>(m_));
    for (int i = 0; i < m_; ++i) {
      double s = col_[static_cast<size_t>(i)];
      WarpState st;
      eval_coeffs_(s, a.data(), b.data(), st);
      double phis = st.phis / st.psi;
      double phiss = st.phiss / (st.psi * st.psi) - st.phis * st.psis / (st.psi * st.psi * st.psi);
      fphi[static_cast<size_t>(i)] = phiss - (n - 2) * (1.0 - phis * phis) / st.phi;
      fpsi[static_cast<size_t>(i)] = (n - 1) * st.psi * phiss / st.phi;
    }
    da = project_phi_(fphi);
    db = project_psi_(fpsi);
  }

  void filter_(std::vector<double>& a, std::vector<double>& b) const {
    for (int k = 0; k < nk_; ++k) {
      double x = static_cast<double>(k + 1) / nk_;
      double f = std::exp(-24.0 * std::pow(x, 24));
      a[static_cast<size_t>(k)] *= f;
      b[static_cast<size_t>(1 + k)] *= f;
    }
  }

  void record_snapshot_() {
    std::vector<double> da, db;
    rhs_(a_, b_, da, db);
    snap_t_.push_back(t_);
    snap_a_.push_back(a_);
    snap_b_.push_back(b_);
    snap_da_.push_back(da);
    snap_db_.push_back(db);
  }

  void evolve_to_(double t_target) {
    int since_snap = 0;
    while (t_ < t_target) {
      double dt = std::min(cfl_limit(), t_target - t_);
      try {
        step(dt);
      } catch (const NeckDegenerationError&) {
        break;  // flow stopped; t_max() reports the last good time
      }
      if (++since_snap >= spec_.snapshot_stride || t_ >= t_target) {
        record_snapshot_();
        since_snap = 0;
      }
    }
    if (since_snap > 0) record_snapshot_();
  }

  // Hermite-blended coefficient vectors at time t.
  void blend_(double t, double* ab, double* bb) const {
    if (snap_t_.size() < 2) {
      for (int i = 0; i < na_; ++i) ab[i] = a_[static_cast<size_t>(i)];
      for (int i = 0; i < nb_; ++i) bb[i] = b_[static_cast<size_t>(i)];
      return;
    }
    size_t k;
    if (t <= snap_t_.front()) {
      k = 0;
    } else if (t >= snap_t_.back()) {
      k = snap_t_.size() - 2;
    } else {
      size_t lo = 0, hi = snap_t_.size() - 1;
      while (hi - lo > 1) {
        size_t mid = (lo + hi) / 2;
        if (snap_t_[mid] <= t)
          lo = mid;
        else
          hi = mid;
      }
      k = lo;
    }
    double t0 = snap_t_[k], t1 = snap_t_[k + 1];
    double dt = t1 - t0;
    double u = (dt > 0) ? (t - t0) / dt : 0.0;
    double u2 = u * u, u3 = u2 * u;
    double h00 = 2 * u3 - 3 * u2 + 1, h01 = -2 * u3 + 3 * u2;
    double h10 = (u3 - 2 * u2 + u) * dt, h11 = (u3 - u2) * dt;
    const auto& a0 = snap_a_[k];
    const auto& a1 = snap_a_[k + 1];
    const auto& da0 = snap_da_[k];
    const auto& da1 = snap_da_[k + 1];
    for (int i = 0; i < na_; ++i)
      ab[i] = h00 * a0[static_cast<size_t>(i)] + h01 * a1[static_cast<size_t>(i)] +
              h10 * da0[static_cast<size_t>(i)] + h11 * da1[static_cast<size_t>(i)];
    const auto& b0 = snap_b_[k];
    const auto& b1 = snap_b_[k + 1];
    const auto& db0 = snap_db_[k];
    const auto& db1 = snap_db_[k + 1];
    for (int i = 0; i < nb_; ++i)
      bb[i] = h00 * b0[static_cast<size_t>(i)] + h01 * b1[static_cast<size_t>(i)] +
              h10 * db0[static_cast<size_t>(i)] + h11 * db1[static_cast<size_t>(i)];
  }

  // The frequencies are equally spaced, so sin/cos advance by one complex
  // rotation per mode instead of two libm calls.
  void eval_coeffs_(double sigma, const double* a, const double* b, WarpState& st) const {
    st = WarpState{};
    st.psi = b[0];
    st.phi = st.phis = st.phiss = st.phi_over_sigma = st.psis = 0.0;
    double w0 = omega_(0), dw = omega_(1) - omega_(0);
    double cs = std::cos(w0 * sigma), sn = std::sin(w0 * sigma);
    double cd = std::cos(dw * sigma), sd = std::sin(dw * sigma);
    bool tiny = std::abs(sigma) < 1e-4;  // sinc needs its series branch there
    double phi_plain = 0.0;
    for (int k = 0; k < nk_; ++k) {
      double om = w0 + k * dw;
      double ak = a[k];
      st.phi += ak * sn;
      st.phis += ak * om * cs;
      st.phiss += -ak * om * om * sn;
      if (tiny) st.phi_over_sigma += ak * om * detail::sinc_stable(om * sigma);
      double bk = b[1 + k];
      st.psi += bk * cs;
      st.psis += -bk * om * sn;
      double c2 = cs * cd - sn * sd;
      sn = sn * cd + cs * sd;
      cs = c2;
    }
    (void)phi_plain;
    if (npoly_ > 0) {
      double c1 = a[nk_], c3 = a[nk_ + 1];
      st.phi += c1 * sigma + c3 * sigma * sigma * sigma;
      st.phis += c1 + 3.0 * c3 * sigma * sigma;
      st.phiss += 6.0 * c3 * sigma;
      if (tiny) st.phi_over_sigma += c1 + c3 * sigma * sigma;
      double b2 = b[1 + nk_];
      st.psi += b2 * sigma * sigma;
      st.psis += 2.0 * b2 * sigma;
    }
    if (!tiny) st.phi_over_sigma = st.phi / sigma;
  }

  WarpedSpec spec_;
  int m_ = 0, nk_ = 0, npoly_ = 0, na_ = 0, nb_ = 0;
  double t_ = 0;
  bool degenerate_ = false;
  std::vector<double> col_;
  std::vector<double> sphi_, spsi_;  // basis value tables at collocation points
  std::unique_ptr<detail::SpdSolver> chol_phi_, chol_psi_;
  std::vector<double> a_, b_;
  std::vector<double> snap_t_;
  std::vector<std::vector<double>> snap_a_, snap_b_, snap_da_, snap_db_;
};

}  // namespace rfent
