#pragma once

// Adaptive Dormand-Prince 5(4) integrator for small ODE systems.
// Supports exact landing on requested output abscissae and sign-change
// event location by bisection over re-integrated subintervals.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "rfent/errors.hpp"

namespace rfent {

inline constexpr int kMaxState = 96;

using OdeRhs = std::function<void(double s, const double* y, double* dy)>;

struct OdeOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double h_init = 0.0;   // 0 -> automatic
  double h_max = 0.0;    // 0 -> interval length
  long max_steps = 2000000;
};

struct OdeEvent {
  // Scalar whose sign change (strict product < 0) triggers the event.
  std::function<double(double s, const double* y)> fn;
  bool stop = true;        // truncate integration at the located root
  double s_tol = 1e-12;    // bisection tolerance in s
  // Filled by the driver:
  bool triggered = false;
  double s_hit = 0.0;
  std::array<double, kMaxState> y_hit{};
};

struct OdeOutput {
  double s;
  std::array<double, kMaxState> y;
};

struct OdeResult {
  double s_end = 0.0;                 // where integration actually stopped
  std::array<double, kMaxState> y{};  // state there
  bool truncated = false;             // true when a stopping event fired
  int stop_event = -1;                // index of the stopping event
  long n_steps = 0;
  std::vector<OdeOutput> outputs;     // states at requested abscissae <= s_end
};

namespace detail {

struct Dp54Tableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

}  // namespace detail

class OdeSolver {
 public:
  OdeSolver(int dim, OdeRhs rhs, OdeOptions opts = {})
      : dim_(dim), rhs_(std::move(rhs)), opts_(opts) {
    if (dim_ <= 0 || dim_ > kMaxState) throw ConfigError("ode dimension out of range");
  }

  // Integrates from (s0, y0) to s1 (s1 > s0 or s1 < s0 both allowed).
  // `outputs` must be sorted in integration direction and lie inside [s0, s1].
  OdeResult integrate(double s0, double s1, const double* y0,
                      const std::vector<double>& outputs = {},
                      std::vector<OdeEvent>* events = nullptr) const {
    using T = detail::Dp54Tableau;
    OdeResult res;
    res.outputs.reserve(outputs.size());

    const double dir = (s1 >= s0) ? 1.0 : -1.0;
    const double span = std::abs(s1 - s0);
    if (span == 0.0) {
      res.s_end = s0;
      std::memcpy(res.y.data(), y0, sizeof(double) * static_cast<size_t>(dim_));
      for (double so : outputs) res.outputs.push_back({so, res.y});
      return res;
    }

    std::array<double, kMaxState> y{}, ytmp{}, ynew{};
    std::array<double, kMaxState> k1{}, k2{}, k3{}, k4{}, k5{}, k6{}, k7{};
    std::memcpy(y.data(), y0, sizeof(double) * static_cast<size_t>(dim_));

    double s = s0;
    double h_max = (opts_.h_max > 0) ? opts_.h_max : span;
    double h = (opts_.h_init > 0) ? opts_.h_init : std::min(h_max, span / 100.0);
    h = std::min(h, h_max);

    size_t next_out = 0;
    std::vector<double> ev_prev;
    if (events) {
      ev_prev.resize(events->size());
      for (size_t i = 0; i < events->size(); ++i) ev_prev[i] = (*events)[i].fn(s, y.data());
    }

    rhs_(s, y.data(), k1.data());
    bool have_k1 = true;

    for (long step = 0; step < opts_.max_steps; ++step) {
      double remaining = std::abs(s1 - s);
      if (remaining <= 1e-15 * (1.0 + std::abs(s1))) break;
      h = std::min(h, remaining);
      // Land exactly on the next requested output point.
      if (next_out < outputs.size()) {
        double to_out = std::abs(outputs[next_out] - s);
        if (to_out > 1e-15 * (1.0 + std::abs(s))) h = std::min(h, to_out);
      }
      double hs = dir * h;

      if (!have_k1) {
        rhs_(s, y.data(), k1.data());
        have_k1 = true;
      }
      stage_(y, hs, {{T::a21, 0, 0, 0, 0, 0}}, {&k1}, ytmp);
      rhs_(s + T::c2 * hs, ytmp.data(), k2.data());
      stage_(y, hs, {{T::a31, T::a32, 0, 0, 0, 0}}, {&k1, &k2}, ytmp);
      rhs_(s + T::c3 * hs, ytmp.data(), k3.data());
      stage_(y, hs, {{T::a41, T::a42, T::a43, 0, 0, 0}}, {&k1, &k2, &k3}, ytmp);
      rhs_(s + T::c4 * hs, ytmp.data(), k4.data());
      stage_(y, hs, {{T::a51, T::a52, T::a53, T::a54, 0, 0}}, {&k1, &k2, &k3, &k4}, ytmp);
      rhs_(s + T::c5 * hs, ytmp.data(), k5.data());
      stage_(y, hs, {{T::a61, T::a62, T::a63, T::a64, T::a65, 0}}, {&k1, &k2, &k3, &k4, &k5},
             ytmp);
      rhs_(s + hs, ytmp.data(), k6.data());
      for (int i = 0; i < dim_; ++i)
        ynew[i] = y[i] + hs * (T::b1 * k1[i] + T::b3 * k3[i] + T::b4 * k4[i] + T::b5 * k5[i] +
                               T::b6 * k6[i]);
      rhs_(s + hs, ynew.data(), k7.data());

      double err = 0.0;
      for (int i = 0; i < dim_; ++i) {
        double e = hs * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] +
                         T::e6 * k6[i] + T::e7 * k7[i]);
        double sc = opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        err = std::max(err, std::abs(e) / sc);
      }

      if (err <= 1.0) {
        double s_new = s + hs;
        // Event scan over the accepted step.
        if (events) {
          for (size_t ie = 0; ie < events->size(); ++ie) {
            OdeEvent& ev = (*events)[ie];
            if (ev.triggered && ev.stop) continue;
            double val = ev.fn(s_new, ynew.data());
            if (ev_prev[ie] != 0.0 && val != 0.0 && ev_prev[ie] * val < 0.0 && !ev.triggered) {
              locate_event_(ev, s, y, s_new);
              if (ev.stop) {
                flush_outputs_(outputs, next_out, s, y, k1, ev.s_hit, ev.y_hit, dir, res);
                res.s_end = ev.s_hit;
                res.y = ev.y_hit;
                res.truncated = true;
                res.stop_event = static_cast<int>(ie);
                res.n_steps = step + 1;
                return res;
              }
            }
            ev_prev[ie] = val;
          }
        }
        flush_outputs_(outputs, next_out, s, y, k1, s_new, ynew, dir, res);
        s = s_new;
        y = ynew;
        k1 = k7;  // FSAL
        double grow = (err == 0.0) ? 5.0 : 0.9 * std::pow(err, -0.2);
        h = std::min(h_max, h * std::clamp(grow, 0.2, 5.0));
      } else {
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        have_k1 = true;  // k1 still valid at unchanged s
        if (h < 1e-14 * (1.0 + std::abs(s)))
          throw IntegrationError("step size underflow at s = " + std::to_string(s));
      }
    }
    if (std::abs(s1 - s) > 1e-12 * (1.0 + std::abs(s1)))
      throw IntegrationError("max step count exceeded");

    res.s_end = s;
    res.y = y;
    res.n_steps = opts_.max_steps;
    // Emit any outputs that coincide with the right endpoint.
    while (next_out < outputs.size() &&
           std::abs(outputs[next_out] - s) <= 1e-12 * (1.0 + std::abs(s))) {
      res.outputs.push_back({outputs[next_out], y});
      ++next_out;
    }
    return res;
  }

 private:
  static void stage_(const std::array<double, kMaxState>& y, double hs,
                     const std::array<std::array<double, 6>, 1>& coef,
                     std::initializer_list<const std::array<double, kMaxState>*> ks,
                     std::array<double, kMaxState>& out) {
    out = y;
    int j = 0;
    for (const auto* k : ks) {
      double c = coef[0][static_cast<size_t>(j++)];
      if (c == 0.0) continue;
      for (size_t i = 0; i < kMaxState; ++i) out[i] += hs * c * (*k)[i];
    }
  }

  // Interpolates states between accepted points by cubic Hermite; accurate
  // enough because output spacing and step sizes stay small in this toolkit.
  void hermite_(double s0, const std::array<double, kMaxState>& y0,
                const std::array<double, kMaxState>& f0, double s1,
                const std::array<double, kMaxState>& y1, double sq,
                std::array<double, kMaxState>& out) const {
    double h = s1 - s0;
    if (h == 0.0) {
      out = y1;
      return;
    }
    std::array<double, kMaxState> f1{};
    rhs_(s1, y1.data(), f1.data());
    double u = (sq - s0) / h;
    double u2 = u * u, u3 = u2 * u;
    double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
    double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    for (int i = 0; i < dim_; ++i)
      out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
  }

  void flush_outputs_(const std::vector<double>& outputs, size_t& next_out, double s0,
                      const std::array<double, kMaxState>& y0,
                      const std::array<double, kMaxState>& f0, double s1,
                      const std::array<double, kMaxState>& y1, double dir, OdeResult& res) const {
    while (next_out < outputs.size()) {
      double so = outputs[next_out];
      if (dir * (so - s1) > 1e-15 * (1.0 + std::abs(s1))) break;
      if (std::abs(so - s1) <= 1e-13 * (1.0 + std::abs(s1))) {
        res.outputs.push_back({so, y1});
      } else {
        OdeOutput o;
        o.s = so;
        hermite_(s0, y0, f0, s1, y1, so, o.y);
        res.outputs.push_back(o);
      }
      ++next_out;
    }
  }

  // Bisection on re-integrated subintervals from the step start; exact to s_tol.
  void locate_event_(OdeEvent& ev, double s0, const std::array<double, kMaxState>& y0,
                     double s1) const {
    double lo = s0, hi = s1;
    std::array<double, kMaxState> ylo = y0;
    double flo = ev.fn(lo, ylo.data());
    OdeOptions sub = opts_;
    sub.h_init = 0.0;
    OdeSolver inner(dim_, rhs_, sub);
    for (int it = 0; it < 200 && std::abs(hi - lo) > ev.s_tol; ++it) {
      double mid = 0.5 * (lo + hi);
      OdeResult r = inner.integrate(lo, mid, ylo.data());
      double fm = ev.fn(mid, r.y.data());
      if (flo != 0.0 && flo * fm <= 0.0) {
        hi = mid;
      } else {
        lo = mid;
        ylo = r.y;
        flo = fm;
      }
    }
    OdeResult r = inner.integrate(lo, hi, ylo.data());
    ev.triggered = true;
    ev.s_hit = hi;
    ev.y_hit = r.y;
  }

  int dim_;
  OdeRhs rhs_;
  OdeOptions opts_;
};

}  // namespace rfent
