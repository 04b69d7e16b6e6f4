#pragma once

// One-dimensional Gauss rules (Legendre, physicists' Hermite, generalized
// Laguerre) by bracketed Newton iteration on the orthogonal-polynomial
// recurrences, plus a composite Gauss-Legendre panel integrator.

#include <cmath>
#include <functional>
#include <vector>

#include "rfent/errors.hpp"

namespace rfent {

struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;
};

// Nodes and weights for \int_{-1}^{1} f(x) dx.
inline QuadRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("gauss_legendre order must be >= 1");
  QuadRule r;
  r.x.resize(static_cast<size_t>(n));
  r.w.resize(static_cast<size_t>(n));
  int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    r.x[static_cast<size_t>(i)] = -z;
    r.x[static_cast<size_t>(n - 1 - i)] = z;
    double w = 2.0 / ((1.0 - z * z) * pp * pp);
    r.w[static_cast<size_t>(i)] = w;
    r.w[static_cast<size_t>(n - 1 - i)] = w;
  }
  return r;
}

// Nodes and weights for \int_{-inf}^{inf} f(x) e^{-x^2} dx.
inline QuadRule gauss_hermite(int n) {
  if (n < 1) throw ConfigError("gauss_hermite order must be >= 1");
  QuadRule r;
  r.x.resize(static_cast<size_t>(n));
  r.w.resize(static_cast<size_t>(n));
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(n, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * r.x[static_cast<size_t>(n - 1)];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * r.x[static_cast<size_t>(n - 2)];
    } else {
      z = 2.0 * z - r.x[static_cast<size_t>(n - i + 1)];
    }
    double pp = 0.0;
    for (int it = 0; it < 200; ++it) {
      double p0 = pim4, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = z * std::sqrt(2.0 / (j + 1.0)) * p1 - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p2;
      }
      pp = std::sqrt(2.0 * n) * p1;
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    r.x[static_cast<size_t>(n - 1 - i)] = z;
    r.x[static_cast<size_t>(i)] = -z;
    double w = 2.0 / (pp * pp);
    r.w[static_cast<size_t>(n - 1 - i)] = w;
    r.w[static_cast<size_t>(i)] = w;
  }
  if (n % 2 == 1) r.x[static_cast<size_t>(n / 2)] = 0.0;
  return r;
}

// Nodes and weights for \int_0^{inf} f(x) x^alpha e^{-x} dx.
inline QuadRule gauss_laguerre(int n, double alpha) {
  if (n < 1) throw ConfigError("gauss_laguerre order must be >= 1");
  if (alpha <= -1.0) throw ConfigError("gauss_laguerre alpha must be > -1");
  QuadRule r;
  r.x.resize(static_cast<size_t>(n));
  r.w.resize(static_cast<size_t>(n));
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i == 0) {
      z = (1.0 + alpha) * (3.0 + 0.92 * alpha) / (1.0 + 2.4 * n + 1.8 * alpha);
    } else if (i == 1) {
      z += (15.0 + 6.25 * alpha) / (1.0 + 0.9 * alpha + 2.5 * n);
    } else {
      double ai = i - 1;
      z += ((1.0 + 2.55 * ai) / (1.9 * ai) + 1.26 * ai * alpha / (1.0 + 3.5 * ai)) *
           (z - r.x[static_cast<size_t>(i - 2)]) / (1.0 + 0.3 * alpha);
    }
    double pp = 0.0, p1 = 0.0;
    for (int it = 0; it < 200; ++it) {
      double p0 = 1.0;
      p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0 + alpha - z) * p1 - (j + alpha) * p2) / (j + 1.0);
      }
      pp = (n * p0 - (n + alpha) * p1) / z;
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-14 * (1.0 + z)) break;
    }
    r.x[static_cast<size_t>(i)] = z;
    r.w[static_cast<size_t>(i)] =
        -std::exp(std::lgamma(alpha + n) - std::lgamma(static_cast<double>(n))) / (pp * n * p1);
  }
  return r;
}

// Composite fixed-panel Gauss-Legendre quadrature of f over [a, b].
inline double integrate_panels(const std::function<double(double)>& f, double a, double b,
                               int panels, const QuadRule& rule) {
  double total = 0.0;
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h;
    double mid = lo + 0.5 * h;
    for (size_t k = 0; k < rule.x.size(); ++k)
      total += 0.5 * h * rule.w[k] * f(mid + 0.5 * h * rule.x[k]);
  }
  return total;
}

struct PanelEstimate {
  double value = 0.0;
  double error = 0.0;  // |I(2P) - I(P)| of the final doubling
  int panels = 0;
};

// Panel doubling until the successive difference meets the tolerance.
inline PanelEstimate integrate_doubling(const std::function<double(double)>& f, double a, double b,
                                        double rel_tol, int panels0 = 4, int max_panels = 4096,
                                        int order = 7) {
  QuadRule rule = gauss_legendre(order);
  PanelEstimate est;
  double prev = integrate_panels(f, a, b, panels0, rule);
  for (int p = 2 * panels0; p <= max_panels; p *= 2) {
    double cur = integrate_panels(f, a, b, p, rule);
    est.value = cur;
    est.error = std::abs(cur - prev);
    est.panels = p;
    if (est.error <= rel_tol * (1.0 + std::abs(cur))) return est;
    prev = cur;
  }
  return est;
}

}  // namespace rfent
