#pragma once

#include <stdexcept>
#include <string>

#include "rfent/linalg.hpp"

namespace rfent {

// Base class for everything the toolkit throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Query time outside the existence interval [0, T_max).
struct FlowDomainError : Error {
  FlowDomainError(double t, double t_max)
      : Error("time " + std::to_string(t) + " outside flow existence interval [0, " +
              std::to_string(t_max) + ")"),
        t(t),
        t_max(t_max) {}
  double t;
  double t_max;
};

// Point outside the model chart.
struct ChartError : Error {
  explicit ChartError(double r, double r_max)
      : Error("point at chart radius " + std::to_string(r) + " outside chart (r_max = " +
              std::to_string(r_max) + ")"),
        r(r),
        r_max(r_max) {}
  double r;
  double r_max;
};

// Path fails the finite-action admissibility condition at the initial time.
struct AdmissibilityError : Error {
  explicit AdmissibilityError(const std::string& what) : Error(what) {}
};

// Invalid configuration (bad mesh, violated step restriction, bad scheme, ...).
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Geodesic left the chart or the flow domain before reaching the requested time.
struct TruncationError : Error {
  TruncationError(double exit_time, const std::string& reason)
      : Error("geodesic truncated at t = " + std::to_string(exit_time) + ": " + reason),
        exit_time(exit_time) {}
  double exit_time;
};

// Adaptive integrator could not meet its tolerance.
struct IntegrationError : Error {
  explicit IntegrationError(const std::string& what) : Error(what) {}
};

// Linearized (Jacobi) system blew up; carries the last valid time.
struct PropagationError : Error {
  PropagationError(double last_valid_time, const std::string& what)
      : Error(what), last_valid_time(last_valid_time) {}
  double last_valid_time;
};

// Shooting-map root finding failed; carries the best candidate found.
struct NonconvergenceError : Error {
  NonconvergenceError(const Vec& best_v, double residual)
      : Error("shooting inversion did not converge (best residual " + std::to_string(residual) +
              ")"),
        best_v(best_v),
        residual(residual) {}
  Vec best_v;
  double residual;
};

// Warped profile touched zero away from the poles; the flow is stopped there.
struct NeckDegenerationError : Error {
  explicit NeckDegenerationError(double t_stop)
      : Error("warped profile degenerated at t = " + std::to_string(t_stop)), t_stop(t_stop) {}
  double t_stop;
};

// Too many quadrature nodes failed to shoot.
struct CoverageError : Error {
  CoverageError(double failed_fraction)
      : Error("quadrature coverage failure: " + std::to_string(100.0 * failed_fraction) +
              "% of nodes failed to shoot"),
        failed_fraction(failed_fraction) {}
  double failed_fraction;
};

// A finite-difference stencil stepped outside the chart.
struct StencilError : Error {
  explicit StencilError(const std::string& what) : Error(what) {}
};

}  // namespace rfent
