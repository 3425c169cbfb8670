#pragma once

#include <optional>

#include "salyap/core.hpp"
#include "salyap/lyapunov.hpp"
#include "salyap/ode.hpp"

namespace salyap {

/**
 * Parameters of V(theta) = int_0^T exp(2 kappa tau) |s(tau, theta) - theta*|^2 dtau.
 *
 * mu and gamma are the exponential envelope constants of the flow. The
 * integral is evaluated with quad_nodes fixed RK4 steps on the augmented
 * system, so V is a smooth deterministic function of theta.
 */
struct ConverseParams {
  double kappa = 0.5;
  double T = 1.0;
  double mu = 1.0;
  double gamma = 1.0;
  long quad_nodes = 2000;

  /// ln(mu) / (gamma - kappa).
  double minimum_horizon() const;
  /// Throws Error("horizon too short") when T is below minimum_horizon().
  void validate() const;
};

/// kappa = gamma/2, T = ln(mu)/(gamma - kappa) + 1.
ConverseParams default_converse_params(double mu, double gamma, long quad_nodes = 2000);

struct ConverseOptions {
  bool fit_constants = true;
  /// Grid for the empirical constants {a, b, c, M}; default_fit_grid() when unset.
  std::optional<SampleGrid> fit_grid;
  double fit_slack = 0.01;
};

/// Default fit grid: radii 1e-2..1e2 (9 shells), 8 directions per shell.
SampleGrid default_fit_grid(const Vector& theta_star);

/// Builds the converse V. Gradient and Hessian are central differences with
/// steps 1e-4 |theta - theta*| (floor 1e-6).
LyapunovFunction construct_converse_V(const VectorField& f, const Vector& theta_star,
                                      const ConverseParams& params,
                                      const ConverseOptions& opts = {});

/// Value of the converse integral at one point; exposed for tests.
double converse_value(const VectorField& f, const Vector& theta_star, const ConverseParams& params,
                      const Vector& theta);

}  // namespace salyap
