#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "salyap/core.hpp"

namespace salyap {

/// Right-hand side dy/dt = rhs(t, y), written into dy.
using RhsFunction = std::function<void(double t, const Vector& y, Vector& dy)>;

struct FlowResult {
  std::vector<double> times;
  std::vector<Vector> states;
  long accepted_steps = 0;
  long rejected_steps = 0;
  double max_local_error_estimate = 0.0;

  const Vector& final_state() const { return states.back(); }
};

struct AdaptiveOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// If nonempty, states are reported exactly at these times (sorted, within
  /// [0, t_end]) using the integrator's continuous extension. Otherwise every
  /// accepted step is reported.
  std::vector<double> output_times;
  long max_steps = 10'000'000;
};

/// Dormand-Prince 5(4) with per-step error control and 4th-order dense output.
/// Throws Error("integration failure at t = ...") on step-size underflow.
FlowResult integrate_dopri5(const RhsFunction& rhs, const Vector& y0, double t_end,
                            const AdaptiveOptions& opts);

/// Classical fixed-step RK4; every step is reported when record_all is set,
/// otherwise only the endpoints.
FlowResult integrate_rk4(const RhsFunction& rhs, const Vector& y0, double t_end, long n_steps,
                         bool record_all = true);

/// Flow map s(t, theta0) of d theta/dt = f(theta) on [0, horizon].
/// Tolerances must lie in (0, 1e-2].
FlowResult integrate_flow(const VectorField& f, const Vector& theta0, double horizon,
                          double rel_tol, double abs_tol,
                          std::span<const double> output_times = {});

FlowResult integrate_flow_fixed(const VectorField& f, const Vector& theta0, double horizon,
                                long n_steps);

struct GronwallReport {
  double min_ratio = 0.0;
  double argmin_time = 0.0;
  bool ok = false;
};

/**
 * Checks |s(t,theta0) - theta*| >= exp(-L t) |theta0 - theta*| along the flow.
 *
 * min_ratio is the minimum of |s(t) - theta*| exp(L t) / |theta0 - theta*| over
 * the dense output; ok iff min_ratio >= 1 - 1e-6.
 */
GronwallReport check_gronwall_lower_bound(const VectorField& f, const Vector& theta0,
                                          double horizon, double L, int output_points = 401);

/// Exponential envelope |s(t,theta)-theta*| <= mu |theta-theta*| exp(-gamma t).
struct StabilityEstimate {
  double mu_hat = 1.0;
  double gamma_hat = 0.0;
  double fit_residual = 0.0;  // RMS residual of the least-squares line
  int sample_count = 0;
  double lsq_mu = 1.0;  // raw regression values before the envelope pass
  double lsq_gamma = 0.0;
};

struct StabilityOptions {
  double horizon = 10.0;
  int samples_per_trajectory = 41;
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  /// A trajectory whose final-to-initial distance ratio exceeds this value is
  /// reported as "no exponential decay detected".
  double decay_ratio_threshold = 0.5;
  /// Relative amount by which the fitted rate is shrunk before mu is inflated.
  double gamma_deflation = 1e-3;
};

/**
 * Conservative envelope estimate of (mu, gamma) from trajectories started on a
 * grid around the field's equilibrium.
 *
 * Fits log|s-theta*| - log|theta-theta*| = log mu - gamma t by least squares,
 * caps gamma at the slowest per-trajectory tail rate, shrinks it by
 * gamma_deflation, then takes the smallest mu >= 1 for which every sample lies
 * under the envelope. This is an empirical construction, valid on the sampled
 * trajectories only.
 */
StabilityEstimate estimate_stability_constants(const VectorField& f, const SampleGrid& grid,
                                               const StabilityOptions& opts = {});

/// CSV with columns t,x_1..x_d.
void write_flow_csv(std::ostream& os, const FlowResult& flow);

}  // namespace salyap
