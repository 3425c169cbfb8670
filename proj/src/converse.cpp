#include "salyap/converse.hpp"

#include <cmath>

#include <fmt/format.h>

namespace salyap {

double ConverseParams::minimum_horizon() const { return std::log(mu) / (gamma - kappa); }

void ConverseParams::validate() const {
  if (!(gamma > 0.0)) throw Error("converse construction needs gamma > 0");
  if (!(mu >= 1.0)) throw Error("converse construction needs mu >= 1");
  if (!(kappa > 0.0 && kappa < gamma)) throw Error("kappa must lie in (0, gamma)");
  if (!(T > 0.0)) throw Error("converse horizon must be positive");
  if (quad_nodes < 1) throw Error("quad_nodes must be positive");
  if (T < minimum_horizon()) {
    throw Error(
        fmt::format("horizon too short: T = {} < ln(mu)/(gamma-kappa) = {}", T, minimum_horizon()));
  }
}

ConverseParams default_converse_params(double mu, double gamma, long quad_nodes) {
  ConverseParams p;
  p.mu = mu;
  p.gamma = gamma;
  p.kappa = gamma / 2.0;
  p.T = std::log(mu) / (gamma - p.kappa) + 1.0;
  p.quad_nodes = quad_nodes;
  return p;
}

SampleGrid default_fit_grid(const Vector& theta_star) {
  return SampleGrid{theta_star, geometric_radii(1e-2, 1e2, 9), 8, 0x636f6e76ULL};
}

double converse_value(const VectorField& f, const Vector& theta_star, const ConverseParams& p,
                      const Vector& theta) {
  const auto d = theta.size();
  if (d != f.dim() || theta_star.size() != d) throw Error("dimension mismatch in converse V");
  const double two_kappa = 2.0 * p.kappa;
  // Augmented state (s, v).
  RhsFunction rhs = [&](double tau, const Vector& y, Vector& dy) {
    const Vector s = y.head(d);
    dy.resize(d + 1);
    dy.head(d) = f(s);
    dy(d) = std::exp(two_kappa * tau) * (s - theta_star).squaredNorm();
  };
  Vector y0(d + 1);
  y0.head(d) = theta;
  y0(d) = 0.0;
  const auto flow = integrate_rk4(rhs, y0, p.T, p.quad_nodes, false);
  return flow.final_state()(d);
}

LyapunovFunction construct_converse_V(const VectorField& f, const Vector& theta_star,
                                      const ConverseParams& params, const ConverseOptions& opts) {
  params.validate();
  if (theta_star.size() != f.dim()) throw Error("equilibrium has wrong dimension");
  if (f(theta_star).norm() > kEquilibriumTolerance)
    throw Error("theta* is not a zero of the field");

  LyapunovFunction V(
      theta_star,
      [f, theta_star, params](const Vector& x) { return converse_value(f, theta_star, params, x); },
      {}, {}, "converse");
  if (opts.fit_constants) {
    const auto pts = opts.fit_grid.value_or(default_fit_grid(theta_star)).points();
    V.constants = fit_envelope_constants(V, f, pts, opts.fit_slack);
  }
  return V;
}

}  // namespace salyap
