#include "salyap/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "salyap/csv.hpp"

namespace salyap {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

double error_norm(const Vector& err, const Vector& y, const Vector& ynew, double rtol,
                  double atol) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
    const double q = err(i) / sc;
    sum += q * q;
  }
  return std::sqrt(sum / static_cast<double>(err.size()));
}

double initial_step(const RhsFunction& rhs, const Vector& y0, const Vector& f0, double t_end,
                    double rtol, double atol) {
  Vector scale = (atol + rtol * y0.array().abs()).matrix();
  const double n = static_cast<double>(y0.size());
  const double d0 = std::sqrt((y0.array() / scale.array()).square().sum() / n);
  const double d1n = std::sqrt((f0.array() / scale.array()).square().sum() / n);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, t_end);
  Vector y1 = y0 + h0 * f0;
  Vector f1(y0.size());
  rhs(h0, y1, f1);
  const double d2 = std::sqrt(((f1 - f0).array() / scale.array()).square().sum() / n) / h0;
  const double h1 = (std::max(d1n, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                 : std::pow(0.01 / std::max(d1n, d2), 1.0 / 5);
  return std::min({100 * h0, h1, t_end});
}

}  // namespace

FlowResult integrate_dopri5(const RhsFunction& rhs, const Vector& y0, double t_end,
                            const AdaptiveOptions& opts) {
  if (!(t_end > 0.0)) throw Error("horizon must be positive");
  if (!(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0)) throw Error("tolerances must be positive");
  const auto& outs = opts.output_times;
  if (!std::is_sorted(outs.begin(), outs.end()) ||
      (!outs.empty() && (outs.front() < 0.0 || outs.back() > t_end))) {
    throw Error("output times must be sorted and lie within [0, horizon]");
  }

  FlowResult res;
  res.times.push_back(0.0);
  res.states.push_back(y0);
  std::size_t next_out = 0;
  while (next_out < outs.size() && outs[next_out] <= 0.0) ++next_out;

  const auto n = y0.size();
  Vector y = y0, ynew(n), tmp(n);
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  rhs(0.0, y, k1);

  double t = 0.0;
  double h = initial_step(rhs, y0, k1, t_end, opts.rel_tol, opts.abs_tol);
  long steps = 0;

  while (t < t_end) {
    if (++steps > opts.max_steps) throw Error(fmt::format("integration failure at t = {}", t));
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < h_min) throw Error(fmt::format("integration failure at t = {}", t));
    bool last = false;
    if (t + h >= t_end) {
      h = t_end - t;
      last = true;
    }

    tmp = y + h * a21 * k1;
    rhs(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, tmp, k6);
    ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    rhs(t + h, ynew, k7);

    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, ynew, opts.rel_tol, opts.abs_tol);

    if (!std::isfinite(en) || !ynew.allFinite()) {
      ++res.rejected_steps;
      h *= 0.2;
      continue;
    }
    if (en > 1.0) {
      ++res.rejected_steps;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      continue;
    }

    ++res.accepted_steps;
    res.max_local_error_estimate =
        std::max(res.max_local_error_estimate, err.lpNorm<Eigen::Infinity>());
    const double t_new = last ? t_end : t + h;

    if (outs.empty()) {
      res.times.push_back(t_new);
      res.states.push_back(ynew);
    } else {
      const Vector ydiff = ynew - y;
      const Vector bspl = h * k1 - ydiff;
      const Vector r4 = ydiff - h * k7 - bspl;
      const Vector r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      while (next_out < outs.size() && outs[next_out] <= t_new) {
        const double to = outs[next_out++];
        if (to == t_new) {
          res.times.push_back(to);
          res.states.push_back(ynew);
          continue;
        }
        const double s = (to - t) / h;
        const double s1 = 1.0 - s;
        res.times.push_back(to);
        res.states.push_back(y + s * (ydiff + s1 * (bspl + s * (r4 + s1 * r5))));
      }
    }

    t = t_new;
    y.swap(ynew);
    k1.swap(k7);
    h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(en, 1e-10), -0.2)));
  }
  return res;
}

FlowResult integrate_rk4(const RhsFunction& rhs, const Vector& y0, double t_end, long n_steps,
                         bool record_all) {
  if (!(t_end > 0.0)) throw Error("horizon must be positive");
  if (n_steps < 1) throw Error("fixed-step integration needs at least one step");
  FlowResult res;
  res.times.push_back(0.0);
  res.states.push_back(y0);

  const auto n = y0.size();
  const double h = t_end / static_cast<double>(n_steps);
  Vector y = y0, k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (long i = 0; i < n_steps; ++i) {
    const double t = h * static_cast<double>(i);
    rhs(t, y, k1);
    tmp = y + 0.5 * h * k1;
    rhs(t + 0.5 * h, tmp, k2);
    tmp = y + 0.5 * h * k2;
    rhs(t + 0.5 * h, tmp, k3);
    tmp = y + h * k3;
    rhs(t + h, tmp, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite()) throw Error(fmt::format("integration failure at t = {}", t + h));
    ++res.accepted_steps;
    if (record_all || i + 1 == n_steps) {
      res.times.push_back(i + 1 == n_steps ? t_end : t + h);
      res.states.push_back(y);
    }
  }
  return res;
}

namespace {

RhsFunction autonomous(const VectorField& f) {
  return [&f](double, const Vector& y, Vector& dy) { dy = f(y); };
}

}  // namespace

FlowResult integrate_flow(const VectorField& f, const Vector& theta0, double horizon,
                          double rel_tol, double abs_tol, std::span<const double> output_times) {
  if (theta0.size() != f.dim()) throw Error("initial condition has wrong dimension");
  if (!(rel_tol > 0.0 && rel_tol <= 1e-2) || !(abs_tol > 0.0 && abs_tol <= 1e-2)) {
    throw Error("tolerances must lie in (0, 1e-2]");
  }
  AdaptiveOptions opts;
  opts.rel_tol = rel_tol;
  opts.abs_tol = abs_tol;
  opts.output_times.assign(output_times.begin(), output_times.end());
  return integrate_dopri5(autonomous(f), theta0, horizon, opts);
}

FlowResult integrate_flow_fixed(const VectorField& f, const Vector& theta0, double horizon,
                                long n_steps) {
  if (theta0.size() != f.dim()) throw Error("initial condition has wrong dimension");
  return integrate_rk4(autonomous(f), theta0, horizon, n_steps, true);
}

GronwallReport check_gronwall_lower_bound(const VectorField& f, const Vector& theta0,
                                          double horizon, double L, int output_points) {
  const Vector& star = f.require_equilibrium();
  const double d0 = (theta0 - star).norm();
  if (d0 == 0.0) throw Error("degenerate initial condition");
  if (output_points < 2) throw Error("need at least two output points");

  std::vector<double> times(static_cast<std::size_t>(output_points));
  for (int i = 0; i < output_points; ++i)
    times[static_cast<std::size_t>(i)] = horizon * i / (output_points - 1);
  times.back() = horizon;
  const auto flow = integrate_flow(f, theta0, horizon, 1e-11, 1e-14, times);

  GronwallReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < flow.times.size(); ++i) {
    const double ratio = (flow.states[i] - star).norm() * std::exp(L * flow.times[i]) / d0;
    if (ratio < rep.min_ratio) {
      rep.min_ratio = ratio;
      rep.argmin_time = flow.times[i];
    }
  }
  rep.ok = rep.min_ratio >= 1.0 - 1e-6;
  return rep;
}

StabilityEstimate estimate_stability_constants(const VectorField& f, const SampleGrid& grid,
                                               const StabilityOptions& opts) {
  const Vector& star = f.require_equilibrium();
  if (opts.samples_per_trajectory < 3) throw Error("need at least three samples per trajectory");
  const int n_t = opts.samples_per_trajectory;
  std::vector<double> times(static_cast<std::size_t>(n_t));
  for (int i = 0; i < n_t; ++i) times[static_cast<std::size_t>(i)] = opts.horizon * i / (n_t - 1);
  times.back() = opts.horizon;

  std::vector<Vector> starts;
  for (auto& p : grid.points()) {
    if ((p - star).norm() > 0.0) starts.push_back(std::move(p));
  }
  if (starts.empty()) throw Error("stability grid has no points away from the equilibrium");

  // log-distance ratios per trajectory, NaN where the state hit the equilibrium exactly
  const auto n_traj = static_cast<long>(starts.size());
  std::vector<std::vector<double>> logs(starts.size());
  std::vector<double> final_ratio(starts.size());
  std::vector<int> failed(starts.size(), 0);

#pragma omp parallel for schedule(dynamic)
  for (long j = 0; j < n_traj; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    try {
      const auto flow =
          integrate_flow(f, starts[ju], opts.horizon, opts.rel_tol, opts.abs_tol, times);
      const double d0 = (starts[ju] - star).norm();
      auto& row = logs[ju];
      row.resize(flow.states.size());
      for (std::size_t i = 0; i < flow.states.size(); ++i) {
        const double di = (flow.states[i] - star).norm();
        row[i] = di > 0.0 ? std::log(di / d0) : std::numeric_limits<double>::quiet_NaN();
      }
      final_ratio[ju] = (flow.final_state() - star).norm() / d0;
    } catch (const Error&) {
      failed[ju] = 1;
    }
  }
  for (std::size_t j = 0; j < starts.size(); ++j) {
    if (failed[j]) throw Error("integration failure while estimating stability constants");
    if (final_ratio[j] > opts.decay_ratio_threshold) throw Error("no exponential decay detected");
  }

  // Pooled least-squares line y = b0 - g t.
  double st = 0, sy = 0, stt = 0, sty = 0;
  int count = 0;
  for (const auto& row : logs) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (std::isnan(row[i])) continue;
      st += times[i];
      sy += row[i];
      stt += times[i] * times[i];
      sty += times[i] * row[i];
      ++count;
    }
  }
  const double denom = count * stt - st * st;
  const double slope = (count * sty - st * sy) / denom;
  const double intercept = (sy - slope * st) / count;

  StabilityEstimate est;
  est.sample_count = count;
  est.lsq_gamma = -slope;
  est.lsq_mu = std::exp(intercept);
  double ss = 0.0;
  for (const auto& row : logs) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (std::isnan(row[i])) continue;
      const double r = row[i] - (intercept + slope * times[i]);
      ss += r * r;
    }
  }
  est.fit_residual = std::sqrt(ss / count);

  // Slowest tail rate over the second half of the horizon.
  double gamma = est.lsq_gamma;
  const std::size_t mid = times.size() / 2;
  const std::size_t end = times.size() - 1;
  for (const auto& row : logs) {
    if (std::isnan(row[end]) || std::isnan(row[mid])) continue;
    gamma = std::min(gamma, -(row[end] - row[mid]) / (times[end] - times[mid]));
  }
  gamma *= 1.0 - opts.gamma_deflation;
  if (!(gamma > 0.0)) throw Error("no exponential decay detected");
  est.gamma_hat = gamma;

  double log_mu = 0.0;
  for (const auto& row : logs) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (std::isnan(row[i])) continue;
      log_mu = std::max(log_mu, row[i] + gamma * times[i]);
    }
  }
  est.mu_hat = std::exp(log_mu);
  return est;
}

void write_flow_csv(std::ostream& os, const FlowResult& flow) {
  const auto d = flow.states.empty() ? 0 : flow.states.front().size();
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < d; ++i) header.push_back(fmt::format("x_{}", i + 1));
  write_csv_row(os, header);
  for (std::size_t k = 0; k < flow.times.size(); ++k) {
    std::vector<std::string> row{format_real(flow.times[k])};
    for (Eigen::Index i = 0; i < d; ++i) row.push_back(format_real(flow.states[k](i)));
    write_csv_row(os, row);
  }
}

}  // namespace salyap
