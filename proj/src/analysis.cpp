#include "salyap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "salyap/csv.hpp"
#include "salyap/parallel.hpp"

namespace salyap {

RSLedgerEntry rs_checkpoint(const VectorField& f, const LyapunovFunction& V, const Vector& theta_t,
                            long t, double alpha_t, const NoiseModel& noise, int n_resamples,
                            const RSConstants& k) {
  if (n_resamples < 1000) throw Error("rs_checkpoint needs at least 1000 resamples");
  if (!(k.a > 0.0)) throw Error("ledger constant a must be positive");

  RSLedgerEntry e;
  e.t = t;
  e.z_t = V(theta_t);
  const double a2 = alpha_t * alpha_t;
  e.eta_t = a2 * (k.M / k.a) * (k.L * k.L + k.sigma2);
  e.gamma_t = a2 * k.M * k.sigma2;
  e.psi_t = k.phi ? alpha_t * (*k.phi)((theta_t - V.theta_star()).norm()) : 0.0;

  const Vector drift = f(theta_t);
  std::vector<double> values(static_cast<std::size_t>(n_resamples));
  parallel_for(n_resamples, [&](long i) {
    const Vector xi = noise.draw(theta_t, t, static_cast<std::uint64_t>(i) + 1);
    values[static_cast<std::size_t>(i)] = V(theta_t + alpha_t * (drift + xi));
  });
  // Shifted by the first sample so identical draws give exactly zero spread.
  const double shift = values.front();
  double dm = 0.0;
  for (double v : values) dm += v - shift;
  dm /= n_resamples;
  double ss = 0.0;
  for (double v : values) ss += (v - shift - dm) * (v - shift - dm);
  const double mean = shift + dm;
  e.conditional_mean_estimate = mean;
  e.standard_error =
      std::sqrt(ss / (n_resamples - 1)) / std::sqrt(static_cast<double>(n_resamples));
  e.ok = mean <= e.rhs() + 3.0 * e.standard_error;
  return e;
}

std::vector<long> log_spaced_checkpoints(long T_steps, int n) {
  if (n < 1 || T_steps < 2) throw Error("checkpoints need n >= 1 and T_steps >= 2");
  const long hi = T_steps - 1;
  if (n > hi) throw Error("more checkpoints than available steps");
  std::vector<long> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = n == 1 ? 0.0 : std::log(static_cast<double>(hi)) * i / (n - 1);
    long v = std::lround(std::exp(x));
    // Keep strictly increasing while leaving room for the remaining points.
    if (!out.empty()) v = std::max(v, out.back() + 1);
    v = std::min(v, hi - (n - 1 - i));
    out.push_back(v);
  }
  return out;
}

void fill_rs_ledger(SamplePath& path, const VectorField& f, const LyapunovFunction& V,
                    const StepSchedule& schedule, const NoiseModel& noise, int n_resamples,
                    const RSConstants& constants) {
  const NoiseModel keyed = noise.with_seed(path.seed);
  path.rs_ledger.clear();
  for (const auto& [t, theta] : path.checkpoint_states) {
    path.rs_ledger.push_back(
        rs_checkpoint(f, V, theta, t, schedule(t), keyed, n_resamples, constants));
  }
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

double default_bound_cap(const Vector& theta0, const Vector& theta_star) {
  return 1e6 * (1.0 + (theta0 - theta_star).norm());
}

EnsembleSummary summarize_ensemble(std::span<const SamplePath> paths, const SolutionSet& S,
                                   double cap) {
  if (paths.empty()) throw Error("summary of an empty ensemble");
  EnsembleSummary s;
  s.n_paths = static_cast<int>(paths.size());
  int bounded = 0, diverged = 0;
  std::vector<double> dist, v_final, tail_range;
  for (const auto& p : paths) {
    if (p.diverged) ++diverged;
    if (!p.diverged && p.sup_norm < cap) ++bounded;
    dist.push_back(p.diverged ? std::numeric_limits<double>::infinity()
                              : distance_to_set(p.final_theta, S));
    if (!p.v_values.empty() && !p.diverged) v_final.push_back(p.v_values.back());
    if (!std::isnan(p.tail_v_min) && !p.diverged) tail_range.push_back(p.tail_v_max - p.tail_v_min);
  }
  s.bounded_fraction = static_cast<double>(bounded) / s.n_paths;
  s.diverged_fraction = static_cast<double>(diverged) / s.n_paths;
  s.q05 = quantile(dist, 0.05);
  s.q50 = quantile(dist, 0.50);
  s.q95 = quantile(dist, 0.95);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.v_limit_spread = v_final.empty() ? nan : quantile(v_final, 0.75) - quantile(v_final, 0.25);
  s.v_tail_oscillation = tail_range.empty() ? nan : quantile(tail_range, 0.5);
  return s;
}

EnsembleRun run_ensemble_experiment(const VectorField& f, const LyapunovFunction* V,
                                    const StepSchedule& schedule, const EnsembleSpec& spec) {
  if (spec.ledger && !V) throw Error("the ledger needs a Lyapunov function");
  RecordOptions rec;
  rec.stride = spec.stride;
  if (V) rec.lyapunov = [V](const Vector& x) { return (*V)(x); };
  if (spec.ledger) rec.checkpoints = log_spaced_checkpoints(spec.T_steps, spec.ledger->checkpoints);

  EnsembleRun run{schedule, classify_schedule(schedule), {}, {}, 0, 0};
  run.paths = run_ensemble(f, spec.theta0, schedule, spec.noise, spec.T_steps, spec.n_paths,
                           spec.master_seed, rec);
  if (spec.ledger) {
    const int n = std::min(spec.ledger->n_paths, spec.n_paths);
    for (int i = 0; i < n; ++i) {
      auto& p = run.paths[static_cast<std::size_t>(i)];
      fill_rs_ledger(p, f, *V, schedule, spec.noise, spec.ledger->n_resamples,
                     spec.ledger->constants);
      for (const auto& e : p.rs_ledger) {
        ++run.ledger_checks;
        if (e.ok) ++run.ledger_passes;
      }
    }
  }
  const Vector ref = f.reference_point();
  const double cap = spec.cap.value_or(default_bound_cap(spec.theta0, ref));
  SolutionSet S = spec.solutions.empty() ? SolutionSet::singleton(ref) : spec.solutions;
  run.summary = summarize_ensemble(run.paths, S, cap);
  return run;
}

DivisionOfLaborReport division_of_labor_experiment(const VectorField& f, const LyapunovFunction* V,
                                                   const StepSchedule& boundedness_schedule,
                                                   const StepSchedule& convergence_schedule,
                                                   const EnsembleSpec& spec) {
  const auto cb = classify_schedule(boundedness_schedule);
  const auto cc = classify_schedule(convergence_schedule);
  if (!(cb.square_summable && !cb.non_summable)) {
    throw Error(fmt::format("boundedness schedule {} must be square-summable and summable",
                            boundedness_schedule.describe()));
  }
  if (!(cc.square_summable && cc.non_summable)) {
    throw Error(fmt::format("convergence schedule {} must be square-summable and non-summable",
                            convergence_schedule.describe()));
  }
  EnsembleSpec bounded_spec = spec;
  if (bounded_spec.ledger) bounded_spec.ledger->constants.phi.reset();
  return {run_ensemble_experiment(f, V, boundedness_schedule, bounded_spec),
          run_ensemble_experiment(f, V, convergence_schedule, spec)};
}

void write_ledger_csv(std::ostream& os, std::span<const RSLedgerEntry> entries,
                      std::optional<std::uint64_t> seed, bool with_header) {
  std::vector<std::string> row;
  if (seed) row.push_back("seed");
  for (const char* h : {"t", "z_t", "eta_t", "gamma_t", "psi_t", "conditional_mean_estimate",
                        "standard_error", "rhs", "ok"}) {
    row.emplace_back(h);
  }
  if (with_header) write_csv_row(os, row);
  for (const auto& e : entries) {
    row.clear();
    if (seed) row.push_back(std::to_string(*seed));
    row.push_back(std::to_string(e.t));
    for (double x : {e.z_t, e.eta_t, e.gamma_t, e.psi_t, e.conditional_mean_estimate,
                     e.standard_error, e.rhs()}) {
      row.push_back(format_real(x));
    }
    row.emplace_back(e.ok ? "true" : "false");
    write_csv_row(os, row);
  }
}

void write_ensemble_csv(std::ostream& os, std::span<const SamplePath> paths, const SolutionSet& S,
                        const LyapunovFunction* V) {
  const std::string header[] = {"seed",     "final_step",     "diverged",
                                "sup_norm", "final_distance", "final_V"};
  write_csv_row(os, header);
  for (const auto& p : paths) {
    const double dist = p.final_theta.allFinite() ? distance_to_set(p.final_theta, S)
                                                  : std::numeric_limits<double>::infinity();
    const double v = V ? (*V)(p.final_theta) : std::numeric_limits<double>::quiet_NaN();
    const std::string row[] = {std::to_string(p.seed),
                               std::to_string(p.final_step),
                               p.diverged ? "true" : "false",
                               format_real(p.sup_norm),
                               format_real(dist),
                               format_real(v)};
    write_csv_row(os, row);
  }
}

void write_summary_csv(std::ostream& os, const EnsembleSummary& s) {
  const std::string header[] = {"key", "value"};
  write_csv_row(os, header);
  auto put = [&](const char* k, const std::string& v) {
    const std::string row[] = {k, v};
    write_csv_row(os, row);
  };
  put("n_paths", std::to_string(s.n_paths));
  put("bounded_fraction", format_real(s.bounded_fraction));
  put("diverged_fraction", format_real(s.diverged_fraction));
  put("q05", format_real(s.q05));
  put("q50", format_real(s.q50));
  put("q95", format_real(s.q95));
  put("v_limit_spread", format_real(s.v_limit_spread));
  put("v_tail_oscillation", format_real(s.v_tail_oscillation));
}

}  // namespace salyap
