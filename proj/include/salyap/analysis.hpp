#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "salyap/core.hpp"
#include "salyap/ledger.hpp"
#include "salyap/lyapunov.hpp"
#include "salyap/sa_engine.hpp"

namespace salyap {

/// Constants entering eta_t, gamma_t and psi_t. Without phi the check runs
/// in boundedness mode (psi_t = 0).
struct RSConstants {
  double M = 0.0;
  double a = 0.0;
  double L = 0.0;
  double sigma2 = 0.0;
  std::optional<ComparatorFunction> phi;
};

/**
 * Estimates E[V(theta_{t+1}) | theta_t] from n_resamples independent noise
 * draws (substreams 1..n_resamples of step t) and compares it with
 *   (1 + eta_t) z_t + gamma_t - psi_t,
 * eta_t = alpha^2 (M/a)(L^2 + sigma^2), gamma_t = alpha^2 M sigma^2,
 * psi_t = alpha phi(|theta_t - theta*|). ok iff mean <= rhs + 3 SE.
 */
RSLedgerEntry rs_checkpoint(const VectorField& f, const LyapunovFunction& V, const Vector& theta_t,
                            long t, double alpha_t, const NoiseModel& noise, int n_resamples,
                            const RSConstants& constants);

/// n distinct steps in [1, T_steps - 1], roughly log-spaced.
std::vector<long> log_spaced_checkpoints(long T_steps, int n);

/// Runs rs_checkpoint at every stored checkpoint state of the path.
void fill_rs_ledger(SamplePath& path, const VectorField& f, const LyapunovFunction& V,
                    const StepSchedule& schedule, const NoiseModel& noise, int n_resamples,
                    const RSConstants& constants);

struct EnsembleSummary {
  int n_paths = 0;
  double bounded_fraction = 0.0;
  double diverged_fraction = 0.0;
  /// Type-7 quantiles of distance_to_set(theta_T, S); diverged paths count as +inf.
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  /// Interquartile range of V(theta_T) over paths; NaN without V.
  double v_limit_spread = 0.0;
  /// Median over paths of max - min of V over the final tail window. A
  /// finite-horizon proxy for the existence of lim V(theta_t), nothing more.
  double v_tail_oscillation = 0.0;
};

/// Type-7 (linear interpolation) sample quantile; values need not be sorted.
double quantile(std::vector<double> values, double q);

/// 1e6 (1 + |theta0 - theta*|).
double default_bound_cap(const Vector& theta0, const Vector& theta_star);

EnsembleSummary summarize_ensemble(std::span<const SamplePath> paths, const SolutionSet& S,
                                   double cap);

struct EnsembleRun {
  StepSchedule schedule;
  ScheduleClass classification;
  std::vector<SamplePath> paths;
  EnsembleSummary summary;
  int ledger_checks = 0;
  int ledger_passes = 0;
};

struct LedgerOptions {
  RSConstants constants;
  int n_resamples = 10000;
  int checkpoints = 20;
  /// Ledger is filled for the first n_paths paths only.
  int n_paths = 50;
};

struct EnsembleSpec {
  Vector theta0;
  NoiseModel noise;
  long T_steps = 1000;
  int n_paths = 100;
  std::uint64_t master_seed = 0;
  long stride = 0;
  SolutionSet solutions;
  /// Cap for "bounded"; default_bound_cap when unset.
  std::optional<double> cap;
  std::optional<LedgerOptions> ledger;
};

EnsembleRun run_ensemble_experiment(const VectorField& f, const LyapunovFunction* V,
                                    const StepSchedule& schedule, const EnsembleSpec& spec);

struct DivisionOfLaborReport {
  EnsembleRun boundedness_run;
  EnsembleRun convergence_run;
};

/**
 * Paired runs: a square-summable-only schedule and a schedule satisfying
 * both step-size conditions, same field, noise and seeds. Throws unless the
 * schedules classify as {true, false} and {true, true}. The boundedness run's
 * ledger drops phi (psi_t = 0).
 */
DivisionOfLaborReport division_of_labor_experiment(const VectorField& f, const LyapunovFunction* V,
                                                   const StepSchedule& boundedness_schedule,
                                                   const StepSchedule& convergence_schedule,
                                                   const EnsembleSpec& spec);

/// Columns t,z_t,eta_t,gamma_t,psi_t,conditional_mean_estimate,standard_error,rhs,ok.
void write_ledger_csv(std::ostream& os, std::span<const RSLedgerEntry> entries,
                      std::optional<std::uint64_t> seed = std::nullopt, bool with_header = true);

/// One row per path: seed,final_step,diverged,sup_norm,final_distance,final_V.
void write_ensemble_csv(std::ostream& os, std::span<const SamplePath> paths, const SolutionSet& S,
                        const LyapunovFunction* V);

/// key,value rows for a summary.
void write_summary_csv(std::ostream& os, const EnsembleSummary& s);

}  // namespace salyap
