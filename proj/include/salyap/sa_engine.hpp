#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "salyap/core.hpp"
#include "salyap/ledger.hpp"

namespace salyap {

enum class ScheduleFamily { PowerLaw, Constant, Custom };

/**
 * Step sizes alpha_t, t = 0, 1, 2, ...
 *
 * power_law: c / (t + t0)^p with c > 0, t0 >= 1, p > 0 and c / t0^p < 1.
 * constant:  c in (0, 1).
 * custom:    an explicit finite list, every entry in (0, 1).
 */
class StepSchedule {
 public:
  static StepSchedule power_law(double c, double t0, double p);
  static StepSchedule constant(double c);
  static StepSchedule custom(std::vector<double> alphas);

  double operator()(long t) const;

  ScheduleFamily family() const { return family_; }
  double c() const { return c_; }
  double t0() const { return t0_; }
  double p() const { return p_; }
  const std::vector<double>& values() const { return values_; }
  /// First index from which alpha_t in (0, 1) is guaranteed.
  long t_min() const { return 0; }

  std::string describe() const;

 private:
  StepSchedule() = default;
  ScheduleFamily family_ = ScheduleFamily::Constant;
  double c_ = 0.0, t0_ = 1.0, p_ = 0.0;
  std::vector<double> values_;
};

struct ScheduleClass {
  bool square_summable = false;
  bool non_summable = false;
  /// True when derived from a finite list rather than the closed form.
  bool heuristic = false;

  bool operator==(const ScheduleClass&) const = default;
};

/**
 * power_law: square-summable iff p > 1/2, non-summable iff p <= 1.
 * constant: {false, true}.
 * custom: fits the decay exponent on the second half of the list (log-log
 * least squares) and classifies that exponent, with heuristic = true.
 */
ScheduleClass classify_schedule(const StepSchedule& s);

/// Closed-form classification of c / (t + t0)^p; depends on p only.
ScheduleClass classify_power_law(double p);

enum class NoiseKind { GaussianStateScaled, SphereBounded, Zero };

const char* to_string(NoiseKind k);
NoiseKind parse_noise_kind(const std::string& name);

/**
 * Martingale-difference noise xi with E|xi|^2 = sigma^2 (1 + |theta - ref|^2).
 *
 * gaussian_state_scaled: N(0, sigma^2 (1 + |theta - ref|^2) / d * I).
 * sphere_bounded: uniform direction, norm sigma sqrt(1 + |theta - ref|^2).
 * Draws are keyed by (seed, t, substream) so they are reproducible and
 * independent of how many draws were made before.
 */
class NoiseModel {
 public:
  NoiseModel(NoiseKind kind, double sigma, Vector reference, std::uint64_t seed = 0);

  Vector draw(const Vector& theta, long t, std::uint64_t substream = 0) const;

  NoiseModel with_seed(std::uint64_t seed) const;

  NoiseKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  double sigma2() const { return kind_ == NoiseKind::Zero ? 0.0 : sigma_ * sigma_; }
  std::uint64_t seed() const { return seed_; }
  const Vector& reference() const { return reference_; }

 private:
  NoiseKind kind_;
  double sigma_;
  Vector reference_;
  std::uint64_t seed_;
};

/// A path is flagged diverged when |theta| exceeds this or goes non-finite.
inline constexpr double kDivergenceThreshold = 1e8;

struct StepResult {
  Vector theta;
  Vector xi;
  bool diverged = false;
};

/// theta + alpha (f(theta) + xi) with xi = noise.draw(theta, t). Throws
/// unless alpha lies in (0, 1).
StepResult step(const Vector& theta, const VectorField& f, double alpha, const NoiseModel& noise,
                long t);

struct RecordOptions {
  /// Store theta_t whenever t % stride == 0 (and the final state). 0 stores
  /// only the final state.
  long stride = 1;
  /// Evaluated at recorded states and over the tail window.
  std::function<double(const Vector&)> lyapunov;
  /// Steps at which the state is kept for ledger checks.
  std::vector<long> checkpoints;
  /// Fraction of the final steps over which the range of V is tracked.
  double tail_fraction = 0.1;
};

struct SamplePath {
  std::uint64_t seed = 0;
  std::vector<long> steps;
  std::vector<Vector> thetas;
  std::vector<double> v_values;
  std::vector<double> alphas;
  double sup_norm = 0.0;
  bool diverged = false;
  long diverged_at = -1;
  long final_step = 0;
  Vector final_theta;
  std::vector<std::pair<long, Vector>> checkpoint_states;
  std::vector<RSLedgerEntry> rs_ledger;
  /// min and max of V over the tail window; NaN without a Lyapunov function.
  double tail_v_min = 0.0;
  double tail_v_max = 0.0;
};

/**
 * T_steps iterations of theta_{t+1} = theta_t + alpha_t (f(theta_t) + xi_{t+1})
 * starting at t = 0. sup_norm tracks max |theta_t - ref| with ref the field's
 * reference point. Halts at divergence.
 */
SamplePath run_path(const VectorField& f, const Vector& theta0, const StepSchedule& schedule,
                    const NoiseModel& noise, long T_steps, const RecordOptions& record = {});

/// n_paths independent paths with seeds derive_seed(master_seed, i), ordered by i.
std::vector<SamplePath> run_ensemble(const VectorField& f, const Vector& theta0,
                                     const StepSchedule& schedule, const NoiseModel& noise,
                                     long T_steps, int n_paths, std::uint64_t master_seed,
                                     const RecordOptions& record = {});

/// Columns t,x_1..x_d[,V],alpha_t.
void write_path_csv(std::ostream& os, const SamplePath& path);

}  // namespace salyap
