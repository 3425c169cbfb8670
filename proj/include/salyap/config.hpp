#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "salyap/registry.hpp"
#include "salyap/sa_engine.hpp"

namespace salyap {

struct ScheduleSpec {
  std::string family = "power";  // power | constant | custom
  double c = 0.5;
  double t0 = 1.0;
  double p = 1.0;
  std::vector<double> values;  // custom only

  StepSchedule build() const;
  bool operator==(const ScheduleSpec&) const = default;
};

struct GridSpec {
  std::optional<std::vector<double>> center;  // default: equilibrium
  double r_min = 1e-2;
  double r_max = 1e2;
  int shells = 9;
  int points_per_shell = 8;
  std::uint64_t seed = 1;

  SampleGrid build(const Vector& default_center) const;
  bool operator==(const GridSpec&) const = default;
};

struct ConverseSpec {
  std::optional<double> kappa;
  std::optional<double> T;
  std::optional<double> mu;
  std::optional<double> gamma;
  long quad_nodes = 2000;
  double horizon = 10.0;  // for estimating mu, gamma
  GridSpec stability_grid{std::nullopt, 1e-1, 1e1, 5, 8, 7};

  bool operator==(const ConverseSpec&) const = default;
};

struct LedgerSpec {
  bool enabled = false;
  int n_resamples = 10000;
  int checkpoints = 20;
  int n_paths = 50;
  std::optional<double> M;
  std::optional<double> a;
  std::optional<double> L;

  bool operator==(const LedgerSpec&) const = default;
};

/**
 * One experiment, read from an INI file with sections
 * [experiment] [field] [schedule] [boundedness_schedule] [noise] [lyapunov]
 * [checks] [grid] [converse] [ledger].
 */
struct ExperimentConfig {
  // [experiment]
  std::string mode = "single";  // single | division_of_labor
  int n_seeds = 100;
  long T_steps = 10000;
  std::vector<double> theta0;  // default: origin
  long stride = 0;
  std::string output_dir = "out";
  std::uint64_t master_seed = 1;

  // [field]; every key except name is a field parameter
  std::string field_name;
  ParamMap field_params;

  ScheduleSpec schedule;
  std::optional<ScheduleSpec> boundedness_schedule;

  // [noise]
  std::string noise_kind = "gaussian_state_scaled";
  double sigma = 0.0;

  // [lyapunov]; kind is squared_norm | quadratic | quartic | lyapunov_equation | converse
  std::string lyapunov_kind = "squared_norm";
  ParamMap lyapunov_params;
  std::string eta, psi, phi;  // comparator specs, empty when unused

  // [checks]
  std::vector<std::string> checks;
  std::optional<double> a, b, M, K, L_prime;
  double tolerance = 1e-9;

  GridSpec grid;
  ConverseSpec converse;
  LedgerSpec ledger;

  bool operator==(const ExperimentConfig&) const = default;

  /// Registry names exist and parameters are well formed. Throws ConfigError.
  void validate() const;
};

ExperimentConfig read_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
void write_config(std::ostream& out, const ExperimentConfig& cfg);

/// Known check identifiers for [checks] list.
const std::vector<std::string>& check_names();

}  // namespace salyap
