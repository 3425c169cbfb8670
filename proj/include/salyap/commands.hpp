#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace salyap {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfigError = 2,
  kExitInfeasible = 3,
};

struct ClassifyArgs {
  std::string family = "power";
  double c = 1.0;
  double t0 = 1.0;
  double p = 1.0;
};

/// Prints "12a: holds|fails, 12b: holds|fails".
int cmd_classify(const ClassifyArgs& args, std::ostream& out, std::ostream& err);

struct CommonOverrides {
  std::optional<std::string> output_dir;
};

/// Runs the configured checks; writes checks.csv into the output directory.
int cmd_verify(const std::string& config_path, const CommonOverrides& o, std::ostream& out,
               std::ostream& err);

/// Builds the converse V; writes converse_snapshot.csv and converse_constants.csv.
int cmd_construct(const std::string& config_path, const CommonOverrides& o, std::ostream& out,
                  std::ostream& err);

struct RunOverrides : CommonOverrides {
  std::optional<int> seeds;
  std::optional<std::string> noise;
  std::optional<long> steps;
  std::optional<std::uint64_t> master_seed;
};

/// Ensemble run or paired division-of-labor run; writes CSVs and summary.txt.
int cmd_run(const std::string& config_path, const RunOverrides& o, std::ostream& out,
            std::ostream& err);

struct SweepArgs : RunOverrides {
  std::vector<double> p_values;
  std::vector<double> sigma_values;
};

/// Single-schedule ensembles over the grid of p and sigma; writes sweep.csv.
int cmd_sweep(const std::string& config_path, const SweepArgs& args, std::ostream& out,
              std::ostream& err);

}  // namespace salyap
