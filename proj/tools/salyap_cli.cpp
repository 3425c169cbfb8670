#include <iostream>

#include <CLI11.hpp>

#include "salyap/commands.hpp"

int main(int argc, char** argv) {
  using namespace salyap;

  CLI::App app{"Stochastic approximation and Lyapunov verification toolkit"};
  app.require_subcommand(1);

  ClassifyArgs classify;
  auto* c = app.add_subcommand("classify", "Classify a step-size schedule");
  c->add_option("--family", classify.family, "power or constant")->capture_default_str();
  c->add_option("--c", classify.c, "scale c")->capture_default_str();
  c->add_option("--t0", classify.t0, "offset t0 (power)")->capture_default_str();
  c->add_option("--p", classify.p, "exponent p (power)")->capture_default_str();

  std::string config;
  CommonOverrides common;
  auto* v = app.add_subcommand("verify", "Run the configured hypothesis checks");
  v->add_option("config", config, "experiment config")->required();
  v->add_option("--out", common.output_dir, "output directory (overrides the config)");

  auto* k = app.add_subcommand("construct", "Build the converse Lyapunov function");
  k->add_option("config", config, "experiment config")->required();
  k->add_option("--out", common.output_dir, "output directory (overrides the config)");

  RunOverrides run;
  auto* r = app.add_subcommand("run", "Run an ensemble experiment");
  r->add_option("config", config, "experiment config")->required();
  r->add_option("--out", run.output_dir, "output directory (overrides the config)");
  r->add_option("--seeds", run.seeds, "number of paths");
  r->add_option("--noise", run.noise, "gaussian_state_scaled | sphere_bounded | zero");
  r->add_option("--steps", run.steps, "steps per path");
  r->add_option("--master-seed", run.master_seed, "master seed");

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Grid of ensembles over schedule exponent and noise level");
  s->add_option("config", config, "experiment config")->required();
  s->add_option("--p", sweep.p_values, "exponents, comma separated")->delimiter(',')->required();
  s->add_option("--sigma", sweep.sigma_values, "noise levels, comma separated")
      ->delimiter(',')
      ->required();
  s->add_option("--out", sweep.output_dir, "output directory (overrides the config)");
  s->add_option("--seeds", sweep.seeds, "number of paths");
  s->add_option("--noise", sweep.noise, "noise kind");
  s->add_option("--steps", sweep.steps, "steps per path");
  s->add_option("--master-seed", sweep.master_seed, "master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  if (*c) return cmd_classify(classify, std::cout, std::cerr);
  if (*v) return cmd_verify(config, common, std::cout, std::cerr);
  if (*k) return cmd_construct(config, common, std::cout, std::cerr);
  if (*r) return cmd_run(config, run, std::cout, std::cerr);
  return cmd_sweep(config, sweep, std::cout, std::cerr);
}
