#include "salyap/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "salyap/analysis.hpp"
#include "salyap/config.hpp"
#include "salyap/converse.hpp"
#include "salyap/csv.hpp"
#include "salyap/lyapunov.hpp"
#include "salyap/ode.hpp"
#include "salyap/registry.hpp"

namespace fs = std::filesystem;

namespace salyap {

namespace {

/// Construction is impossible for this input (exit code 3).
class Infeasible : public Error {
 public:
  using Error::Error;
};

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Infeasible& e) {
    err << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

const char* holds(bool b) { return b ? "holds" : "fails"; }

ExperimentConfig load_validated(const std::string& path) {
  auto cfg = load_config(path);
  cfg.validate();
  return cfg;
}

fs::path output_dir(const ExperimentConfig& cfg, const CommonOverrides& o) {
  fs::path dir = o.output_dir.value_or(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(fmt::format("cannot write '{}'", p.string()));
  return f;
}

struct ConverseBuild {
  double mu = 1.0, gamma = 1.0;
  bool estimated = false;
  ConverseParams params;
};

ConverseBuild converse_parameters(const ExperimentConfig& cfg, const VectorField& f) {
  const Vector& star = f.require_equilibrium();
  ConverseBuild b;
  const auto& cs = cfg.converse;
  if (cs.mu && cs.gamma) {
    b.mu = *cs.mu;
    b.gamma = *cs.gamma;
  } else {
    StabilityOptions so;
    so.horizon = cs.horizon;
    try {
      const auto est = estimate_stability_constants(f, cs.stability_grid.build(star), so);
      b.mu = est.mu_hat;
      b.gamma = est.gamma_hat;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw Infeasible(e.what());
    }
    b.estimated = true;
  }
  b.params = default_converse_params(b.mu, b.gamma, cs.quad_nodes);
  if (cs.kappa) {
    b.params.kappa = *cs.kappa;
    if (b.params.kappa > 0.0 && b.params.kappa < b.gamma)
      b.params.T = b.params.minimum_horizon() + 1.0;
  }
  if (cs.T) b.params.T = *cs.T;
  try {
    b.params.validate();
  } catch (const Error& e) {
    throw Infeasible(e.what());
  }
  return b;
}

struct BuiltLyapunov {
  std::optional<LyapunovFunction> V;
  std::optional<ConverseBuild> converse;
};

BuiltLyapunov build_lyapunov(const ExperimentConfig& cfg, const VectorField& f) {
  BuiltLyapunov out;
  if (!f.equilibrium()) return out;
  if (cfg.lyapunov_kind == "converse") {
    out.converse = converse_parameters(cfg, f);
    ConverseOptions opts;
    opts.fit_grid = cfg.grid.build(f.require_equilibrium());
    out.V = construct_converse_V(f, f.require_equilibrium(), out.converse->params, opts);
  } else {
    out.V = make_lyapunov(cfg.lyapunov_kind, cfg.lyapunov_params, f);
  }
  return out;
}

double need(const std::optional<double>& v, std::optional<double> fallback, const char* what) {
  if (v) return *v;
  if (fallback) return *fallback;
  throw ConfigError(fmt::format("check needs a value for {}", what));
}

}  // namespace

int cmd_classify(const ClassifyArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ScheduleClass k;
    std::string note;
    if (a.family == "power" || a.family == "power_law") {
      if (!(a.c > 0.0) || !(a.t0 >= 1.0) || !(a.p > 0.0)) {
        throw ConfigError("power schedule needs c > 0, t0 >= 1, p > 0");
      }
      k = classify_power_law(a.p);
      const double alpha0 = a.c / std::pow(a.t0, a.p);
      if (alpha0 >= 1.0) {
        note = fmt::format("note: alpha_0 = {} >= 1, so this schedule is rejected for runs\n",
                           format_real(alpha0));
      }
    } else if (a.family == "constant") {
      k = classify_schedule(StepSchedule::constant(a.c));
    } else {
      throw ConfigError(fmt::format("unknown schedule family '{}'", a.family));
    }
    out << "12a: " << holds(k.square_summable) << ", 12b: " << holds(k.non_summable) << "\n";
    err << note;
    return static_cast<int>(kExitOk);
  });
}

int cmd_verify(const std::string& config_path, const CommonOverrides& o, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_validated(config_path);
    if (cfg.checks.empty()) throw ConfigError("no checks configured in [checks] run");
    const VectorField f = make_field(cfg.field_name, cfg.field_params);
    const Vector star = f.require_equilibrium();
    const auto built = build_lyapunov(cfg, f);
    const LyapunovFunction& V = *built.V;
    const auto grid = cfg.grid.build(star).points();
    const CheckOptions opts{cfg.tolerance};

    std::optional<double> fa, fb, fM;
    if (V.constants) {
      fa = V.constants->a;
      fb = V.constants->b;
      fM = V.constants->M;
    }
    std::vector<CheckReport> reports;
    for (const auto& id : cfg.checks) {
      if (id == "sandwich") {
        reports.push_back(
            check_sandwich(V, star, need(cfg.a, fa, "a"), need(cfg.b, fb, "b"), grid, opts));
      } else if (id == "generalized_sandwich") {
        if (cfg.eta.empty() || cfg.psi.empty())
          throw ConfigError("generalized_sandwich needs eta and psi");
        reports.push_back(check_generalized_sandwich(V, star, make_comparator(cfg.eta),
                                                     make_comparator(cfg.psi), grid, opts));
      } else if (id == "decay") {
        if (cfg.phi.empty()) throw ConfigError("decay check needs phi");
        reports.push_back(check_decay(V, f, make_comparator(cfg.phi), star, grid, opts));
      } else if (id == "hessian_bound") {
        reports.push_back(check_hessian_bound(V, need(cfg.M, fM, "M"), grid, opts));
      } else if (id == "F4") {
        reports.push_back(check_F4(f, need(cfg.K, std::nullopt, "K"), grid, opts));
      } else if (id == "gradient_linear_bound") {
        std::optional<double> lp;
        if (cfg.M || fM) lp = 2.0 * need(cfg.M, fM, "M");
        reports.push_back(
            check_gradient_linear_bound(V, star, need(cfg.L_prime, lp, "L_prime"), grid, opts));
      }
    }

    out << fmt::format("field {} | V {} | {} grid points\n", cfg.field_name, V.name(), grid.size());
    out << fmt::format("{:<24}{:<6}{:>24}{:>9}{:>9}\n", "condition", "ok", "worst_margin",
                       "samples", "skipped");
    bool all_ok = true;
    for (const auto& r : reports) {
      all_ok = all_ok && r.ok;
      out << fmt::format("{:<24}{:<6}{:>24}{:>9}{:>9}\n", r.condition_id, r.ok ? "pass" : "FAIL",
                         format_real(r.worst_margin), r.samples, r.skipped);
    }
    auto csv = open_out(output_dir(cfg, o) / "checks.csv");
    write_check_reports_csv(csv, reports);
    return static_cast<int>(all_ok ? kExitOk : kExitCheckFailed);
  });
}

int cmd_construct(const std::string& config_path, const CommonOverrides& o, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = load_validated(config_path);
    cfg.lyapunov_kind = "converse";
    const VectorField f = make_field(cfg.field_name, cfg.field_params);
    const Vector star = f.require_equilibrium();
    const auto built = build_lyapunov(cfg, f);
    const LyapunovFunction& V = *built.V;
    const auto& cb = *built.converse;
    const auto& k = *V.constants;

    const auto grid = cfg.grid.build(star).points();
    // Relative spread of the Hessian over the grid; ~0 when V is quadratic.
    const Matrix H0 = V.hessian(grid.front());
    double variation = 0.0;
    for (const auto& x : grid) {
      variation = std::max(variation, (V.hessian(x) - H0).norm() / H0.norm());
    }

    const std::string source = cb.estimated ? "estimated" : "supplied";
    out << fmt::format("mu = {} ({})\n", format_real(cb.mu), source);
    out << fmt::format("gamma = {} ({})\n", format_real(cb.gamma), source);
    out << fmt::format("kappa = {}\nT = {}\n", format_real(cb.params.kappa),
                       format_real(cb.params.T));
    out << fmt::format("a = {}\nb = {}\nc = {}\nM = {}\n", format_real(k.a), format_real(k.b),
                       format_real(k.c), format_real(k.M));
    out << fmt::format("hessian_relative_variation = {}\n", format_real(variation));

    const auto dir = output_dir(cfg, o);
    auto snap = open_out(dir / "converse_snapshot.csv");
    write_lyapunov_snapshot_csv(snap, V, grid);
    auto consts = open_out(dir / "converse_constants.csv");
    const std::string header[] = {"key", "value"};
    write_csv_row(consts, header);
    const std::pair<const char*, double> rows[] = {
        {"mu", cb.mu},      {"gamma", cb.gamma}, {"kappa", cb.params.kappa},
        {"T", cb.params.T}, {"a", k.a},          {"b", k.b},
        {"c", k.c},         {"M", k.M},          {"hessian_relative_variation", variation}};
    for (const auto& [key, v] : rows) {
      const std::string row[] = {key, format_real(v)};
      write_csv_row(consts, row);
    }
    return static_cast<int>(kExitOk);
  });
}

namespace {

struct RunContext {
  ExperimentConfig cfg;
  std::optional<VectorField> f;
  SolutionSet S;
  Vector theta0;
  BuiltLyapunov lyap;
};

RunContext prepare_run(const std::string& config_path, const RunOverrides& o) {
  RunContext ctx;
  ctx.cfg = load_config(config_path);
  auto& cfg = ctx.cfg;
  if (o.seeds) cfg.n_seeds = *o.seeds;
  if (o.noise) cfg.noise_kind = *o.noise;
  if (o.steps) cfg.T_steps = *o.steps;
  if (o.master_seed) cfg.master_seed = *o.master_seed;
  cfg.validate();
  ctx.f = make_field(cfg.field_name, cfg.field_params);
  ctx.S = ctx.f->equilibrium() ? solution_set_for(cfg.field_name, *ctx.f) : SolutionSet{};
  ctx.theta0 = cfg.theta0.empty()
                   ? Vector(Vector::Zero(ctx.f->dim()))
                   : Vector(Eigen::Map<const Vector>(cfg.theta0.data(),
                                                     static_cast<Eigen::Index>(cfg.theta0.size())));
  ctx.lyap = build_lyapunov(cfg, *ctx.f);
  return ctx;
}

EnsembleSpec make_spec(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& f = *ctx.f;
  NoiseModel noise(parse_noise_kind(cfg.noise_kind), cfg.sigma, f.reference_point());
  EnsembleSpec spec{ctx.theta0, noise, cfg.T_steps,  cfg.n_seeds, cfg.master_seed,
                    cfg.stride, ctx.S, std::nullopt, std::nullopt};
  if (cfg.ledger.enabled) {
    if (!ctx.lyap.V) throw ConfigError("the ledger needs a field with an equilibrium");
    const auto& V = *ctx.lyap.V;
    LedgerOptions lo;
    lo.n_resamples = cfg.ledger.n_resamples;
    lo.checkpoints = cfg.ledger.checkpoints;
    lo.n_paths = cfg.ledger.n_paths;
    std::optional<LyapunovConstants> fitted = V.constants;
    if (!fitted && (!cfg.ledger.M || !cfg.ledger.a)) {
      const auto pts = cfg.grid.build(V.theta_star()).points();
      fitted = fit_envelope_constants(V, f, pts);
    }
    lo.constants.M = cfg.ledger.M.value_or(fitted ? fitted->M : 0.0);
    lo.constants.a = cfg.ledger.a.value_or(fitted ? fitted->a : 0.0);
    if (cfg.ledger.L) {
      lo.constants.L = *cfg.ledger.L;
    } else if (f.lipschitz()) {
      lo.constants.L = *f.lipschitz();
    } else {
      throw ConfigError("the ledger needs L: set [ledger] L or use a field with a known constant");
    }
    lo.constants.sigma2 = noise.sigma2();
    if (!cfg.phi.empty()) lo.constants.phi = make_comparator(cfg.phi);
    spec.ledger = lo;
  }
  return spec;
}

std::string describe_run(const EnsembleRun& r) {
  const auto& s = r.summary;
  std::string text;
  text += fmt::format("schedule: {}\n", r.schedule.describe());
  text += fmt::format("square_summable: {}\nnon_summable: {}\n", r.classification.square_summable,
                      r.classification.non_summable);
  text += fmt::format("n_paths: {}\n", s.n_paths);
  text += fmt::format("bounded_fraction: {}\n", format_real(s.bounded_fraction));
  text += fmt::format("diverged_fraction: {}\n", format_real(s.diverged_fraction));
  text += fmt::format("final_distance_q05: {}\n", format_real(s.q05));
  text += fmt::format("final_distance_q50: {}\n", format_real(s.q50));
  text += fmt::format("final_distance_q95: {}\n", format_real(s.q95));
  text += fmt::format("v_limit_spread: {}\n", format_real(s.v_limit_spread));
  text += fmt::format("v_tail_oscillation (proxy): {}\n", format_real(s.v_tail_oscillation));
  if (r.ledger_checks > 0) {
    text += fmt::format("ledger: {}/{} checkpoints satisfy the 3-SE inequality\n", r.ledger_passes,
                        r.ledger_checks);
  }
  return text;
}

void write_run(const fs::path& dir, const EnsembleRun& r, const SolutionSet& S,
               const LyapunovFunction* V) {
  fs::create_directories(dir);
  {
    auto f = open_out(dir / "summary.csv");
    write_summary_csv(f, r.summary);
  }
  {
    auto f = open_out(dir / "ensemble.csv");
    write_ensemble_csv(f, r.paths, S, V);
  }
  if (r.ledger_checks > 0) {
    auto f = open_out(dir / "ledger.csv");
    bool first = true;
    for (const auto& p : r.paths) {
      if (p.rs_ledger.empty()) continue;
      write_ledger_csv(f, p.rs_ledger, p.seed, first);
      first = false;
    }
  }
  if (!r.paths.empty() && r.paths.front().thetas.size() > 1) {
    fs::create_directories(dir / "paths");
    for (std::size_t i = 0; i < r.paths.size(); ++i) {
      auto f = open_out(dir / "paths" / fmt::format("seed_{:04d}.csv", i));
      write_path_csv(f, r.paths[i]);
    }
  }
}

}  // namespace

int cmd_run(const std::string& config_path, const RunOverrides& o, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    const auto ctx = prepare_run(config_path, o);
    const auto& cfg = ctx.cfg;
    const auto spec = make_spec(ctx);
    const LyapunovFunction* V = ctx.lyap.V ? &*ctx.lyap.V : nullptr;
    const auto dir = output_dir(cfg, o);
    const SolutionSet S = ctx.S.empty() ? SolutionSet::singleton(ctx.f->reference_point()) : ctx.S;

    std::string text =
        fmt::format("field: {}\nnoise: {} sigma={}\nT_steps: {}\nmaster_seed: {}\n", cfg.field_name,
                    cfg.noise_kind, format_real(cfg.sigma), cfg.T_steps, cfg.master_seed);
    if (cfg.mode == "division_of_labor") {
      const auto rep = [&] {
        try {
          return division_of_labor_experiment(*ctx.f, V, cfg.boundedness_schedule->build(),
                                              cfg.schedule.build(), spec);
        } catch (const ConfigError&) {
          throw;
        } catch (const Error& e) {
          throw ConfigError(e.what());
        }
      }();
      write_run(dir / "boundedness", rep.boundedness_run, S, V);
      write_run(dir / "convergence", rep.convergence_run, S, V);
      text += "\n[boundedness run]\n" + describe_run(rep.boundedness_run);
      text += "\n[convergence run]\n" + describe_run(rep.convergence_run);
    } else {
      const auto run = run_ensemble_experiment(*ctx.f, V, cfg.schedule.build(), spec);
      write_run(dir, run, S, V);
      text += "\n" + describe_run(run);
    }
    {
      auto f = open_out(dir / "summary.txt");
      f << text;
    }
    out << text;
    return static_cast<int>(kExitOk);
  });
}

int cmd_sweep(const std::string& config_path, const SweepArgs& args, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    if (args.p_values.empty() || args.sigma_values.empty()) {
      throw ConfigError("sweep needs at least one p and one sigma");
    }
    auto ctx = prepare_run(config_path, args);
    ctx.cfg.ledger.enabled = false;
    const LyapunovFunction* V = ctx.lyap.V ? &*ctx.lyap.V : nullptr;
    const auto dir = output_dir(ctx.cfg, args);
    auto csv = open_out(dir / "sweep.csv");
    const std::string header[] = {"p",
                                  "sigma",
                                  "square_summable",
                                  "non_summable",
                                  "bounded_fraction",
                                  "diverged_fraction",
                                  "q05",
                                  "q50",
                                  "q95"};
    write_csv_row(csv, header);
    out << fmt::format("{:>8}{:>8}{:>8}{:>8}{:>12}{:>12}{:>14}\n", "p", "sigma", "12a", "12b",
                       "bounded", "diverged", "q95");
    for (double p : args.p_values) {
      ScheduleSpec ss = ctx.cfg.schedule;
      ss.family = "power";
      ss.p = p;
      const StepSchedule schedule = ss.build();
      for (double sigma : args.sigma_values) {
        if (!(sigma >= 0.0)) throw ConfigError("sigma values must be nonnegative");
        ctx.cfg.sigma = sigma;
        const auto spec = make_spec(ctx);
        const auto run = run_ensemble_experiment(*ctx.f, V, schedule, spec);
        const auto& s = run.summary;
        const std::string row[] = {format_real(p),
                                   format_real(sigma),
                                   run.classification.square_summable ? "true" : "false",
                                   run.classification.non_summable ? "true" : "false",
                                   format_real(s.bounded_fraction),
                                   format_real(s.diverged_fraction),
                                   format_real(s.q05),
                                   format_real(s.q50),
                                   format_real(s.q95)};
        write_csv_row(csv, row);
        out << fmt::format("{:>8}{:>8}{:>8}{:>8}{:>12}{:>12}{:>14}\n", format_real(p),
                           format_real(sigma), holds(run.classification.square_summable),
                           holds(run.classification.non_summable), format_real(s.bounded_fraction),
                           format_real(s.diverged_fraction), format_real(s.q95));
      }
    }
    return static_cast<int>(kExitOk);
  });
}

}  // namespace salyap
