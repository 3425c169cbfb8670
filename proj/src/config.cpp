#include "salyap/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "salyap/csv.hpp"

namespace salyap {

namespace pt = boost::property_tree;

StepSchedule ScheduleSpec::build() const {
  try {
    if (family == "power" || family == "power_law") return StepSchedule::power_law(c, t0, p);
    if (family == "constant") return StepSchedule::constant(c);
    if (family == "custom") return StepSchedule::custom(values);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError(fmt::format("unknown schedule family '{}'", family));
}

SampleGrid GridSpec::build(const Vector& default_center) const {
  Vector c = default_center;
  if (center) {
    c = Eigen::Map<const Vector>(center->data(), static_cast<Eigen::Index>(center->size()));
  }
  if (c.size() != default_center.size()) throw ConfigError("grid center has wrong dimension");
  if (shells < 1 || points_per_shell < 1)
    throw ConfigError("grid needs shells, points_per_shell >= 1");
  return SampleGrid{c, geometric_radii(r_min, r_max, shells), points_per_shell, seed};
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{
      "sandwich", "generalized_sandwich", "decay", "hessian_bound", "F4", "gradient_linear_bound"};
  return names;
}

namespace {

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += format_real(v[i]);
  }
  return s;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Reads keys from one section and remembers which were used.
class Section {
 public:
  Section(const pt::ptree* node, std::string name) : node_(node), name_(std::move(name)) {}

  bool present() const { return node_ != nullptr; }

  std::optional<std::string> str(const std::string& key) {
    used_.insert(key);
    if (!node_) return std::nullopt;
    auto it = node_->find(key);
    if (it == node_->not_found()) return std::nullopt;
    return it->second.data();
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (auto s = str(key)) out = convert<T>(key, *s);
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    if (auto s = str(key)) out = convert<T>(key, *s);
  }

  /// Keys of this section not in `skip` and not yet read.
  ParamMap rest(const std::set<std::string>& skip) {
    ParamMap out;
    if (!node_) return out;
    for (const auto& [k, v] : *node_) {
      if (skip.count(k) || used_.count(k)) continue;
      out[k] = v.data();
      used_.insert(k);
    }
    return out;
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [k, v] : *node_) {
      if (!used_.count(k)) throw ConfigError(fmt::format("unknown key '{}' in [{}]", k, name_));
    }
  }

 private:
  template <typename T>
  T convert(const std::string& key, const std::string& s) const {
    const auto where = [&] { return fmt::format("[{}] {} = '{}'", name_, key, s); };
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        return s;
      } else if constexpr (std::is_same_v<T, bool>) {
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ConfigError("bad boolean");
      } else if constexpr (std::is_same_v<T, double>) {
        const auto v = parse_list(s);
        if (v.size() != 1) throw ConfigError("expected one number");
        return v.front();
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        return parse_list(s);
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size()) throw ConfigError("trailing characters");
        return v;
      } else {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw ConfigError("trailing characters");
        return static_cast<T>(v);
      }
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("invalid value {}", where()));
    }
  }

  const pt::ptree* node_;
  std::string name_;
  std::set<std::string> used_;
};

Section section(const pt::ptree& tree, const std::string& name) {
  auto it = tree.find(name);
  return Section(it == tree.not_found() ? nullptr : &it->second, name);
}

void read_schedule(Section& s, ScheduleSpec& out) {
  s.get("family", out.family);
  s.get("c", out.c);
  s.get("t0", out.t0);
  s.get("p", out.p);
  s.get("values", out.values);
  s.finish();
}

void read_grid(Section& s, GridSpec& g) {
  s.get("center", g.center);
  s.get("r_min", g.r_min);
  s.get("r_max", g.r_max);
  s.get("shells", g.shells);
  s.get("points_per_shell", g.points_per_shell);
  s.get("seed", g.seed);
}

}  // namespace

ExperimentConfig read_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config parse error: {}", e.message()));
  }
  static const std::set<std::string> known{
      "experiment", "field",    "schedule", "boundedness_schedule", "noise", "lyapunov", "checks",
      "grid",       "converse", "ledger"};
  for (const auto& [k, v] : tree) {
    if (!known.count(k)) throw ConfigError(fmt::format("unknown section [{}]", k));
  }

  ExperimentConfig c;
  {
    auto s = section(tree, "experiment");
    s.get("mode", c.mode);
    s.get("n_seeds", c.n_seeds);
    s.get("T_steps", c.T_steps);
    s.get("theta0", c.theta0);
    s.get("stride", c.stride);
    s.get("output_dir", c.output_dir);
    s.get("master_seed", c.master_seed);
    s.finish();
  }
  {
    auto s = section(tree, "field");
    if (!s.present()) throw ConfigError("missing [field] section");
    auto name = s.str("name");
    if (!name) throw ConfigError("[field] needs a name");
    c.field_name = *name;
    c.field_params = s.rest({});
  }
  {
    auto s = section(tree, "schedule");
    read_schedule(s, c.schedule);
  }
  {
    auto s = section(tree, "boundedness_schedule");
    if (s.present()) {
      ScheduleSpec b;
      read_schedule(s, b);
      c.boundedness_schedule = b;
    }
  }
  {
    auto s = section(tree, "noise");
    s.get("kind", c.noise_kind);
    s.get("sigma", c.sigma);
    s.finish();
  }
  {
    auto s = section(tree, "lyapunov");
    s.get("kind", c.lyapunov_kind);
    s.get("eta", c.eta);
    s.get("psi", c.psi);
    s.get("phi", c.phi);
    c.lyapunov_params = s.rest({});
  }
  {
    auto s = section(tree, "checks");
    if (auto list = s.str("run")) c.checks = split_names(*list);
    s.get("a", c.a);
    s.get("b", c.b);
    s.get("M", c.M);
    s.get("K", c.K);
    s.get("L_prime", c.L_prime);
    s.get("tolerance", c.tolerance);
    s.finish();
  }
  {
    auto s = section(tree, "grid");
    read_grid(s, c.grid);
    s.finish();
  }
  {
    auto s = section(tree, "converse");
    s.get("kappa", c.converse.kappa);
    s.get("T", c.converse.T);
    s.get("mu", c.converse.mu);
    s.get("gamma", c.converse.gamma);
    s.get("quad_nodes", c.converse.quad_nodes);
    s.get("horizon", c.converse.horizon);
    s.get("stability_r_min", c.converse.stability_grid.r_min);
    s.get("stability_r_max", c.converse.stability_grid.r_max);
    s.get("stability_shells", c.converse.stability_grid.shells);
    s.get("stability_points_per_shell", c.converse.stability_grid.points_per_shell);
    s.get("stability_seed", c.converse.stability_grid.seed);
    s.finish();
  }
  {
    auto s = section(tree, "ledger");
    s.get("enabled", c.ledger.enabled);
    s.get("n_resamples", c.ledger.n_resamples);
    s.get("checkpoints", c.ledger.checkpoints);
    s.get("n_paths", c.ledger.n_paths);
    s.get("M", c.ledger.M);
    s.get("a", c.ledger.a);
    s.get("L", c.ledger.L);
    s.finish();
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  return read_config(in);
}

namespace {

void put(std::ostream& o, const std::string& k, const std::string& v) {
  o << k << " = " << v << "\n";
}
void put(std::ostream& o, const std::string& k, double v) { put(o, k, format_real(v)); }
void put_int(std::ostream& o, const std::string& k, long long v) { put(o, k, std::to_string(v)); }
template <typename T>
void put_opt(std::ostream& o, const std::string& k, const std::optional<T>& v) {
  if (v) put(o, k, *v);
}

void write_schedule(std::ostream& o, const char* name, const ScheduleSpec& s) {
  o << "\n[" << name << "]\n";
  put(o, "family", s.family);
  put(o, "c", s.c);
  put(o, "t0", s.t0);
  put(o, "p", s.p);
  if (!s.values.empty()) put(o, "values", join(s.values));
}

}  // namespace

void write_config(std::ostream& o, const ExperimentConfig& c) {
  o << "[experiment]\n";
  put(o, "mode", c.mode);
  put_int(o, "n_seeds", c.n_seeds);
  put_int(o, "T_steps", c.T_steps);
  if (!c.theta0.empty()) put(o, "theta0", join(c.theta0));
  put_int(o, "stride", c.stride);
  put(o, "output_dir", c.output_dir);
  put(o, "master_seed", std::to_string(c.master_seed));

  o << "\n[field]\n";
  put(o, "name", c.field_name);
  for (const auto& [k, v] : c.field_params) put(o, k, v);

  write_schedule(o, "schedule", c.schedule);
  if (c.boundedness_schedule) write_schedule(o, "boundedness_schedule", *c.boundedness_schedule);

  o << "\n[noise]\n";
  put(o, "kind", c.noise_kind);
  put(o, "sigma", c.sigma);

  o << "\n[lyapunov]\n";
  put(o, "kind", c.lyapunov_kind);
  if (!c.eta.empty()) put(o, "eta", c.eta);
  if (!c.psi.empty()) put(o, "psi", c.psi);
  if (!c.phi.empty()) put(o, "phi", c.phi);
  for (const auto& [k, v] : c.lyapunov_params) put(o, k, v);

  o << "\n[checks]\n";
  if (!c.checks.empty()) {
    std::string list;
    for (std::size_t i = 0; i < c.checks.size(); ++i) list += (i ? "," : "") + c.checks[i];
    put(o, "run", list);
  }
  put_opt(o, "a", c.a);
  put_opt(o, "b", c.b);
  put_opt(o, "M", c.M);
  put_opt(o, "K", c.K);
  put_opt(o, "L_prime", c.L_prime);
  put(o, "tolerance", c.tolerance);

  o << "\n[grid]\n";
  if (c.grid.center) put(o, "center", join(*c.grid.center));
  put(o, "r_min", c.grid.r_min);
  put(o, "r_max", c.grid.r_max);
  put_int(o, "shells", c.grid.shells);
  put_int(o, "points_per_shell", c.grid.points_per_shell);
  put(o, "seed", std::to_string(c.grid.seed));

  o << "\n[converse]\n";
  put_opt(o, "kappa", c.converse.kappa);
  put_opt(o, "T", c.converse.T);
  put_opt(o, "mu", c.converse.mu);
  put_opt(o, "gamma", c.converse.gamma);
  put_int(o, "quad_nodes", c.converse.quad_nodes);
  put(o, "horizon", c.converse.horizon);
  const auto& g = c.converse.stability_grid;
  put(o, "stability_r_min", g.r_min);
  put(o, "stability_r_max", g.r_max);
  put_int(o, "stability_shells", g.shells);
  put_int(o, "stability_points_per_shell", g.points_per_shell);
  put(o, "stability_seed", std::to_string(g.seed));

  o << "\n[ledger]\n";
  put(o, "enabled", c.ledger.enabled ? "true" : "false");
  put_int(o, "n_resamples", c.ledger.n_resamples);
  put_int(o, "checkpoints", c.ledger.checkpoints);
  put_int(o, "n_paths", c.ledger.n_paths);
  put_opt(o, "M", c.ledger.M);
  put_opt(o, "a", c.ledger.a);
  put_opt(o, "L", c.ledger.L);
}

void ExperimentConfig::validate() const {
  if (mode != "single" && mode != "division_of_labor") {
    throw ConfigError(fmt::format("unknown mode '{}'", mode));
  }
  if (mode == "division_of_labor" && !boundedness_schedule) {
    throw ConfigError("division_of_labor mode needs a [boundedness_schedule] section");
  }
  if (n_seeds < 1) throw ConfigError("n_seeds must be at least 1");
  if (T_steps < 1) throw ConfigError("T_steps must be at least 1");
  if (stride < 0) throw ConfigError("stride must be nonnegative");

  const VectorField f = make_field(field_name, field_params);
  if (!theta0.empty() && static_cast<int>(theta0.size()) != f.dim()) {
    throw ConfigError("theta0 does not match the field dimension");
  }
  schedule.build();
  if (boundedness_schedule) boundedness_schedule->build();
  try {
    parse_noise_kind(noise_kind);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");

  static const std::set<std::string> kinds{"squared_norm", "quadratic", "quartic",
                                           "lyapunov_equation", "converse"};
  if (!kinds.count(lyapunov_kind)) {
    throw ConfigError(fmt::format("unknown Lyapunov function kind '{}'", lyapunov_kind));
  }
  if (lyapunov_kind != "converse" && f.equilibrium()) {
    try {
      make_lyapunov(lyapunov_kind, lyapunov_params, f);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  for (const auto* spec : {&eta, &psi, &phi}) {
    if (!spec->empty()) make_comparator(*spec);
  }
  for (const auto& c : checks) {
    if (std::find(check_names().begin(), check_names().end(), c) == check_names().end()) {
      throw ConfigError(fmt::format("unknown check '{}'", c));
    }
  }
}

}  // namespace salyap
