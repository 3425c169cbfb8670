#include "salyap/sa_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "salyap/csv.hpp"
#include "salyap/parallel.hpp"
#include "salyap/rng.hpp"

namespace salyap {

StepSchedule StepSchedule::power_law(double c, double t0, double p) {
  if (!(c > 0.0) || !(t0 >= 1.0) || !(p > 0.0)) {
    throw Error("power-law schedule needs c > 0, t0 >= 1, p > 0");
  }
  if (!(c / std::pow(t0, p) < 1.0)) {
    throw Error(fmt::format("power-law schedule has alpha_0 = {} >= 1", c / std::pow(t0, p)));
  }
  StepSchedule s;
  s.family_ = ScheduleFamily::PowerLaw;
  s.c_ = c;
  s.t0_ = t0;
  s.p_ = p;
  return s;
}

StepSchedule StepSchedule::constant(double c) {
  if (!(c > 0.0 && c < 1.0)) throw Error("constant schedule needs c in (0, 1)");
  StepSchedule s;
  s.family_ = ScheduleFamily::Constant;
  s.c_ = c;
  return s;
}

StepSchedule StepSchedule::custom(std::vector<double> alphas) {
  if (alphas.empty()) throw Error("custom schedule needs at least one value");
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw Error("custom schedule values must lie in (0, 1)");
  }
  StepSchedule s;
  s.family_ = ScheduleFamily::Custom;
  s.values_ = std::move(alphas);
  return s;
}

double StepSchedule::operator()(long t) const {
  if (t < 0) throw Error("negative step index");
  switch (family_) {
    case ScheduleFamily::PowerLaw:
      return c_ / std::pow(static_cast<double>(t) + t0_, p_);
    case ScheduleFamily::Constant:
      return c_;
    case ScheduleFamily::Custom:
      if (static_cast<std::size_t>(t) >= values_.size()) {
        throw Error(fmt::format("custom schedule has no value for t = {}", t));
      }
      return values_[static_cast<std::size_t>(t)];
  }
  return 0.0;
}

std::string StepSchedule::describe() const {
  switch (family_) {
    case ScheduleFamily::PowerLaw:
      return fmt::format("power_law(c={}, t0={}, p={})", c_, t0_, p_);
    case ScheduleFamily::Constant:
      return fmt::format("constant(c={})", c_);
    case ScheduleFamily::Custom:
      return fmt::format("custom({} values)", values_.size());
  }
  return "?";
}

ScheduleClass classify_power_law(double p) { return {p > 0.5, p <= 1.0, false}; }

ScheduleClass classify_schedule(const StepSchedule& s) {
  switch (s.family()) {
    case ScheduleFamily::PowerLaw:
      return classify_power_law(s.p());
    case ScheduleFamily::Constant:
      return {false, true, false};
    case ScheduleFamily::Custom:
      break;
  }
  const auto& v = s.values();
  const std::size_t n = v.size();
  if (n < 8) return {false, true, true};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t t = n / 2; t < n; ++t) {
    const double x = std::log(static_cast<double>(t + 1));
    const double y = std::log(v[t]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  // Rounded so that an exact power law lands on its own exponent.
  const double p = std::round(-(m * sxy - sx * sy) / (m * sxx - sx * sx) * 1e6) / 1e6;
  return {p > 0.5, p <= 1.0, true};
}

const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::GaussianStateScaled:
      return "gaussian_state_scaled";
    case NoiseKind::SphereBounded:
      return "sphere_bounded";
    case NoiseKind::Zero:
      return "zero";
  }
  return "?";
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "gaussian_state_scaled" || name == "gaussian") return NoiseKind::GaussianStateScaled;
  if (name == "sphere_bounded" || name == "sphere") return NoiseKind::SphereBounded;
  if (name == "zero" || name == "none") return NoiseKind::Zero;
  throw Error(fmt::format("unknown noise kind '{}'", name));
}

NoiseModel::NoiseModel(NoiseKind kind, double sigma, Vector reference, std::uint64_t seed)
    : kind_(kind), sigma_(sigma), reference_(std::move(reference)), seed_(seed) {
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_))
    throw Error("noise sigma must be finite and >= 0");
  if (reference_.size() == 0) throw Error("noise reference point is empty");
}

NoiseModel NoiseModel::with_seed(std::uint64_t seed) const {
  NoiseModel m = *this;
  m.seed_ = seed;
  return m;
}

Vector NoiseModel::draw(const Vector& theta, long t, std::uint64_t substream) const {
  const auto d = theta.size();
  if (kind_ == NoiseKind::Zero || sigma_ == 0.0) return Vector::Zero(d);
  const double scale2 = sigma_ * sigma_ * (1.0 + (theta - reference_).squaredNorm());
  CounterStream rng(seed_, static_cast<std::uint64_t>(t), substream);
  Vector xi(d);
  for (Eigen::Index i = 0; i < d; ++i) xi(i) = rng.normal();
  if (kind_ == NoiseKind::GaussianStateScaled) {
    return xi * std::sqrt(scale2 / static_cast<double>(d));
  }
  double n = xi.norm();
  while (n == 0.0) {
    for (Eigen::Index i = 0; i < d; ++i) xi(i) = rng.normal();
    n = xi.norm();
  }
  return xi * (std::sqrt(scale2) / n);
}

namespace {

bool is_diverged(const Vector& theta) {
  return !theta.allFinite() || theta.norm() > kDivergenceThreshold;
}

}  // namespace

StepResult step(const Vector& theta, const VectorField& f, double alpha, const NoiseModel& noise,
                long t) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(fmt::format("step size {} not in (0, 1)", alpha));
  StepResult r;
  r.xi = noise.draw(theta, t);
  r.theta = theta + alpha * (f(theta) + r.xi);
  r.diverged = is_diverged(r.theta);
  return r;
}

SamplePath run_path(const VectorField& f, const Vector& theta0, const StepSchedule& schedule,
                    const NoiseModel& noise, long T_steps, const RecordOptions& record) {
  if (T_steps < 1) throw Error("T_steps must be at least 1");
  if (theta0.size() != f.dim()) throw Error("theta0 has wrong dimension");
  if (record.stride < 0) throw Error("stride must be nonnegative");

  SamplePath path;
  path.seed = noise.seed();
  const Vector ref = f.reference_point();
  const auto& V = record.lyapunov;

  std::vector<long> cps = record.checkpoints;
  std::sort(cps.begin(), cps.end());
  std::size_t next_cp = 0;

  const long tail_start =
      T_steps - static_cast<long>(std::ceil(record.tail_fraction * static_cast<double>(T_steps)));
  path.tail_v_min = std::numeric_limits<double>::infinity();
  path.tail_v_max = -std::numeric_limits<double>::infinity();

  auto observe = [&](long t, const Vector& theta) {
    const bool stored = record.stride > 0 && t % record.stride == 0;
    const bool in_tail = V && t >= tail_start;
    double v = std::numeric_limits<double>::quiet_NaN();
    if (V && (stored || in_tail)) v = V(theta);
    if (in_tail) {
      path.tail_v_min = std::min(path.tail_v_min, v);
      path.tail_v_max = std::max(path.tail_v_max, v);
    }
    if (stored) {
      path.steps.push_back(t);
      path.thetas.push_back(theta);
      if (V) path.v_values.push_back(v);
      path.alphas.push_back(schedule(t));
    }
    while (next_cp < cps.size() && cps[next_cp] < t) ++next_cp;
    if (next_cp < cps.size() && cps[next_cp] == t) path.checkpoint_states.emplace_back(t, theta);
  };

  Vector theta = theta0;
  path.sup_norm = (theta - ref).norm();
  observe(0, theta);
  long t = 0;
  for (; t < T_steps; ++t) {
    const StepResult r = step(theta, f, schedule(t), noise, t);
    theta = r.theta;
    const double dist = (theta - ref).norm();
    path.sup_norm = std::isfinite(dist) ? std::max(path.sup_norm, dist)
                                        : std::numeric_limits<double>::infinity();
    if (r.diverged) {
      path.diverged = true;
      path.diverged_at = t + 1;
      ++t;
      break;
    }
    if (t + 1 < T_steps) observe(t + 1, theta);
  }
  path.final_step = t;
  path.final_theta = theta;
  // The final state is always stored and closes the tail window.
  const double v_final = V ? V(theta) : std::numeric_limits<double>::quiet_NaN();
  if (V && !path.diverged) {
    path.tail_v_min = std::min(path.tail_v_min, v_final);
    path.tail_v_max = std::max(path.tail_v_max, v_final);
  }
  path.steps.push_back(t);
  path.thetas.push_back(theta);
  if (V) path.v_values.push_back(v_final);
  const bool past_end = schedule.family() == ScheduleFamily::Custom &&
                        static_cast<std::size_t>(t) >= schedule.values().size();
  path.alphas.push_back(past_end ? std::numeric_limits<double>::quiet_NaN() : schedule(t));
  if (!V) {
    path.tail_v_min = std::numeric_limits<double>::quiet_NaN();
    path.tail_v_max = std::numeric_limits<double>::quiet_NaN();
  }
  return path;
}

std::vector<SamplePath> run_ensemble(const VectorField& f, const Vector& theta0,
                                     const StepSchedule& schedule, const NoiseModel& noise,
                                     long T_steps, int n_paths, std::uint64_t master_seed,
                                     const RecordOptions& record) {
  if (n_paths < 1) throw Error("ensemble needs at least one path");
  std::vector<SamplePath> paths(static_cast<std::size_t>(n_paths));
  parallel_for(n_paths, [&](long i) {
    const auto seed = derive_seed(master_seed, static_cast<std::uint64_t>(i));
    paths[static_cast<std::size_t>(i)] =
        run_path(f, theta0, schedule, noise.with_seed(seed), T_steps, record);
  });
  return paths;
}

void write_path_csv(std::ostream& os, const SamplePath& path) {
  const auto d = path.thetas.empty() ? 0 : path.thetas.front().size();
  const bool with_v = !path.v_values.empty();
  std::vector<std::string> row{"t"};
  for (Eigen::Index i = 0; i < d; ++i) row.push_back(fmt::format("x_{}", i + 1));
  if (with_v) row.push_back("V");
  row.push_back("alpha_t");
  write_csv_row(os, row);
  for (std::size_t k = 0; k < path.thetas.size(); ++k) {
    row.clear();
    row.push_back(std::to_string(path.steps[k]));
    for (Eigen::Index i = 0; i < d; ++i) row.push_back(format_real(path.thetas[k](i)));
    if (with_v) row.push_back(format_real(path.v_values[k]));
    row.push_back(format_real(path.alphas[k]));
    write_csv_row(os, row);
  }
}

}  // namespace salyap
