#include "salyap/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "salyap/rng.hpp"

namespace salyap {

VectorField::VectorField(int dim, Map eval, std::optional<Vector> equilibrium,
                         std::optional<double> lipschitz, Smoothness smoothness, std::string name)
    : dim_(dim),
      eval_(std::move(eval)),
      equilibrium_(std::move(equilibrium)),
      lipschitz_(lipschitz),
      smoothness_(smoothness),
      name_(std::move(name)) {
  if (dim_ <= 0) throw Error("field dimension must be positive");
  if (!eval_) throw Error("field has no evaluation map");
  if (lipschitz_ && *lipschitz_ < 0.0) throw Error("Lipschitz constant must be nonnegative");
  if (equilibrium_) {
    if (equilibrium_->size() != dim_) throw Error("equilibrium has wrong dimension");
    const double residual = eval_(*equilibrium_).norm();
    if (!(residual <= kEquilibriumTolerance)) {
      throw Error(fmt::format("declared equilibrium is not a zero of the field (residual {:.3e})",
                              residual));
    }
  }
}

Vector VectorField::reference_point() const {
  return equilibrium_ ? *equilibrium_ : Vector::Zero(dim_);
}

const Vector& VectorField::require_equilibrium() const {
  if (!equilibrium_) throw Error(fmt::format("field '{}' has no declared equilibrium", name_));
  return *equilibrium_;
}

double sampled_lipschitz_ratio(const VectorField& f,
                               std::span<const std::pair<Vector, Vector>> pairs) {
  double worst = 0.0;
  for (const auto& [x, y] : pairs) {
    const double dx = (x - y).norm();
    if (dx == 0.0) continue;
    worst = std::max(worst, (f(x) - f(y)).norm() / dx);
  }
  return worst;
}

const char* to_string(ComparatorClass c) {
  switch (c) {
    case ComparatorClass::K:
      return "K";
    case ComparatorClass::KR:
      return "KR";
    case ComparatorClass::B:
      return "B";
  }
  return "?";
}

bool ClassReport::satisfies(ComparatorClass c) const {
  switch (c) {
    case ComparatorClass::K:
      return class_K_ok;
    case ComparatorClass::KR:
      return class_KR_ok;
    case ComparatorClass::B:
      return class_B_ok;
  }
  return false;
}

std::vector<double> default_comparator_grid() {
  std::vector<double> grid{0.0};
  const auto radii = geometric_radii(1e-4, 1e4, 200);
  grid.insert(grid.end(), radii.begin(), radii.end());
  return grid;
}

ClassReport check_class_membership(const ComparatorFunction& phi, std::span<const double> grid) {
  if (grid.empty() || grid.front() != 0.0) throw Error("comparator grid must start at 0");
  if (!std::is_sorted(grid.begin(), grid.end())) throw Error("comparator grid must be sorted");

  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = phi(grid[i]);
    if (!(values[i] >= 0.0)) {
      throw Error(fmt::format("not nonnegative: phi({}) = {}", grid[i], values[i]));
    }
  }

  ClassReport report;
  const bool zero_at_zero = values.front() == 0.0;
  if (!zero_at_zero) report.witnesses.push_back({"B", 0.0, 0.0});

  report.class_B_ok = zero_at_zero;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] > 0.0 && values[i] <= 0.0) {
      report.class_B_ok = false;
      report.witnesses.push_back({"B", grid[i], grid[i]});
      break;
    }
  }

  report.class_K_ok = zero_at_zero;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] > grid[i - 1] && !(values[i] > values[i - 1])) {
      report.class_K_ok = false;
      report.witnesses.push_back({"K", grid[i - 1], grid[i]});
      break;
    }
  }
  // Strictly increasing from phi(0) = 0 already forces positivity.
  if (report.class_K_ok) report.class_B_ok = true;

  report.class_KR_ok = false;
  if (report.class_K_ok) {
    std::vector<std::size_t> positive;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] > 0.0) positive.push_back(i);
    }
    if (positive.size() >= 3) {
      // Compare the growth over the last decade of the grid with the decade
      // before it; grids spanning less than two decades split in half instead.
      const std::size_t hi = positive.back();
      auto below = [&](double r) {
        std::optional<std::size_t> idx;
        for (std::size_t i : positive) {
          if (grid[i] <= r) idx = i;
        }
        return idx;
      };
      auto mid = below(grid[hi] / 10.0);
      auto lo = mid ? below(grid[*mid] / 10.0) : std::nullopt;
      if (!lo) {
        lo = positive.front();
        mid = positive[positive.size() / 2];
      }
      const double lower_growth = values[*mid] - values[*lo];
      const double upper_growth = values[hi] - values[*mid];
      report.class_KR_ok = upper_growth >= 0.5 * lower_growth;
      if (!report.class_KR_ok) report.witnesses.push_back({"KR", grid[*mid], grid[hi]});
    }
  }
  return report;
}

double infimum_on(const ComparatorFunction& phi, double lo, double hi, int points) {
  if (!(lo <= hi) || points < 2) throw Error("infimum_on needs lo <= hi and at least 2 points");
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double r = (i == points - 1) ? hi : lo + (hi - lo) * i / (points - 1);
    best = std::min(best, phi(r));
  }
  return best;
}

void SolutionSet::validate_against(const VectorField& f) const {
  for (const auto& p : points_) {
    const double residual = f(p).norm();
    if (!(residual <= kEquilibriumTolerance)) {
      throw Error(fmt::format("solution set point is not a zero of '{}' (residual {:.3e})",
                              f.name(), residual));
    }
  }
}

double distance_to_set(const Vector& theta, const SolutionSet& S) {
  if (S.empty()) throw Error("empty solution set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : S.points()) best = std::min(best, (theta - p).norm());
  return best;
}

std::vector<Vector> SampleGrid::directions() const {
  const auto d = center.size();
  std::vector<Vector> dirs;
  dirs.reserve(static_cast<std::size_t>(points_per_shell));
  for (int k = 0; k < points_per_shell; ++k) {
    if (d == 1) {
      dirs.push_back(Vector::Constant(1, k % 2 == 0 ? 1.0 : -1.0));
      continue;
    }
    CounterStream rng(rng_seed, static_cast<std::uint64_t>(k), 0x67726964ULL);
    Vector u(d);
    do {
      for (Eigen::Index i = 0; i < d; ++i) u(i) = rng.normal();
    } while (u.norm() == 0.0);
    dirs.push_back(u.normalized());
  }
  return dirs;
}

std::vector<Vector> SampleGrid::points() const {
  if (points_per_shell <= 0) throw Error("points_per_shell must be positive");
  const auto dirs = directions();
  std::vector<Vector> pts;
  pts.reserve(radii.size() * dirs.size());
  for (double r : radii) {
    if (!(r > 0.0)) throw Error("grid radii must be positive");
    for (const auto& u : dirs) pts.push_back(center + r * u);
  }
  return pts;
}

std::vector<double> geometric_radii(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 1)
    throw Error("geometric_radii needs 0 < lo <= hi, n >= 1");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double ratio = std::log(hi / lo);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i / (n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<Vector> scale_limit_probe(const VectorField& f, const Vector& theta,
                                      std::span<const double> r_values) {
  std::vector<Vector> out;
  out.reserve(r_values.size());
  for (double r : r_values) {
    if (!(r > 0.0)) throw Error("scale values must be positive");
    out.push_back(f(r * theta) / r);
  }
  return out;
}

}  // namespace salyap
