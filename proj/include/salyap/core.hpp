#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace salyap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base exception for all contract violations raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Residual bound for a declared zero of a field.
inline constexpr double kEquilibriumTolerance = 1e-10;

enum class Smoothness { C0, C1, C2 };

/**
 * A map f: R^d -> R^d together with what is known about it.
 *
 * The constructor enforces that a declared equilibrium is a zero of f to
 * within kEquilibriumTolerance. Lipschitz constants are declarations; use
 * sampled_lipschitz_ratio() to test them.
 */
class VectorField {
 public:
  using Map = std::function<Vector(const Vector&)>;

  VectorField(int dim, Map eval, std::optional<Vector> equilibrium = std::nullopt,
              std::optional<double> lipschitz = std::nullopt,
              Smoothness smoothness = Smoothness::C2, std::string name = {});

  Vector operator()(const Vector& theta) const { return eval_(theta); }

  int dim() const { return dim_; }
  const std::optional<Vector>& equilibrium() const { return equilibrium_; }
  const std::optional<double>& lipschitz() const { return lipschitz_; }
  Smoothness smoothness() const { return smoothness_; }
  const std::string& name() const { return name_; }

  /// Equilibrium if declared, otherwise the origin. Used as the reference
  /// point for state-scaled noise and distance statistics.
  Vector reference_point() const;

  /// Returns the declared equilibrium or throws.
  const Vector& require_equilibrium() const;

 private:
  int dim_;
  Map eval_;
  std::optional<Vector> equilibrium_;
  std::optional<double> lipschitz_;
  Smoothness smoothness_;
  std::string name_;
};

/// max over the given pairs of |f(x)-f(y)| / |x-y|; pairs with x == y are skipped.
double sampled_lipschitz_ratio(const VectorField& f,
                               std::span<const std::pair<Vector, Vector>> pairs);

enum class ComparatorClass { K, KR, B };

const char* to_string(ComparatorClass c);

/// Scalar comparator r -> phi(r) on the nonnegative reals.
struct ComparatorFunction {
  std::function<double(double)> eval;
  ComparatorClass declared_class = ComparatorClass::B;
  std::string name;

  double operator()(double r) const { return eval(r); }
};

struct ClassWitness {
  std::string check;  // "B", "K" or "KR"
  double r1 = 0.0;
  double r2 = 0.0;  // equal to r1 for single-point witnesses
};

struct ClassReport {
  bool class_B_ok = false;
  bool class_K_ok = false;
  bool class_KR_ok = false;
  std::vector<ClassWitness> witnesses;

  bool satisfies(ComparatorClass c) const;
};

/// 0 followed by a geometric grid from 1e-4 to 1e4 with 200 points.
std::vector<double> default_comparator_grid();

/**
 * Grid certification of comparator class membership.
 *
 * The grid must be sorted, nonnegative and contain 0. A report is a statement
 * about the grid only:
 *  - B:  phi(0) == 0 and phi > 0 at every positive grid point (so the
 *        infimum over every positive sub-interval of the grid is positive);
 *  - K:  phi(0) == 0 and strictly increasing along the grid;
 *  - KR: K, and the growth over the last decade of the grid is at least half
 *        the growth over the decade before it (so saturating comparators
 *        fail). Grids spanning under two decades compare halves instead.
 * Throws Error("not nonnegative") if phi is negative anywhere on the grid.
 */
ClassReport check_class_membership(const ComparatorFunction& phi, std::span<const double> grid);

/// Minimum of phi over a uniform grid on [lo, hi] with both endpoints included.
double infimum_on(const ComparatorFunction& phi, double lo, double hi, int points = 1001);

/// A finite list of zeros of a field.
class SolutionSet {
 public:
  SolutionSet() = default;
  explicit SolutionSet(std::vector<Vector> points) : points_(std::move(points)) {}

  static SolutionSet singleton(Vector p) { return SolutionSet({std::move(p)}); }

  const std::vector<Vector>& points() const { return points_; }
  bool empty() const { return points_.empty(); }

  /// Throws if some listed point is not a zero of f within kEquilibriumTolerance.
  void validate_against(const VectorField& f) const;

 private:
  std::vector<Vector> points_;
};

/// min over p in S of |theta - p|. Throws Error("empty solution set").
double distance_to_set(const Vector& theta, const SolutionSet& S);

/**
 * Deterministic sample of points on spherical shells around a center.
 *
 * Each shell reuses the same unit directions, so shells are scaled copies of
 * one another. In one dimension the directions alternate between +1 and -1.
 */
struct SampleGrid {
  Vector center;
  std::vector<double> radii;
  int points_per_shell = 1;
  std::uint64_t rng_seed = 0;

  std::vector<Vector> points() const;
  std::vector<Vector> directions() const;
};

/// n radii spaced geometrically from lo to hi inclusive.
std::vector<double> geometric_radii(double lo, double hi, int n);

/// f(r*theta)/r for each r.
std::vector<Vector> scale_limit_probe(const VectorField& f, const Vector& theta,
                                      std::span<const double> r_values);

}  // namespace salyap
