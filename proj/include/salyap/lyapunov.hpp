#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <Eigen/Dense>

#include "salyap/core.hpp"
#include "salyap/linalg.hpp"

namespace salyap {

/// Envelope constants: a|d|^2 <= V <= b|d|^2, Vdot <= -c|d|^2, |Hess V| <= 2M.
struct LyapunovConstants {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double M = 0.0;
};

/**
 * Scalar function V with gradient and Hessian access.
 *
 * Gradient and Hessian are analytic when supplied, otherwise central
 * differences with steps scaled to |theta - theta*|.
 */
class LyapunovFunction {
 public:
  using Value = std::function<double(const Vector&)>;
  using Gradient = std::function<Vector(const Vector&)>;
  using Hessian = std::function<Matrix(const Vector&)>;

  LyapunovFunction(Vector theta_star, Value value, Gradient gradient = {}, Hessian hessian = {},
                   std::string name = {});

  double operator()(const Vector& theta) const { return value_(theta); }
  Vector gradient(const Vector& theta) const;
  /// Always symmetric.
  Matrix hessian(const Vector& theta) const;

  Vector difference_gradient(const Vector& theta) const;
  Matrix difference_hessian(const Vector& theta) const;

  bool has_analytic_gradient() const { return static_cast<bool>(gradient_); }
  bool has_analytic_hessian() const { return static_cast<bool>(hessian_); }

  int dim() const { return static_cast<int>(theta_star_.size()); }
  const Vector& theta_star() const { return theta_star_; }
  const std::string& name() const { return name_; }

  DifferenceStep gradient_step{1e-4, 1e-6};
  DifferenceStep hessian_step{1e-4, 1e-6};
  std::optional<LyapunovConstants> constants;

 private:
  Vector theta_star_;
  Value value_;
  Gradient gradient_;
  Hessian hessian_;
  std::string name_;
};

/// V(theta) = (theta-theta*)' P (theta-theta*), P symmetrized.
LyapunovFunction quadratic_lyapunov(const Matrix& P, const Vector& theta_star);
/// V(theta) = |theta - theta*|^2.
LyapunovFunction squared_norm_lyapunov(const Vector& theta_star);
/// V(theta) = |theta - theta*|^4; its Hessian grows without bound.
LyapunovFunction quartic_lyapunov(const Vector& theta_star);

/// Derivative of V along the field: <grad V(theta), f(theta)>.
double vdot(const LyapunovFunction& V, const VectorField& f, const Vector& theta);

/// Outcome of a grid check. Margins are relative slacks (rhs - lhs) / max(|lhs|, |rhs|)
/// of the checked inequality lhs <= rhs, so they are scale-free and lie in [-2, 2].
struct CheckReport {
  std::string condition_id;
  bool ok = false;
  Vector worst_point;
  double worst_margin = 0.0;
  int samples = 0;
  int skipped = 0;
  double tolerance = 0.0;
  /// Largest value of the bounded quantity seen on the grid (e.g. the Hessian
  /// norm, or the gradient ratio); NaN where not meaningful.
  double extreme_value = 0.0;
};

struct CheckOptions {
  double tolerance = 1e-9;
};

/// a|d|^2 <= V <= b|d|^2 on the grid. Throws unless 0 < a <= b.
CheckReport check_sandwich(const LyapunovFunction& V, const Vector& theta_star, double a, double b,
                           std::span<const Vector> grid, const CheckOptions& opts = {});

/// eta(|d|) <= V <= psi(|d|) on the grid; eta and psi must certify as class KR
/// on the default comparator grid, otherwise Error("not class KR").
CheckReport check_generalized_sandwich(const LyapunovFunction& V, const Vector& theta_star,
                                       const ComparatorFunction& eta, const ComparatorFunction& psi,
                                       std::span<const Vector> grid, const CheckOptions& opts = {});

/// Vdot <= -phi(|d|) on the grid; phi must certify as class B on the distances
/// present in the grid, otherwise Error("not class B").
CheckReport check_decay(const LyapunovFunction& V, const VectorField& f,
                        const ComparatorFunction& phi, const Vector& theta_star,
                        std::span<const Vector> grid, const CheckOptions& opts = {});

/// Spectral norm of Hess V <= 2M on the grid. Throws unless M > 0.
CheckReport check_hessian_bound(const LyapunovFunction& V, double M, std::span<const Vector> grid,
                                const CheckOptions& opts = {});

/// Radius of the ball around theta* that check_F4 skips.
inline constexpr double kF4ExclusionRadius = 1e-6;

/**
 * |Hess f_i(theta)| * |theta - theta*| <= K for every component i.
 *
 * Component Hessians come from central differences of f. Grid points within
 * kF4ExclusionRadius of theta* are skipped and counted in `skipped`.
 */
CheckReport check_F4(const VectorField& f, double K, std::span<const Vector> grid,
                     const CheckOptions& opts = {});

/// |grad V(theta)| <= L' |theta - theta*|; the equilibrium itself is skipped.
CheckReport check_gradient_linear_bound(const LyapunovFunction& V, const Vector& theta_star,
                                        double L_prime, std::span<const Vector> grid,
                                        const CheckOptions& opts = {});

/// Largest relative disagreement between the analytic and difference gradients.
double gradient_consistency(const LyapunovFunction& V, std::span<const Vector> grid);

/**
 * Empirical envelope constants of V on a grid, with multiplicative slack.
 *
 * a and c are the smallest observed ratios V/|d|^2 and -Vdot/|d|^2 shrunk by
 * (1 - slack); b and M the largest observed ratios grown by (1 + slack).
 * Sparse directions would miss the extremes of an anisotropic V, so each
 * point also contributes its local quadratic model: half the extreme
 * eigenvalues of Hess V for a and b, and the smallest eigenvalue of
 * -sym(Hess V * Df) for c. These only enter when positive, so they can only
 * widen the envelope. Points at the equilibrium are ignored.
 */
LyapunovConstants fit_envelope_constants(const LyapunovFunction& V, const VectorField& f,
                                         std::span<const Vector> grid, double slack = 0.01);

/// One row per report: condition_id,ok,worst_margin,samples,skipped,extreme_value,worst_point.
void write_check_reports_csv(std::ostream& os, std::span<const CheckReport> reports);

/// Snapshot table: theta_1..theta_d,V,grad_norm,lambda_max_hessian.
void write_lyapunov_snapshot_csv(std::ostream& os, const LyapunovFunction& V,
                                 std::span<const Vector> grid);

/// Relative residual below which a Lyapunov-equation solution is accepted.
inline constexpr double kLyapunovResidualTolerance = 1e-8;

/**
 * Solves P B + B' P = -Q for Hurwitz B and symmetric positive definite Q.
 *
 * Vectorizes the equation into the d^2-by-d^2 system
 * (I kron B' + B' kron I) vec(P) = -vec(Q) and solves it with a full-pivot LU,
 * which is fine for d up to about 50. Throws Error("not Hurwitz") if some
 * eigenvalue of B has real part >= -1e-10.
 */
template <typename DerivedB, typename DerivedQ>
Matrix solve_lyapunov_matrix_equation(const Eigen::MatrixBase<DerivedB>& B,
                                      const Eigen::MatrixBase<DerivedQ>& Q) {
  const Eigen::Index d = B.rows();
  if (B.cols() != d || Q.rows() != d || Q.cols() != d) {
    throw Error("B and Q must be square and of equal size");
  }
  if (d > 50) throw Error("vectorized Lyapunov solve is limited to d <= 50");
  const Matrix Bm = B;
  const Matrix Qm = Q;
  if (!(Qm - Qm.transpose()).isZero(1e-10 * std::max(1.0, Qm.norm()))) {
    throw Error("Q must be symmetric");
  }
  if (Eigen::LLT<Matrix>(Qm).info() != Eigen::Success) throw Error("Q must be positive definite");

  const Eigen::VectorXcd eig = Eigen::EigenSolver<Matrix>(Bm, false).eigenvalues();
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig(i).real() >= -1e-10) {
      throw Error(fmt::format("not Hurwitz: eigenvalue {}{:+}i", eig(i).real(), eig(i).imag()));
    }
  }

  // vec is column-major: vec(P)(i + j d) = P(i, j).
  const Matrix Bt = Bm.transpose();
  Matrix K = Matrix::Zero(d * d, d * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const Eigen::Index row = i + j * d;
      // (B' P)(i, j) = sum_k B(k, i) P(k, j)
      for (Eigen::Index k = 0; k < d; ++k) K(row, k + j * d) += Bt(i, k);
      // (P B)(i, j) = sum_k P(i, k) B(k, j)
      for (Eigen::Index k = 0; k < d; ++k) K(row, i + k * d) += Bm(k, j);
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Qm.data(), d * d);
  const Eigen::VectorXd x = K.fullPivLu().solve(rhs);
  Matrix P = Eigen::Map<const Matrix>(x.data(), d, d);
  P = (0.5 * (P + P.transpose())).eval();

  const double residual = (P * Bm + Bt * P + Qm).norm();
  if (!(residual <= kLyapunovResidualTolerance * Qm.norm())) {
    throw Error(fmt::format("Lyapunov equation residual {:.3e} exceeds tolerance", residual));
  }
  return P;
}

}  // namespace salyap
