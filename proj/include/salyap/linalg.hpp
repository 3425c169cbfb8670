#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace salyap {

/// Power-iteration settings for spectral norms of symmetric matrices.
struct PowerIterationOptions {
  int max_iterations = 200;
  double tolerance = 1e-10;
};

/**
 * Spectral norm of the symmetric part of a square matrix.
 *
 * Symmetrizes, then runs power iteration on the result. For a symmetric matrix
 * the largest singular value equals the largest |eigenvalue|, and |S v| for a
 * unit v converges to it even when +lambda and -lambda are both present.
 */
template <typename Derived>
double symmetric_spectral_norm(const Eigen::MatrixBase<Derived>& m,
                               const PowerIterationOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> s = (m + m.transpose()) / Scalar(2);
  const auto n = s.rows();
  if (n == 0) return 0.0;
  if (n == 1) return static_cast<double>(std::abs(s(0, 0)));

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Scalar(1) + Scalar(i + 1) / Scalar(7 * n);
  v.normalize();

  Scalar estimate = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w = s * v;
    const Scalar norm = w.norm();
    if (norm == Scalar(0)) {
      // v landed in the null space; the matrix may still be nonzero.
      if (s.norm() == Scalar(0)) return 0.0;
      v.setZero();
      v(it % n) = Scalar(1);
      continue;
    }
    // Two steps per iteration so that a +/- eigenvalue pair cannot make the
    // iterate oscillate between the two eigenvectors.
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> u = s * (w / norm);
    const Scalar next = std::sqrt(u.norm() * norm);
    v = u.normalized();
    if (std::abs(next - estimate) <= opts.tolerance * std::max(Scalar(1), next)) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  return static_cast<double>(estimate);
}

/// Central-difference step h = max(relative * scale, floor).
struct DifferenceStep {
  double relative = 1e-4;
  double floor = 1e-6;

  double at(double scale) const { return std::max(relative * scale, floor); }
};

/// Central-difference gradient of a scalar function.
template <typename Fn, typename Derived>
Eigen::VectorXd central_gradient(const Fn& fn, const Eigen::MatrixBase<Derived>& x, double h) {
  const auto n = x.size();
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double xj = xp(j);
    xp(j) = xj + h;
    const double fp = fn(xp);
    xp(j) = xj - h;
    const double fm = fn(xp);
    xp(j) = xj;
    g(j) = (fp - fm) / (2.0 * h);
  }
  return g;
}

/**
 * Central-difference Hessians of every component of a vector-valued function.
 *
 * fn maps an Eigen vector to an Eigen vector of size m; the result holds m
 * symmetric n-by-n matrices. Diagonal entries use the three-point stencil,
 * off-diagonal entries the four-point cross stencil.
 */
template <typename Fn, typename Derived>
std::vector<Eigen::MatrixXd> central_hessians(const Fn& fn, const Eigen::MatrixBase<Derived>& x,
                                              double h) {
  const auto n = x.size();
  Eigen::VectorXd xp = x;
  const Eigen::VectorXd f0 = fn(xp);
  const auto m = f0.size();
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(n, n));
  const double h2 = h * h;

  for (Eigen::Index j = 0; j < n; ++j) {
    const double xj = xp(j);
    xp(j) = xj + h;
    const Eigen::VectorXd fp = fn(xp);
    xp(j) = xj - h;
    const Eigen::VectorXd fm = fn(xp);
    xp(j) = xj;
    const Eigen::VectorXd d2 = (fp - 2.0 * f0 + fm) / h2;
    for (Eigen::Index i = 0; i < m; ++i) out[static_cast<std::size_t>(i)](j, j) = d2(i);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j + 1; k < n; ++k) {
      const double xj = xp(j);
      const double xk = xp(k);
      xp(j) = xj + h;
      xp(k) = xk + h;
      const Eigen::VectorXd fpp = fn(xp);
      xp(k) = xk - h;
      const Eigen::VectorXd fpm = fn(xp);
      xp(j) = xj - h;
      const Eigen::VectorXd fmm = fn(xp);
      xp(k) = xk + h;
      const Eigen::VectorXd fmp = fn(xp);
      xp(j) = xj;
      xp(k) = xk;
      const Eigen::VectorXd cross = (fpp - fpm - fmp + fmm) / (4.0 * h2);
      for (Eigen::Index i = 0; i < m; ++i) {
        auto& H = out[static_cast<std::size_t>(i)];
        H(j, k) = cross(i);
        H(k, j) = cross(i);
      }
    }
  }
  return out;
}

/// Central-difference Hessian of a scalar function.
template <typename Fn, typename Derived>
Eigen::MatrixXd central_hessian(const Fn& fn, const Eigen::MatrixBase<Derived>& x, double h) {
  auto wrapped = [&fn](const Eigen::VectorXd& y) {
    Eigen::VectorXd v(1);
    v(0) = fn(y);
    return v;
  };
  return central_hessians(wrapped, x, h).front();
}

/// Central-difference Jacobian of a vector-valued function.
template <typename Fn, typename Derived>
Eigen::MatrixXd central_jacobian(const Fn& fn, const Eigen::MatrixBase<Derived>& x, double h) {
  const auto n = x.size();
  Eigen::VectorXd xp = x;
  Eigen::MatrixXd J;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double xj = xp(j);
    xp(j) = xj + h;
    const Eigen::VectorXd fp = fn(xp);
    xp(j) = xj - h;
    const Eigen::VectorXd fm = fn(xp);
    xp(j) = xj;
    if (j == 0) J.resize(fp.size(), n);
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

}  // namespace salyap
