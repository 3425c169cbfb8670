#include "salyap/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "salyap/csv.hpp"
#include "salyap/parallel.hpp"

namespace salyap {

LyapunovFunction::LyapunovFunction(Vector theta_star, Value value, Gradient gradient,
                                   Hessian hessian, std::string name)
    : theta_star_(std::move(theta_star)),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)),
      name_(std::move(name)) {
  if (theta_star_.size() == 0) throw Error("Lyapunov function needs a nonempty equilibrium");
  if (!value_) throw Error("Lyapunov function has no value map");
}

Vector LyapunovFunction::gradient(const Vector& theta) const {
  return gradient_ ? gradient_(theta) : difference_gradient(theta);
}

Matrix LyapunovFunction::hessian(const Vector& theta) const {
  if (!hessian_) return difference_hessian(theta);
  const Matrix H = hessian_(theta);
  return 0.5 * (H + H.transpose());
}

Vector LyapunovFunction::difference_gradient(const Vector& theta) const {
  const double h = gradient_step.at((theta - theta_star_).norm());
  return central_gradient(value_, theta, h);
}

Matrix LyapunovFunction::difference_hessian(const Vector& theta) const {
  const double h = hessian_step.at((theta - theta_star_).norm());
  const Matrix H = central_hessian(value_, theta, h);
  return 0.5 * (H + H.transpose());
}

LyapunovFunction quadratic_lyapunov(const Matrix& P, const Vector& theta_star) {
  if (P.rows() != theta_star.size() || P.cols() != theta_star.size()) {
    throw Error("P must be d-by-d");
  }
  const Matrix S = 0.5 * (P + P.transpose());
  return LyapunovFunction(
      theta_star,
      [S, theta_star](const Vector& x) {
        const Vector d = x - theta_star;
        return d.dot(S * d);
      },
      [S, theta_star](const Vector& x) -> Vector { return 2.0 * S * (x - theta_star); },
      [S](const Vector&) -> Matrix { return 2.0 * S; }, "quadratic");
}

LyapunovFunction squared_norm_lyapunov(const Vector& theta_star) {
  const auto d = theta_star.size();
  return LyapunovFunction(
      theta_star, [theta_star](const Vector& x) { return (x - theta_star).squaredNorm(); },
      [theta_star](const Vector& x) -> Vector { return 2.0 * (x - theta_star); },
      [d](const Vector&) -> Matrix { return 2.0 * Matrix::Identity(d, d); }, "squared_norm");
}

LyapunovFunction quartic_lyapunov(const Vector& theta_star) {
  const auto d = theta_star.size();
  return LyapunovFunction(
      theta_star,
      [theta_star](const Vector& x) {
        const double s = (x - theta_star).squaredNorm();
        return s * s;
      },
      [theta_star](const Vector& x) -> Vector {
        const Vector dx = x - theta_star;
        return 4.0 * dx.squaredNorm() * dx;
      },
      [theta_star, d](const Vector& x) -> Matrix {
        const Vector dx = x - theta_star;
        return 4.0 * dx.squaredNorm() * Matrix::Identity(d, d) + 8.0 * dx * dx.transpose();
      },
      "quartic");
}

double vdot(const LyapunovFunction& V, const VectorField& f, const Vector& theta) {
  if (V.dim() != f.dim() || theta.size() != f.dim()) throw Error("dimension mismatch in vdot");
  return V.gradient(theta).dot(f(theta));
}

namespace {

double relative_slack(double lhs, double rhs) {
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  if (scale == 0.0) return 0.0;
  return (rhs - lhs) / scale;
}

struct PointMargin {
  double margin = std::numeric_limits<double>::infinity();
  double quantity = std::numeric_limits<double>::quiet_NaN();
  bool skipped = false;
};

// Evaluates every grid point (in parallel) and reduces in index order.
template <typename Fn>
CheckReport reduce_grid(std::string id, std::span<const Vector> grid, const CheckOptions& opts,
                        Fn&& evaluate) {
  std::vector<PointMargin> m(grid.size());
  const auto n = static_cast<long>(grid.size());
  parallel_for(n, [&](long i) {
    m[static_cast<std::size_t>(i)] = evaluate(grid[static_cast<std::size_t>(i)]);
  });

  CheckReport rep;
  rep.condition_id = std::move(id);
  rep.tolerance = opts.tolerance;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  rep.extreme_value = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].skipped) {
      ++rep.skipped;
      continue;
    }
    ++rep.samples;
    if (!std::isnan(m[i].quantity) &&
        (std::isnan(rep.extreme_value) || m[i].quantity > rep.extreme_value)) {
      rep.extreme_value = m[i].quantity;
    }
    // NaN margins count as failures.
    if (rep.worst_point.size() == 0 || std::isnan(m[i].margin) || m[i].margin < rep.worst_margin) {
      rep.worst_margin = m[i].margin;
      rep.worst_point = grid[i];
    }
  }
  if (rep.samples == 0) rep.worst_margin = 0.0;
  rep.ok = rep.worst_margin >= -opts.tolerance;
  return rep;
}

std::vector<double> distance_grid(std::span<const Vector> grid, const Vector& theta_star) {
  std::vector<double> r{0.0};
  for (const auto& p : grid) {
    const double d = (p - theta_star).norm();
    if (d > 0.0) r.push_back(d);
  }
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

}  // namespace

CheckReport check_sandwich(const LyapunovFunction& V, const Vector& theta_star, double a, double b,
                           std::span<const Vector> grid, const CheckOptions& opts) {
  if (!(a > 0.0) || !(a <= b)) throw Error("sandwich constants need 0 < a <= b");
  return reduce_grid("sandwich", grid, opts, [&](const Vector& x) {
    const double r2 = (x - theta_star).squaredNorm();
    const double v = V(x);
    PointMargin pm;
    pm.margin = std::min(relative_slack(a * r2, v), relative_slack(v, b * r2));
    pm.quantity = r2 > 0.0 ? v / r2 : std::numeric_limits<double>::quiet_NaN();
    return pm;
  });
}

CheckReport check_generalized_sandwich(const LyapunovFunction& V, const Vector& theta_star,
                                       const ComparatorFunction& eta, const ComparatorFunction& psi,
                                       std::span<const Vector> grid, const CheckOptions& opts) {
  const auto cgrid = default_comparator_grid();
  for (const auto* c : {&eta, &psi}) {
    if (c->declared_class != ComparatorClass::KR ||
        !check_class_membership(*c, cgrid).class_KR_ok) {
      throw Error(fmt::format("not class KR: comparator '{}'", c->name));
    }
  }
  return reduce_grid("generalized_sandwich", grid, opts, [&](const Vector& x) {
    const double r = (x - theta_star).norm();
    const double v = V(x);
    PointMargin pm;
    pm.margin = std::min(relative_slack(eta(r), v), relative_slack(v, psi(r)));
    return pm;
  });
}

CheckReport check_decay(const LyapunovFunction& V, const VectorField& f,
                        const ComparatorFunction& phi, const Vector& theta_star,
                        std::span<const Vector> grid, const CheckOptions& opts) {
  const auto radii = distance_grid(grid, theta_star);
  if (!check_class_membership(phi, radii).class_B_ok) {
    throw Error(fmt::format("not class B: comparator '{}' on the grid distances", phi.name));
  }
  return reduce_grid("decay", grid, opts, [&](const Vector& x) {
    const double r = (x - theta_star).norm();
    const double vd = vdot(V, f, x);
    PointMargin pm;
    pm.margin = relative_slack(vd, -phi(r));
    pm.quantity = r > 0.0 ? -vd / (r * r) : std::numeric_limits<double>::quiet_NaN();
    return pm;
  });
}

CheckReport check_hessian_bound(const LyapunovFunction& V, double M, std::span<const Vector> grid,
                                const CheckOptions& opts) {
  if (!(M > 0.0)) throw Error("Hessian bound needs M > 0");
  return reduce_grid("hessian_bound", grid, opts, [&](const Vector& x) {
    const double norm = symmetric_spectral_norm(V.hessian(x));
    PointMargin pm;
    pm.margin = relative_slack(norm, 2.0 * M);
    pm.quantity = norm;
    return pm;
  });
}

CheckReport check_F4(const VectorField& f, double K, std::span<const Vector> grid,
                     const CheckOptions& opts) {
  if (!(K > 0.0)) throw Error("field Hessian bound needs K > 0");
  const Vector& star = f.require_equilibrium();
  const DifferenceStep step{1e-3, 1e-8};
  auto eval = [&f](const Vector& y) { return f(y); };
  return reduce_grid("F4", grid, opts, [&](const Vector& x) {
    PointMargin pm;
    const double r = (x - star).norm();
    if (r <= kF4ExclusionRadius) {
      pm.skipped = true;
      return pm;
    }
    const auto hessians = central_hessians(eval, x, step.at(r));
    double worst = 0.0;
    for (const auto& H : hessians) worst = std::max(worst, symmetric_spectral_norm(H) * r);
    pm.margin = relative_slack(worst, K);
    pm.quantity = worst;
    return pm;
  });
}

CheckReport check_gradient_linear_bound(const LyapunovFunction& V, const Vector& theta_star,
                                        double L_prime, std::span<const Vector> grid,
                                        const CheckOptions& opts) {
  if (!(L_prime > 0.0)) throw Error("gradient bound needs L' > 0");
  return reduce_grid("gradient_linear_bound", grid, opts, [&](const Vector& x) {
    PointMargin pm;
    const double r = (x - theta_star).norm();
    if (r == 0.0) {
      pm.skipped = true;
      return pm;
    }
    const double ratio = V.gradient(x).norm() / r;
    pm.margin = relative_slack(ratio, L_prime);
    pm.quantity = ratio;
    return pm;
  });
}

double gradient_consistency(const LyapunovFunction& V, std::span<const Vector> grid) {
  double worst = 0.0;
  for (const auto& x : grid) {
    const Vector g = V.gradient(x);
    const Vector fd = V.difference_gradient(x);
    const double scale = std::max(g.norm(), fd.norm());
    if (scale == 0.0) continue;
    worst = std::max(worst, (g - fd).norm() / scale);
  }
  return worst;
}

LyapunovConstants fit_envelope_constants(const LyapunovFunction& V, const VectorField& f,
                                         std::span<const Vector> grid, double slack) {
  const Vector& star = V.theta_star();
  struct Sample {
    double v_ratio, decay_ratio, hess;
    // Extreme ratios of the local quadratic model; NaN when not positive.
    double curv_lo, curv_hi, decay_curv;
    bool valid;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Sample> s(grid.size());
  const auto n = static_cast<long>(grid.size());
  parallel_for(n, [&](long i) {
    const auto& x = grid[static_cast<std::size_t>(i)];
    const double r2 = (x - star).squaredNorm();
    auto& out = s[static_cast<std::size_t>(i)];
    out.valid = r2 > 0.0;
    const Matrix H = V.hessian(x);
    out.hess = symmetric_spectral_norm(H);
    out.curv_lo = out.curv_hi = out.decay_curv = nan;
    if (out.valid) {
      out.v_ratio = V(x) / r2;
      out.decay_ratio = -vdot(V, f, x) / r2;
      const Eigen::VectorXd lam =
          Eigen::SelfAdjointEigenSolver<Matrix>(H, Eigen::EigenvaluesOnly).eigenvalues();
      if (lam(0) > 0.0) out.curv_lo = 0.5 * lam(0);
      if (lam(lam.size() - 1) > 0.0) out.curv_hi = 0.5 * lam(lam.size() - 1);
      const Matrix J = central_jacobian(f, x, DifferenceStep{}.at(std::sqrt(r2)));
      const Matrix HJ = H * J;
      const Matrix D = -0.5 * (HJ + HJ.transpose());
      const double mu =
          Eigen::SelfAdjointEigenSolver<Matrix>(D, Eigen::EigenvaluesOnly).eigenvalues()(0);
      if (mu > 0.0) out.decay_curv = mu;
    }
  });
  double a = std::numeric_limits<double>::infinity(), b = 0.0;
  double c = std::numeric_limits<double>::infinity(), hmax = 0.0;
  for (const auto& e : s) {
    hmax = std::max(hmax, e.hess);
    if (!e.valid) continue;
    a = std::min(a, e.v_ratio);
    b = std::max(b, e.v_ratio);
    c = std::min(c, e.decay_ratio);
    if (!std::isnan(e.curv_lo)) a = std::min(a, e.curv_lo);
    if (!std::isnan(e.curv_hi)) b = std::max(b, e.curv_hi);
    if (!std::isnan(e.decay_curv)) c = std::min(c, e.decay_curv);
  }
  if (!std::isfinite(a)) throw Error("envelope fit needs grid points away from the equilibrium");
  LyapunovConstants k;
  k.a = a * (1.0 - slack);
  k.b = b * (1.0 + slack);
  k.c = c > 0.0 ? c * (1.0 - slack) : c * (1.0 + slack);
  k.M = 0.5 * hmax * (1.0 + slack);
  return k;
}

void write_check_reports_csv(std::ostream& os, std::span<const CheckReport> reports) {
  const std::string header[] = {"condition_id",  "ok",         "worst_margin", "samples", "skipped",
                                "extreme_value", "worst_point"};
  write_csv_row(os, header);
  for (const auto& r : reports) {
    std::string point;
    for (Eigen::Index i = 0; i < r.worst_point.size(); ++i) {
      if (i) point += ';';
      point += format_real(r.worst_point(i));
    }
    const std::string row[] = {r.condition_id,
                               r.ok ? "true" : "false",
                               format_real(r.worst_margin),
                               std::to_string(r.samples),
                               std::to_string(r.skipped),
                               format_real(r.extreme_value),
                               point};
    write_csv_row(os, row);
  }
}

void write_lyapunov_snapshot_csv(std::ostream& os, const LyapunovFunction& V,
                                 std::span<const Vector> grid) {
  std::vector<std::string> header;
  for (int i = 0; i < V.dim(); ++i) header.push_back(fmt::format("theta_{}", i + 1));
  header.insert(header.end(), {"V", "grad_norm", "lambda_max_hessian"});
  write_csv_row(os, header);

  struct Row {
    double v, g, lam;
  };
  std::vector<Row> rows(grid.size());
  const auto n = static_cast<long>(grid.size());
  parallel_for(n, [&](long i) {
    const auto& x = grid[static_cast<std::size_t>(i)];
    const Matrix H = V.hessian(x);
    rows[static_cast<std::size_t>(i)] = {
        V(x), V.gradient(x).norm(),
        Eigen::SelfAdjointEigenSolver<Matrix>(H, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff()};
  });
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index k = 0; k < grid[i].size(); ++k) row.push_back(format_real(grid[i](k)));
    row.push_back(format_real(rows[i].v));
    row.push_back(format_real(rows[i].g));
    row.push_back(format_real(rows[i].lam));
    write_csv_row(os, row);
  }
}

}  // namespace salyap
