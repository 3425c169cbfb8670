#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "salyap/lyapunov.hpp"
#include "salyap/registry.hpp"

using namespace salyap;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vector zero(int d) { return Vector::Zero(d); }

VectorField scalar_linear(double k) {
  return VectorField(1, [k](const Vector& x) { return Vector(k * x); }, vec({0.0}), std::abs(k));
}

std::vector<Vector> scalar_grid(std::initializer_list<double> xs) {
  std::vector<Vector> g;
  for (double x : xs) g.push_back(vec({x}));
  return g;
}

std::vector<Vector> shell_grid(const Vector& center, double lo, double hi, int shells, int per) {
  return SampleGrid{center, geometric_radii(lo, hi, shells), per, 42}.points();
}

LyapunovFunction scaled_square(double k) {
  return quadratic_lyapunov(Matrix::Constant(1, 1, k), zero(1));
}

}  // namespace

TEST(Vdot, SquaredNormAlongDecay) {
  EXPECT_NEAR(vdot(squared_norm_lyapunov(zero(1)), scalar_linear(-1.0), vec({3.0})), -18.0, 1e-12);
}

TEST(Vdot, SineMultiAtPi) {
  const auto f = make_field("sine_multi");
  EXPECT_NEAR(vdot(squared_norm_lyapunov(zero(1)), f, vec({std::numbers::pi})),
              -4.0 * std::numbers::pi, 1e-12);
}

TEST(Vdot, ScalarQuadraticMatchesNegativeQ) {
  EXPECT_NEAR(vdot(scaled_square(5.0), scalar_linear(-0.1), vec({1.0})), -1.0, 1e-12);
}

TEST(Sandwich, ExactSquareHasZeroMargin) {
  const auto g = scalar_grid({-3, -0.1, 0.5, 2, 100});
  const auto rep = check_sandwich(squared_norm_lyapunov(zero(1)), zero(1), 1.0, 1.0, g);
  EXPECT_TRUE(rep.ok);
  EXPECT_NEAR(rep.worst_margin, 0.0, 1e-15);
  EXPECT_EQ(rep.condition_id, "sandwich");
}

TEST(Sandwich, ScaledQuadratic) {
  const auto g = scalar_grid({-10, -1, 0.1, 1, 2, 10});
  EXPECT_TRUE(check_sandwich(scaled_square(0.632121), zero(1), 0.5, 0.7, g).ok);
}

TEST(Sandwich, QuarticFailsLowerBoundNearZero) {
  const auto g = scalar_grid({0.01, 1, 2});
  const auto rep = check_sandwich(quartic_lyapunov(zero(1)), zero(1), 0.1, 10, g);
  EXPECT_FALSE(rep.ok);
  EXPECT_NEAR(rep.worst_point(0), 0.01, 1e-15);
}

TEST(Sandwich, RejectsInvertedConstants) {
  const auto g = scalar_grid({1});
  EXPECT_THROW(check_sandwich(squared_norm_lyapunov(zero(1)), zero(1), 2.0, 1.0, g), Error);
}

TEST(GeneralizedSandwich, Cases) {
  const auto V = squared_norm_lyapunov(zero(1));
  const auto g = scalar_grid({-5, -1, 0.01, 0.3, 4});
  EXPECT_TRUE(check_generalized_sandwich(V, zero(1), make_comparator("quadratic:0.5"),
                                         make_comparator("quadratic:2"), g)
                  .ok);
  const auto eq = check_generalized_sandwich(V, zero(1), make_comparator("quadratic:1"),
                                             make_comparator("quadratic:1"), g);
  EXPECT_TRUE(eq.ok);
  EXPECT_NEAR(eq.worst_margin, 0.0, 1e-15);
  EXPECT_FALSE(check_generalized_sandwich(V, zero(1), make_comparator("quadratic:2"),
                                          make_comparator("quadratic:3"), g)
                   .ok);
}

TEST(GeneralizedSandwich, RejectsNonKR) {
  const auto g = scalar_grid({1});
  EXPECT_THROW(check_generalized_sandwich(squared_norm_lyapunov(zero(1)), zero(1),
                                          make_comparator("saturating_quadratic:1"),
                                          make_comparator("quadratic:2"), g),
               Error);
}

TEST(Decay, LinearWithQuadraticPhi) {
  const auto g = scalar_grid({-4, -0.5, 0.2, 1, 9});
  EXPECT_TRUE(check_decay(squared_norm_lyapunov(zero(1)), scalar_linear(-1.0),
                          make_comparator("quadratic:1"), zero(1), g)
                  .ok);
}

TEST(Decay, GladyshevFactorTwoSlack) {
  const auto g = shell_grid(zero(1), 1e-2, 1e3, 11, 2);
  const auto rep = check_decay(squared_norm_lyapunov(zero(1)), make_field("gladyshev_passive"),
                               make_comparator("saturating_quadratic:1"), zero(1), g);
  EXPECT_TRUE(rep.ok);
  EXPECT_NEAR(rep.worst_margin, 0.5, 1e-6);
}

TEST(Decay, ExampleOneClassBDecay) {
  // r exp(1 - r) underflows past r ~ 745, so the grid stops at 100.
  const auto g = shell_grid(zero(1), 1e-2, 1e2, 21, 2);
  const auto phi = make_comparator("r_example0");
  EXPECT_TRUE(
      check_decay(squared_norm_lyapunov(zero(1)), make_field("example_0_odd"), phi, zero(1), g).ok);
  std::vector<double> radii{0.0};
  for (double r : geometric_radii(1e-4, 1e2, 121)) radii.push_back(r);
  const auto cls = check_class_membership(phi, radii);
  EXPECT_TRUE(cls.class_B_ok);
  EXPECT_FALSE(cls.class_K_ok);
}

TEST(Decay, TooStrongPhiFails) {
  const auto g = scalar_grid({0.5, 1, 2});
  EXPECT_FALSE(check_decay(squared_norm_lyapunov(zero(1)), scalar_linear(-1.0),
                           make_comparator("quadratic:3"), zero(1), g)
                   .ok);
}

TEST(HessianBound, QuadraticTight) {
  Matrix P(2, 2);
  P << 2, 1, 1, 3;
  const double normP = Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().cwiseAbs().maxCoeff();
  const auto g = shell_grid(zero(2), 0.1, 100, 4, 6);
  const auto rep = check_hessian_bound(quadratic_lyapunov(P, zero(2)), normP, g);
  EXPECT_TRUE(rep.ok);
  EXPECT_NEAR(rep.worst_margin, 0.0, 1e-8);
  EXPECT_NEAR(rep.extreme_value, 2 * normP, 1e-8);
}

TEST(HessianBound, ScaledSquareValue) {
  const auto g = scalar_grid({0.3, 7});
  const auto rep = check_hessian_bound(scaled_square(0.632121), 0.632121, g);
  EXPECT_NEAR(rep.extreme_value, 1.264242, 1e-9);
}

TEST(HessianBound, QuarticFailsFarOut) {
  const auto g = shell_grid(zero(1), 1e-2, 1e3, 6, 2);
  EXPECT_FALSE(check_hessian_bound(quartic_lyapunov(zero(1)), 1e4, g).ok);
  EXPECT_THROW(check_hessian_bound(quartic_lyapunov(zero(1)), 0.0, g), Error);
}

TEST(F4, LinearFieldHasZeroProduct) {
  const auto f = make_field("linear", {{"A", "-1,0;0,-2"}, {"theta_star", "1,1"}});
  const auto rep = check_F4(f, 1e-3, shell_grid(vec({1, 1}), 1e-2, 1e2, 5, 4));
  EXPECT_TRUE(rep.ok);
}

TEST(F4, ExampleFiveBoundaryCase) {
  const auto f = make_field("f4_family", {{"r", "0.5"}});
  const auto g = shell_grid(zero(2), 1e-3, 1e4, 15, 8);
  const auto rep = check_F4(f, 10.0, g);
  EXPECT_TRUE(rep.ok);
  EXPECT_TRUE(std::isfinite(rep.extreme_value));
}

TEST(F4, ExampleFiveProductNonIncreasingBeyondOne) {
  const auto f = make_field("f4_family", {{"r", "0.5"}});
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {1.0, 10.0, 100.0, 1000.0}) {
    const auto g = shell_grid(zero(2), r, r, 1, 8);
    const double sup = check_F4(f, 1e9, g).extreme_value;
    EXPECT_LE(sup, prev * (1 + 1e-3));
    prev = sup;
  }
}

TEST(F4, ExampleFiveBelowThresholdFails) {
  const auto f = make_field("f4_family", {{"r", "0.25"}});
  EXPECT_FALSE(check_F4(f, 10.0, shell_grid(zero(2), 1e-3, 1e4, 15, 8)).ok);
}

TEST(F4, CubicGrowsUnbounded) {
  VectorField f(1, [](const Vector& x) { return Vector(x.array().cube()); }, vec({0.0}));
  const double K = 6.0;
  const auto rep = check_F4(f, K, scalar_grid({0.1, 0.5, std::sqrt(K / 6) + 1}));
  EXPECT_FALSE(rep.ok);
}

TEST(F4, SkipsEquilibrium) {
  const auto f = make_field("f4_family", {{"r", "0.5"}});
  const std::vector<Vector> g{zero(2), vec({1, 0})};
  const auto rep = check_F4(f, 10.0, g);
  EXPECT_EQ(rep.skipped, 1);
  EXPECT_EQ(rep.samples, 1);
}

TEST(GradientBound, Cases) {
  const auto g = scalar_grid({-3, 0.2, 5});
  const auto rep = check_gradient_linear_bound(scaled_square(0.632121), zero(1), 1.3, g);
  EXPECT_TRUE(rep.ok);
  EXPECT_NEAR(rep.extreme_value, 1.264242, 1e-9);
  EXPECT_FALSE(
      check_gradient_linear_bound(quartic_lyapunov(zero(1)), zero(1), 100, scalar_grid({10})).ok);
}

TEST(GradientBound, QuadraticBelowTwiceNorm) {
  Matrix P(2, 2);
  P << 4, 1, 1, 2;
  const double normP = Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().maxCoeff();
  const auto g = shell_grid(zero(2), 0.1, 10, 3, 8);
  EXPECT_TRUE(check_gradient_linear_bound(quadratic_lyapunov(P, zero(2)), zero(2),
                                          2 * normP * (1 + 1e-9), g)
                  .ok);
}

TEST(Gradient, AnalyticMatchesDifferences) {
  const auto g = shell_grid(vec({1, -1}), 0.1, 10, 4, 6);
  Matrix P(2, 2);
  P << 3, 0.5, 0.5, 1;
  EXPECT_LE(gradient_consistency(quadratic_lyapunov(P, vec({1, -1})), g), 1e-4);
  EXPECT_LE(gradient_consistency(quartic_lyapunov(vec({1, -1})), g), 1e-4);
}

TEST(LyapunovEquation, ScalarCase) {
  const Matrix P =
      solve_lyapunov_matrix_equation(Matrix::Constant(1, 1, -0.1), Matrix::Identity(1, 1));
  EXPECT_NEAR(P(0, 0), 5.0, 1e-12);
}

TEST(LyapunovEquation, NegativeIdentity) {
  const Matrix P = solve_lyapunov_matrix_equation(-Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  EXPECT_TRUE(P.isApprox(0.5 * Matrix::Identity(2, 2), 1e-12));
}

TEST(LyapunovEquation, ValueEvaluationMatrix) {
  Matrix A(2, 2);
  A << 0.5, 0.5, 0.5, 0.5;
  const Matrix B = 0.9 * A - Matrix::Identity(2, 2);
  const Matrix Q = Matrix::Identity(2, 2);
  const Matrix P = solve_lyapunov_matrix_equation(B, Q);
  EXPECT_LE((P * B + B.transpose() * P + Q).norm(), 1e-8);
  EXPECT_TRUE(P.isApprox(P.transpose()));
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().minCoeff(), 0.0);
}

TEST(LyapunovEquation, NotHurwitz) {
  Matrix B(2, 2);
  B << -1, 0, 0, 0.1;
  EXPECT_THROW(solve_lyapunov_matrix_equation(B, Matrix::Identity(2, 2)), Error);
}

TEST(LyapunovEquation, DecayBoundedByQ) {
  const auto f = make_field("value_eval");
  const auto V = make_lyapunov("lyapunov_equation", {}, f);
  const auto g = shell_grid(f.reference_point(), 0.1, 100, 4, 8);
  for (const auto& x : g) {
    const double d2 = (x - f.reference_point()).squaredNorm();
    EXPECT_LE(vdot(V, f, x), -d2 * (1 - 1e-6));
  }
}

TEST(FitEnvelope, ScaledSquare) {
  const auto g = scalar_grid({-3, 0.1, 2});
  const auto k = fit_envelope_constants(scaled_square(2.0), scalar_linear(-1.0), g, 0.0);
  EXPECT_NEAR(k.a, 2.0, 1e-12);
  EXPECT_NEAR(k.b, 2.0, 1e-12);
  EXPECT_NEAR(k.c, 4.0, 1e-9);
  EXPECT_NEAR(k.M, 2.0, 1e-9);
}

TEST(Reports, CsvHasHeaderAndRows) {
  const auto g = scalar_grid({1, 2});
  const std::vector<CheckReport> reps{
      check_sandwich(squared_norm_lyapunov(zero(1)), zero(1), 0.5, 2, g)};
  std::ostringstream os;
  write_check_reports_csv(os, reps);
  EXPECT_EQ(os.str().rfind("condition_id,ok,worst_margin", 0), 0u);
  EXPECT_NE(os.str().find("\nsandwich,true"), std::string::npos);
}

TEST(FitEnvelope, AnisotropicQuadraticOnSparseDirections) {
  Matrix P(2, 2);
  P << 1.0, 0.0, 0.0, 0.1;
  const auto V = quadratic_lyapunov(P, zero(2));
  const auto f = make_field("linear", {{"A", "-1,0;0,-3"}, {"theta_star", "0,0"}});
  const std::vector<Vector> g{vec({1, 0.05}), vec({-2, 0.3})};
  const auto k = fit_envelope_constants(V, f, g, 0.0);
  EXPECT_NEAR(k.a, 0.1, 1e-6);
  EXPECT_NEAR(k.b, 1.0, 1e-6);
  EXPECT_NEAR(k.c, 0.6, 1e-6);
  const auto dense = SampleGrid{zero(2), geometric_radii(0.1, 10, 3), 64, 5}.points();
  EXPECT_TRUE(check_sandwich(V, zero(2), k.a, k.b, dense).ok);
}
