#include <gtest/gtest.h>

#include <cmath>

#include "salyap/converse.hpp"
#include "salyap/registry.hpp"

using namespace salyap;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

VectorField scalar_decay() {
  return VectorField(1, [](const Vector& x) { return Vector(-x); }, vec({0.0}), 1.0);
}

constexpr double kScalarCoefficient = 0.6321205588285577;  // 1 - exp(-1)

}  // namespace

TEST(ConverseParams, HorizonRule) {
  ConverseParams p{0.5, 1.0, 1.0, 1.0, 100};
  EXPECT_NO_THROW(p.validate());
  p.mu = 2.0;
  p.T = 0.5 * std::log(2.0);
  EXPECT_THROW(p.validate(), Error);
  p.T = std::log(2.0) / 0.5;
  EXPECT_NO_THROW(p.validate());
  p.kappa = 1.0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(ConverseParams, Defaults) {
  const auto p = default_converse_params(2.0, 1.0);
  EXPECT_DOUBLE_EQ(p.kappa, 0.5);
  EXPECT_NEAR(p.T, std::log(2.0) / 0.5 + 1.0, 1e-15);
  EXPECT_NO_THROW(p.validate());
}

TEST(Converse, ScalarClosedForm) {
  const ConverseParams p{0.5, 1.0, 1.0, 1.0, 2000};
  EXPECT_NEAR(converse_value(scalar_decay(), vec({0.0}), p, vec({2.0})), 2.5284822353142307, 1e-6);
  for (double x : {0.1, 1.0, 10.0}) {
    const double v = converse_value(scalar_decay(), vec({0.0}), p, vec({x}));
    EXPECT_NEAR(v / (kScalarCoefficient * x * x), 1.0, 1e-9);
  }
}

TEST(Converse, ScalarDecayRate) {
  const ConverseParams p{0.5, 1.0, 1.0, 1.0, 2000};
  const auto V = construct_converse_V(scalar_decay(), vec({0.0}), p);
  for (double x : {0.3, 1.0, 4.0}) {
    EXPECT_NEAR(vdot(V, scalar_decay(), vec({x})), -2 * kScalarCoefficient * x * x, 1e-5 * x * x);
  }
  const std::vector<Vector> g{vec({-2}), vec({0.5}), vec({3})};
  EXPECT_TRUE(check_decay(V, scalar_decay(), make_comparator("quadratic:1.2"), vec({0.0}), g).ok);
}

TEST(Converse, FittedConstantsSatisfyCheckers) {
  const auto f = make_field("linear", {{"A", "-1,0;0,-2"}, {"theta_star", "1,1"}});
  const Vector star = vec({1, 1});
  const auto V = construct_converse_V(f, star, ConverseParams{0.4, 2.0, 1.0, 1.0, 1000});
  ASSERT_TRUE(V.constants.has_value());
  const auto k = *V.constants;
  EXPECT_GT(k.a, 0.0);
  EXPECT_GT(k.c, 0.0);
  EXPECT_TRUE(std::isfinite(k.M));
  const auto g = SampleGrid{star, geometric_radii(1e-2, 1e2, 5), 6, 99}.points();
  EXPECT_EQ(V(star), 0.0);
  for (const auto& x : g) EXPECT_GT(V(x), 0.0);
  EXPECT_TRUE(check_sandwich(V, star, k.a, k.b, g).ok);
  const ComparatorFunction phi{[c = k.c](double r) { return c * r * r; }, ComparatorClass::KR,
                               "fitted"};
  EXPECT_TRUE(check_decay(V, f, phi, star, g).ok);
  EXPECT_TRUE(check_hessian_bound(V, k.M, g).ok);
}

TEST(Converse, LinearFieldGivesQuadraticV) {
  const auto f = make_field("linear", {{"A", "-1,0;0,-2"}, {"theta_star", "1,1"}});
  const Vector star = vec({1, 1});
  ConverseOptions opts;
  opts.fit_constants = false;
  const auto V = construct_converse_V(f, star, ConverseParams{0.4, 2.0, 1.0, 1.0, 1000}, opts);
  const Matrix H0 = V.hessian(vec({2, 1}));
  for (const auto& x : {vec({1.5, 0.2}), vec({-3, 4}), vec({11, -20})}) {
    EXPECT_LE((V.hessian(x) - H0).norm() / H0.norm(), 1e-5);
  }
}

TEST(Converse, MonotoneInHorizon) {
  const auto f = make_field("linear", {{"A", "-1,1;0,-2"}, {"theta_star", "0,0"}});
  const Vector star = vec({0, 0});
  for (const auto& x : {vec({1, 0}), vec({-2, 3})}) {
    double prev = 0.0;
    for (double T : {0.5, 1.0, 2.0, 4.0}) {
      const double v = converse_value(f, star, ConverseParams{0.5, T, 1.0, 1.0, 400}, x);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(Converse, HorizonTooShortIsRejected) {
  EXPECT_THROW(
      construct_converse_V(scalar_decay(), vec({0.0}), ConverseParams{0.5, 0.1, 3.0, 1.0, 100}),
      Error);
}
