#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "salyap/core.hpp"
#include "salyap/registry.hpp"

using namespace salyap;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

ComparatorFunction identity_comparator() {
  return {[](double r) { return r; }, ComparatorClass::KR, "identity"};
}

}  // namespace

TEST(DistanceToSet, PointInSetIsZero) {
  EXPECT_EQ(distance_to_set(vec({0.0}), SolutionSet::singleton(vec({0.0}))), 0.0);
}

TEST(DistanceToSet, MidpointBetweenPeriodicZeros) {
  std::vector<Vector> pts;
  for (int n = -2; n <= 2; ++n) pts.push_back(vec({2.0 * std::numbers::pi * n}));
  EXPECT_NEAR(distance_to_set(vec({3.0 * std::numbers::pi}), SolutionSet(pts)), std::numbers::pi,
              1e-12);
}

TEST(DistanceToSet, NearestOfTwoCandidates) {
  SolutionSet S({vec({0, 0}), vec({3, 3})});
  EXPECT_NEAR(distance_to_set(vec({1, 1}), S), std::sqrt(2.0), 1e-15);
}

TEST(DistanceToSet, EmptySetThrows) {
  EXPECT_THROW(distance_to_set(vec({1.0}), SolutionSet{}), Error);
}

TEST(DistanceToSet, NonnegativeAndOneLipschitz) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n01;
  SolutionSet S({vec({0, 0, 0}), vec({1, -2, 0.5}), vec({-3, 1, 2})});
  for (int k = 0; k < 500; ++k) {
    Vector x(3), y(3);
    for (int i = 0; i < 3; ++i) {
      x(i) = 3 * n01(gen);
      y(i) = 3 * n01(gen);
    }
    const double dx = distance_to_set(x, S);
    const double dy = distance_to_set(y, S);
    EXPECT_GE(dx, 0.0);
    EXPECT_LE(std::abs(dx - dy), (x - y).norm() + 1e-12);
  }
  for (const auto& p : S.points()) EXPECT_EQ(distance_to_set(p, S), 0.0);
}

TEST(ClassMembership, IdentityIsKR) {
  const std::vector<double> grid{0, 0.5, 1, 2};
  const auto rep = check_class_membership(identity_comparator(), grid);
  EXPECT_TRUE(rep.class_B_ok);
  EXPECT_TRUE(rep.class_K_ok);
  EXPECT_TRUE(rep.class_KR_ok);
}

TEST(ClassMembership, ExampleZeroIsBNotK) {
  const ComparatorFunction phi{example0_phi, ComparatorClass::B, "example0"};
  const std::vector<double> grid{0, 0.5, 1, 2, 5};
  const auto rep = check_class_membership(phi, grid);
  EXPECT_TRUE(rep.class_B_ok);
  EXPECT_FALSE(rep.class_K_ok);
  bool found = false;
  for (const auto& w : rep.witnesses) {
    if (w.check == "K" && w.r1 == 1.0 && w.r2 == 2.0) found = true;
  }
  EXPECT_TRUE(found);
}

TEST(ClassMembership, NegativeValueThrows) {
  const ComparatorFunction phi{[](double r) { return r - 1.0; }, ComparatorClass::K, "shifted"};
  const std::vector<double> grid{0, 1, 2};
  EXPECT_THROW(check_class_membership(phi, grid), Error);
}

TEST(ClassMembership, KImpliesBOnDefaultGrid) {
  const auto grid = default_comparator_grid();
  for (const char* spec : {"linear:1", "quadratic:2", "saturating_quadratic:1", "example0",
                           "r_example0", "quartic:0.5"}) {
    const auto rep = check_class_membership(make_comparator(spec), grid);
    if (rep.class_K_ok) {
      EXPECT_TRUE(rep.class_B_ok) << spec;
    }
    if (rep.class_KR_ok) {
      EXPECT_TRUE(rep.class_K_ok) << spec;
    }
  }
}

TEST(ClassMembership, SaturatingQuadraticIsKButNotKR) {
  const auto rep =
      check_class_membership(make_comparator("saturating_quadratic:1"), default_comparator_grid());
  EXPECT_TRUE(rep.class_K_ok);
  EXPECT_FALSE(rep.class_KR_ok);
}

TEST(Infimum, ExampleZeroOnHalfToTwo) {
  const ComparatorFunction phi{example0_phi, ComparatorClass::B, "example0"};
  EXPECT_NEAR(infimum_on(phi, 0.5, 2.0), std::exp(-1.0), 1e-6);
}

TEST(ScaleLimitProbe, LinearScalarIsConstant) {
  VectorField f(1, [](const Vector& x) { return Vector(-x); });
  const std::vector<double> rs{1, 10, 100};
  for (const auto& v : scale_limit_probe(f, vec({1.0}), rs)) EXPECT_EQ(v(0), -1.0);
}

TEST(ScaleLimitProbe, GladyshevVanishes) {
  const auto f = make_field("gladyshev_passive");
  const std::vector<double> rs{1, 10, 100};
  const auto out = scale_limit_probe(f, vec({1.0}), rs);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_NEAR(out[i](0), -1.0 / (1.0 + rs[i] * rs[i]), 1e-15);
  }
}

TEST(ScaleLimitProbe, LinearPlanarIsExact) {
  VectorField f(2, [](const Vector& x) { return Vector(-x); });
  const std::vector<double> rs{0.5, 3, 1e4};
  for (const auto& v : scale_limit_probe(f, vec({1, 0}), rs)) {
    EXPECT_EQ(v(0), -1.0);
    EXPECT_EQ(v(1), 0.0);
  }
}

TEST(VectorField, RejectsFalseEquilibrium) {
  EXPECT_THROW(VectorField(1, [](const Vector& x) { return Vector(-x); }, vec({1.0})), Error);
}

TEST(VectorField, SampledLipschitzOfLinear) {
  VectorField f(2, [](const Vector& x) { return Vector(2.0 * x); });
  std::vector<std::pair<Vector, Vector>> pairs{{vec({0, 0}), vec({1, 1})},
                                               {vec({1, 0}), vec({1, 0})}};
  EXPECT_NEAR(sampled_lipschitz_ratio(f, pairs), 2.0, 1e-14);
}

TEST(SolutionSet, SineMultiZerosValidate) {
  const auto f = make_field("sine_multi");
  const auto S = solution_set_for("sine_multi", f);
  EXPECT_EQ(S.points().size(), 101u);
  EXPECT_NO_THROW(S.validate_against(f));
}

TEST(SampleGrid, DeterministicAndScaled) {
  SampleGrid g{vec({1, 1}), {1.0, 10.0}, 4, 5};
  const auto a = g.points();
  const auto b = g.points();
  ASSERT_EQ(a.size(), 8u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR((a[4 + i] - g.center).norm(), 10.0, 1e-12);
    EXPECT_TRUE(((a[4 + i] - g.center) - 10.0 * (a[i] - g.center)).norm() < 1e-12);
  }
}

TEST(SampleGrid, GeometricRadii) {
  const auto r = geometric_radii(1e-2, 1e2, 5);
  ASSERT_EQ(r.size(), 5u);
  EXPECT_DOUBLE_EQ(r.front(), 1e-2);
  EXPECT_DOUBLE_EQ(r.back(), 1e2);
  EXPECT_NEAR(r[2], 1.0, 1e-12);
}
