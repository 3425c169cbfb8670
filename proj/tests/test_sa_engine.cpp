#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "salyap/registry.hpp"
#include "salyap/rng.hpp"
#include "salyap/sa_engine.hpp"

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

NoiseModel no_noise(int d) { return NoiseModel(NoiseKind::Zero, 0.0, Vector::Zero(d)); }

}  // namespace

TEST(Schedule, PowerLawClassification) {
  EXPECT_EQ(classify_schedule(StepSchedule::power_law(0.5, 1, 1)), (ScheduleClass{true, true}));
  EXPECT_EQ(classify_schedule(StepSchedule::power_law(0.5, 1, 0.5)), (ScheduleClass{false, true}));
  EXPECT_EQ(classify_schedule(StepSchedule::power_law(0.5, 1, 1.1)), (ScheduleClass{true, false}));
  EXPECT_EQ(classify_schedule(StepSchedule::constant(0.1)), (ScheduleClass{false, true}));
}

TEST(Schedule, BoundaryExponents) {
  EXPECT_FALSE(classify_power_law(0.5).square_summable);
  EXPECT_TRUE(classify_power_law(0.5000001).square_summable);
  EXPECT_TRUE(classify_power_law(1.0).non_summable);
  EXPECT_FALSE(classify_power_law(1.0000001).non_summable);
}

TEST(Schedule, RejectsLargeFirstStep) {
  EXPECT_THROW(StepSchedule::power_law(1.0, 1.0, 1.0), Error);
  EXPECT_THROW(StepSchedule::power_law(0.5, 0.5, 1.0), Error);
  EXPECT_THROW(StepSchedule::constant(1.0), Error);
  EXPECT_THROW(StepSchedule::custom({0.5, 1.2}), Error);
  EXPECT_NO_THROW(StepSchedule::power_law(1.0, 10.0, 1.0));
}

TEST(Schedule, ValuesInUnitInterval) {
  const auto s = StepSchedule::power_law(0.9, 1.0, 0.6);
  for (long t = 0; t < 100000; t += 997) {
    EXPECT_GT(s(t), 0.0);
    EXPECT_LT(s(t), 1.0);
  }
  EXPECT_DOUBLE_EQ(s(3), 0.9 / std::pow(4.0, 0.6));
}

TEST(Schedule, CustomIsHeuristic) {
  std::vector<double> a;
  for (int t = 0; t < 4000; ++t) a.push_back(0.5 / (t + 1.0));
  const auto c = classify_schedule(StepSchedule::custom(a));
  EXPECT_TRUE(c.heuristic);
  EXPECT_TRUE(c.square_summable);
  EXPECT_TRUE(c.non_summable);
  EXPECT_THROW(StepSchedule::custom(a)(4000), Error);
}

TEST(Noise, ParseNames) {
  EXPECT_EQ(parse_noise_kind("gaussian_state_scaled"), NoiseKind::GaussianStateScaled);
  EXPECT_EQ(parse_noise_kind("sphere_bounded"), NoiseKind::SphereBounded);
  EXPECT_EQ(parse_noise_kind("zero"), NoiseKind::Zero);
  EXPECT_THROW(parse_noise_kind("cauchy"), Error);
}

TEST(Noise, SphereNormIsExact) {
  const Vector ref = vec({1, -1, 0});
  NoiseModel n(NoiseKind::SphereBounded, 0.3, ref, 5);
  const Vector theta = vec({2, 2, 2});
  const double expect = 0.3 * std::sqrt(1 + (theta - ref).squaredNorm());
  for (long t = 0; t < 50; ++t) EXPECT_NEAR(n.draw(theta, t).norm(), expect, 1e-12);
}

TEST(Noise, GaussianMomentsAtEquilibrium) {
  NoiseModel n(NoiseKind::GaussianStateScaled, 0.5, vec({0.0}), 17);
  const int N = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < N; ++i) {
    const double x = n.draw(vec({0.0}), i)(0);
    s += x;
    s2 += x * x;
  }
  EXPECT_LE(std::abs(s / N), 3 * 0.5 / std::sqrt(N));
  EXPECT_NEAR(s2 / N, 0.25, 0.0025);
}

TEST(Noise, StreamsAreKeyed) {
  NoiseModel n(NoiseKind::GaussianStateScaled, 1.0, vec({0, 0}), 3);
  const Vector th = vec({0.5, 0.5});
  EXPECT_EQ(n.draw(th, 10), n.draw(th, 10));
  EXPECT_NE(n.draw(th, 10), n.draw(th, 11));
  EXPECT_NE(n.draw(th, 10, 0), n.draw(th, 10, 1));
  EXPECT_NE(n.draw(th, 10), n.with_seed(4).draw(th, 10));
}

TEST(Step, ZeroNoiseContraction) {
  const auto r = step(vec({1.0}), scalar_decay(), 0.5, no_noise(1), 0);
  EXPECT_EQ(r.theta(0), 0.5);
  EXPECT_FALSE(r.diverged);
}

TEST(Step, EquilibriumIsFixed) {
  const auto f = make_field("linear", {{"A", "-1,0;0,-2"}, {"theta_star", "1,1"}});
  EXPECT_EQ(step(vec({1, 1}), f, 0.3, no_noise(2), 4).theta, vec({1, 1}));
}

TEST(Step, RejectsStepOutsideUnitInterval) {
  EXPECT_THROW(step(vec({1.0}), scalar_decay(), 1.0, no_noise(1), 0), Error);
  EXPECT_THROW(step(vec({1.0}), scalar_decay(), 0.0, no_noise(1), 0), Error);
}

TEST(Step, OverflowFlagsDivergence) {
  VectorField f(1, [](const Vector& x) { return Vector(1e300 * x); });
  EXPECT_TRUE(step(vec({1e10}), f, 0.5, no_noise(1), 0).diverged);
}

TEST(RunPath, DeterministicContraction) {
  const auto p =
      run_path(scalar_decay(), vec({1.0}), StepSchedule::power_law(1, 2, 1), no_noise(1), 10000);
  EXPECT_LE(std::abs(p.final_theta(0)), 1e-3);
  EXPECT_EQ(p.final_step, 10000);
  EXPECT_FALSE(p.diverged);
}

TEST(RunPath, ZeroFieldZeroSigmaIsConstant) {
  VectorField f(2, [](const Vector& x) { return Vector(Vector::Zero(x.size())); });
  NoiseModel n(NoiseKind::GaussianStateScaled, 0.0, vec({0, 0}), 1);
  RecordOptions rec;
  rec.stride = 1;
  const auto p = run_path(f, vec({3, -4}), StepSchedule::constant(0.2), n, 50, rec);
  for (const auto& th : p.thetas) EXPECT_EQ(th, vec({3, -4}));
}

TEST(RunPath, RecursionIdentity) {
  const auto f = make_field("gladyshev_passive");
  NoiseModel n(NoiseKind::GaussianStateScaled, 0.5, vec({0.0}), 1234);
  const auto s = StepSchedule::power_law(0.5, 1, 1);
  RecordOptions rec;
  rec.stride = 1;
  const auto p = run_path(f, vec({1.0}), s, n, 200, rec);
  ASSERT_EQ(p.thetas.size(), 201u);
  for (long t = 0; t < 200; ++t) {
    const auto& th = p.thetas[static_cast<std::size_t>(t)];
    const Vector expect = th + s(t) * (f(th) + n.draw(th, t));
    EXPECT_EQ(p.thetas[static_cast<std::size_t>(t) + 1], expect);
  }
}

TEST(RunPath, BitReproducible) {
  const auto f = make_field("gladyshev_passive");
  NoiseModel n(NoiseKind::SphereBounded, 0.5, vec({0.0}), 99);
  RecordOptions rec;
  rec.stride = 7;
  rec.lyapunov = [](const Vector& x) { return x.squaredNorm(); };
  const auto a = run_path(f, vec({2.0}), StepSchedule::power_law(0.5, 1, 1), n, 3000, rec);
  const auto b = run_path(f, vec({2.0}), StepSchedule::power_law(0.5, 1, 1), n, 3000, rec);
  EXPECT_EQ(a.thetas, b.thetas);
  EXPECT_EQ(a.v_values, b.v_values);
  EXPECT_EQ(a.sup_norm, b.sup_norm);
}

TEST(RunPath, StrideAndFinalState) {
  RecordOptions rec;
  rec.stride = 30;
  const auto p =
      run_path(scalar_decay(), vec({1.0}), StepSchedule::constant(0.1), no_noise(1), 100, rec);
  EXPECT_EQ(p.steps, (std::vector<long>{0, 30, 60, 90, 100}));
}

TEST(RunPath, DivergenceHalts) {
  VectorField f(1, [](const Vector& x) { return Vector(10.0 * x); });
  const auto p = run_path(f, vec({1.0}), StepSchedule::constant(0.5), no_noise(1), 1000);
  EXPECT_TRUE(p.diverged);
  EXPECT_LT(p.final_step, 1000);
}

TEST(RunEnsemble, OrderedBySeedAndMatchesSinglePaths) {
  const auto f = make_field("gladyshev_passive");
  NoiseModel n(NoiseKind::GaussianStateScaled, 0.5, vec({0.0}));
  const auto s = StepSchedule::power_law(0.5, 1, 1);
  const auto paths = run_ensemble(f, vec({1.0}), s, n, 500, 6, 77);
  ASSERT_EQ(paths.size(), 6u);
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(paths[static_cast<std::size_t>(i)].seed,
              derive_seed(77, static_cast<std::uint64_t>(i)));
    const auto single =
        run_path(f, vec({1.0}), s, n.with_seed(paths[static_cast<std::size_t>(i)].seed), 500);
    EXPECT_EQ(single.final_theta, paths[static_cast<std::size_t>(i)].final_theta);
  }
}

TEST(RunEnsemble, LinearZeroNoiseConverges) {
  const auto f = make_field("linear", {{"A", "-1,0.5;0,-1"}, {"theta_star", "0,0"}});
  const auto paths =
      run_ensemble(f, vec({5, -5}), StepSchedule::power_law(0.5, 1, 0.8), no_noise(2), 20000, 2, 1);
  for (const auto& p : paths) EXPECT_LE(p.final_theta.norm(), 1e-4);
}

TEST(PathCsv, Columns) {
  RecordOptions rec;
  rec.stride = 1;
  rec.lyapunov = [](const Vector& x) { return x.squaredNorm(); };
  const auto p =
      run_path(scalar_decay(), vec({1.0}), StepSchedule::constant(0.5), no_noise(1), 2, rec);
  std::ostringstream os;
  write_path_csv(os, p);
  EXPECT_EQ(os.str(), "t,x_1,V,alpha_t\n0,1,1,0.5\n1,0.5,0.25,0.5\n2,0.25,0.0625,0.5\n");
}
