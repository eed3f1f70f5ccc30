#include <gtest/gtest.h>

#include <random>

#include "rcmhqp/error.hpp"
#include "rcmhqp/otg.hpp"

using namespace rcmhqp;

namespace {

OtgLimits limits1(double v, double a) { return {Eigen::VectorXd::Constant(1, v), Eigen::VectorXd::Constant(1, a)}; }

OtgState state1(double p, double v) { return {Eigen::VectorXd::Constant(1, p), Eigen::VectorXd::Constant(1, v)}; }

}  // namespace

TEST(Otg, AcceleratesFromRest) {
  const double dt = 0.002;
  const OtgState s = otg_step(state1(0, 0), Eigen::VectorXd::Constant(1, 100.0), limits1(300, 1500), dt);
  EXPECT_DOUBLE_EQ(s.vel[0], 1500 * dt);
  EXPECT_DOUBLE_EQ(s.pos[0], 1500 * dt * dt);
}

TEST(Otg, ConvergedStateIsFixedPoint) {
  const OtgState s = otg_step(state1(4.5, 0), Eigen::VectorXd::Constant(1, 4.5), limits1(300, 1500), 0.002);
  EXPECT_EQ(s.pos[0], 4.5);
  EXPECT_EQ(s.vel[0], 0.0);
}

TEST(Otg, RandomRunsRespectBoundsAndConverge) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> lim(10.0, 2000.0), tgt(-500.0, 500.0), period(0.0005, 0.01);
  for (int run = 0; run < 20; ++run) {
    const double dt = period(rng);
    const OtgLimits l{Eigen::Vector2d(lim(rng), lim(rng)), Eigen::Vector2d(lim(rng), lim(rng))};
    OtgState s{Eigen::Vector2d(tgt(rng), tgt(rng)), Eigen::Vector2d::Zero()};
    Eigen::VectorXd target = Eigen::Vector2d(tgt(rng), tgt(rng));
    for (int k = 0; k < 10000; ++k) {
      if (k == 5000) target = Eigen::Vector2d(tgt(rng), tgt(rng));
      const OtgState next = otg_step(s, target, l, dt);
      for (Eigen::Index i = 0; i < 2; ++i) {
        ASSERT_LE(std::abs(next.vel[i]), l.v_max[i] + 1e-12);
        ASSERT_LE(std::abs(next.vel[i] - s.vel[i]), l.a_max[i] * dt + 1e-12);
      }
      s = next;
    }
    for (Eigen::Index i = 0; i < 2; ++i) EXPECT_LE(std::abs(s.pos[i] - target[i]), 2 * l.v_max[i] * dt);
  }
}

TEST(Otg, NoOvershootFromRest) {
  const double dt = 0.002;
  OtgState s = state1(0, 0);
  const Eigen::VectorXd target = Eigen::VectorXd::Constant(1, 37.3);
  for (int k = 0; k < 2000; ++k) {
    s = otg_step(s, target, limits1(300, 1500), dt);
    ASSERT_LE(s.pos[0], 37.3 + 1e-9);
  }
  EXPECT_NEAR(s.pos[0], 37.3, 1e-9);
}

TEST(Otg, Validation) {
  EXPECT_THROW(otg_step(state1(0, 0), Eigen::Vector2d::Zero(), limits1(1, 1), 0.01), ConfigError);
  EXPECT_THROW(otg_step(state1(0, 0), Eigen::VectorXd::Zero(1), limits1(1, 1), 0.0), ConfigError);
  EXPECT_THROW(limits1(0, 1).validate(), ConfigError);
}
