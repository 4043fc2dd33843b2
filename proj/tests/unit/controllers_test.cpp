#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cablelift/controllers.hpp"
#include "cablelift/dynamics.hpp"
#include "cablelift/presets.hpp"
#include "cablelift/synthesis.hpp"

using namespace cablelift;

namespace {

FollowerGains random_gains(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  FollowerGains g;
  g.K_eta = Mat3::NullaryExpr([&] { return u(rng); });
  g.K_eta_dot = Mat3::NullaryExpr([&] { return u(rng); });
  g.K_xi = Mat32::NullaryExpr([&] { return u(rng); });
  g.K_xi_dot = Mat32::NullaryExpr([&] { return u(rng); });
  return g;
}

// Gains that commute with rotations about e3.
FollowerGains isotropic_gains(double a, double b) {
  Eigen::Matrix2d planar;
  planar << a, -b, b, a;
  FollowerGains g;
  g.K_eta = a * Mat3::Identity() + b * hat(e3());
  g.K_eta(2, 2) = 2.0 * a;
  g.K_eta_dot = 0.5 * g.K_eta;
  g.K_xi.topRows<2>() = planar;
  g.K_xi_dot.topRows<2>() = 0.3 * planar;
  return g;
}

SystemState perturbed(const SystemParams& p, std::mt19937_64& rng, double size) {
  std::normal_distribution<double> normal(0.0, size);
  auto vec = [&] { return Vec3(normal(rng), normal(rng), normal(rng)); };
  SystemState s = hover_state(p.n(), Vec3(0, 0, 1));
  s.R0 = exp_so3(vec());
  s.Omega0 = vec();
  for (auto& c : s.cables) {
    c.q = exp_so3(vec()) * (-e3());
    c.omega = vec();
    c.omega -= c.omega.dot(c.q) * c.q;
  }
  return s;
}

ControlGains gains_for(const SystemParams& p, const FollowerGains& g) {
  ControlGains gains;
  gains.followers.assign(p.n() - 1, g);
  return gains;
}

}  // namespace

TEST(OuterLoopTest, ZeroErrorsPassThroughHoverThrust) {
  const SystemParams p = presets::triangle_three_quad();
  const HoverEquilibrium eq = build_equilibrium(p);
  std::mt19937_64 rng(1);
  const ControlGains gains = gains_for(p, random_gains(rng));
  for (int i = 1; i < p.n(); ++i) {
    EXPECT_EQ(follower_outer_loop(eq.state, eq, gains, i), eq.thrust_vectors[i]);
  }
}

TEST(OuterLoopTest, CommandIsHoverPlusPacPlusCac) {
  const SystemParams p = presets::triangle_three_quad();
  const HoverEquilibrium eq = build_equilibrium(p);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    ControlGains gains;
    for (int i = 1; i < p.n(); ++i) gains.followers.push_back(random_gains(rng));
    const FeedbackErrors e = feedback_errors(perturbed(p, rng, 0.2));
    for (int i = 1; i < p.n(); ++i) {
      const FollowerGains& g = gains.followers[i - 1];
      const Vec3 du = follower_outer_loop(e, eq, gains, i) - eq.thrust_vectors[i];
      const Vec3 parts = pac(e.eta, e.eta_dot, g) + cac(e.xi[i], e.xi_dot[i], g);
      EXPECT_LE((du - parts).norm(), 1e-15 * (1.0 + parts.norm()));
    }
  }
}

TEST(OuterLoopTest, PacAndCacAreLinear) {
  std::mt19937_64 rng(3);
  const FollowerGains g = random_gains(rng);
  const Vec3 a(0.1, -0.2, 0.05), b(-0.03, 0.4, 0.2);
  EXPECT_LE((pac(a + b, b, g) - pac(a, Vec3::Zero(), g) - pac(b, b, g)).norm(), 1e-15);
  EXPECT_LE((cac(2.0 * a, a, g) - 2.0 * cac(a, 0.5 * a, g)).norm(), 1e-15);
  EXPECT_EQ(cac(Vec3(0, 0, 3), Vec3(0, 0, -1), g), Vec3::Zero());
}

TEST(OuterLoopTest, FeedbackErrorsFollowTheSignConventions) {
  SystemState s = hover_state(2);
  const double a = 0.1;
  s.cables[1].q = axis_angle(e2(), a) * (-e3());
  s.cables[1].omega = Vec3(0, 0.5, 0);
  s.R0 = axis_angle(e1(), 0.05);
  s.Omega0 = Vec3(0.2, 0, 0);
  const FeedbackErrors e = feedback_errors(s);
  EXPECT_NEAR(e.eta.x(), 0.05, 1e-4);
  EXPECT_EQ(e.eta_dot, s.Omega0);
  EXPECT_EQ(e.xi[0], Vec3::Zero());
  EXPECT_LE((e.xi[1] - e3().cross(s.cables[1].q)).norm(), 1e-15);
  const Vec3 q_dot = s.cables[1].omega.cross(s.cables[1].q);
  EXPECT_LE((e.xi_dot[1] - e3().cross(q_dot)).norm(), 1e-15);
}

TEST(OuterLoopTest, IsotropicGainsAreYawEquivariant) {
  const SystemParams p = presets::triangle_three_quad();
  const HoverEquilibrium eq = build_equilibrium(p);
  const ControlGains gains = gains_for(p, isotropic_gains(1.3, 0.4));
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const SystemState s = perturbed(p, rng, 0.15);
    const Mat3 rz = axis_angle(e3(), 0.3 + trial * 0.27);
    SystemState r = s;
    r.R0 = rz * s.R0 * rz.transpose();
    r.Omega0 = rz * s.Omega0;
    for (int i = 0; i < p.n(); ++i) {
      r.cables[i].q = rz * s.cables[i].q;
      r.cables[i].omega = rz * s.cables[i].omega;
    }
    for (int i = 1; i < p.n(); ++i) {
      const Vec3 du = follower_outer_loop(s, eq, gains, i) - eq.thrust_vectors[i];
      const Vec3 du_r = follower_outer_loop(r, eq, gains, i) - eq.thrust_vectors[i];
      EXPECT_LE((du_r - rz * du).norm(), 1e-12);
    }
  }
}

TEST(OuterLoopTest, SynthesizedCacRecentresTheFollower) {
  const SystemParams p = presets::rod_two_quad();
  const HoverEquilibrium eq = build_equilibrium(p);
  const ControlGains gains = synthesize_gains(linearize(p, eq));
  for (const Vec3& axis : {e1(), e2(), Vec3(1, 1, 0).normalized(), Vec3(1, -2, 0).normalized()}) {
    SystemState s = eq.state;
    s.cables[1].q = axis_angle(axis, 0.1) * (-e3());
    const Vec3 du = cac(e3().cross(s.cables[1].q), Vec3::Zero(), gains.followers[0]);
    const Vec3 toward_attachment(s.cables[1].q.x(), s.cables[1].q.y(), 0.0);
    EXPECT_GT(du.dot(toward_attachment), 0.0) << axis.transpose();
  }
}

TEST(StackedGainTest, RowsMatchFollowerBlocks) {
  const int n = 3;
  const int d = reduced_config_dim(n);
  std::mt19937_64 rng(5);
  ControlGains gains;
  gains.followers = {random_gains(rng), random_gains(rng)};
  const Eigen::MatrixXd k = stacked_gain(gains, n);
  ASSERT_EQ(k.rows(), 3 * n);
  ASSERT_EQ(k.cols(), 2 * d);
  EXPECT_EQ(k.topRows(3).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(Mat3(k.block<3, 3>(6, 3)), gains.followers[1].K_eta);
  EXPECT_EQ(Mat3(k.block<3, 3>(6, d + 3)), gains.followers[1].K_eta_dot);
  EXPECT_EQ(Mat32(k.block<3, 2>(6, 10)), gains.followers[1].K_xi);
  EXPECT_EQ(Mat32(k.block<3, 2>(6, d + 10)), gains.followers[1].K_xi_dot);
}

TEST(StackedGainTest, HumanGainFillsLeaderRows) {
  ControlGains gains;
  gains.followers.resize(1);
  gains.human_gain = Eigen::MatrixXd::Constant(3, 2 * reduced_config_dim(2), 0.5);
  EXPECT_EQ(stacked_gain(gains, 2).topRows(3), *gains.human_gain);
}

TEST(ControlGainsTest, ValidateRejectsBadGains) {
  ControlGains gains;
  gains.followers.resize(1);
  EXPECT_NO_THROW(gains.validate(2));
  EXPECT_THROW(gains.validate(3), ModelError);
  ControlGains negative = gains;
  negative.attitude.pitch.kd = -1.0;
  EXPECT_THROW(negative.validate(2), ModelError);
  ControlGains nan = gains;
  nan.followers[0].K_xi(0, 0) = std::nan("");
  EXPECT_THROW(nan.validate(2), ModelError);
  ControlGains human = gains;
  human.human_gain = Eigen::MatrixXd::Zero(3, 4);
  EXPECT_THROW(human.validate(2), ModelError);
}

TEST(AllocateTest, HoverMapsToLevelAttitude) {
  const AttitudeCommand c = allocate(Vec3(0, 0, 0.62784), 0.052, 9.81);
  EXPECT_EQ(c.roll, 0.0);
  EXPECT_EQ(c.pitch, 0.0);
  EXPECT_EQ(c.thrust, 0.62784);
  EXPECT_FALSE(c.saturated);
}

TEST(AllocateTest, ForwardForceGivesPitch) {
  const double w = 0.052 * 9.81;
  const AttitudeCommand c = allocate(Vec3(0.1 * w, 0, w), 0.052, 9.81);
  EXPECT_NEAR(c.pitch, 0.1, 1e-15);
  EXPECT_EQ(c.roll, 0.0);
  EXPECT_EQ(c.thrust, w);
}

TEST(AllocateTest, RollSignSteersAlongPlusE2) {
  const double w = 0.052 * 9.81;
  const AttitudeCommand c = allocate(Vec3(0, 0.1 * w, w), 0.052, 9.81);
  EXPECT_NEAR(c.roll, -0.1, 1e-15);
  const Vec3 thrust_dir = from_euler_zyx(c.roll, c.pitch, 0.0) * e3();
  EXPECT_GT(thrust_dir.y(), 0.0);
}

TEST(AllocateTest, ClampsAndFlagsSaturation) {
  const double w = 0.052 * 9.81;
  const AttitudeCommand c = allocate(Vec3(2.0 * w, -3.0 * w, w), 0.052, 9.81);
  EXPECT_EQ(c.pitch, 0.35);
  EXPECT_EQ(c.roll, 0.35);
  EXPECT_TRUE(c.saturated);
  const AttitudeCommand down = allocate(Vec3(0, 0, -1.0), 0.052, 9.81);
  EXPECT_EQ(down.thrust, 0.0);
}

TEST(AttitudePidTest, ZeroErrorGivesZeroMoment) {
  AttitudePid pid;
  EXPECT_EQ(pid.update(Vec3::Zero(), Vec3::Zero(), AttitudeCommand{}, 0.001), Vec3::Zero());
}

TEST(AttitudePidTest, ProportionalArithmetic) {
  AttitudePidGains g;
  g.roll = {0.02, 0.0, 0.0, 0.0};
  AttitudePid pid(g);
  AttitudeCommand cmd;
  cmd.roll = 0.1;
  EXPECT_NEAR(pid.update(Vec3::Zero(), Vec3::Zero(), cmd, 0.001).x(), 0.002, 1e-15);
}

TEST(AttitudePidTest, IntegralAccumulatesByRectangleRule) {
  AttitudePidGains g;
  g.pitch = {0.0, 0.01, 0.0, 1.0};
  AttitudePid pid(g);
  AttitudeCommand cmd;
  cmd.pitch = 0.2;
  for (int k = 0; k < 1000; ++k) pid.update(Vec3::Zero(), Vec3::Zero(), cmd, 0.001);
  EXPECT_NEAR(pid.integral_term().y(), 0.01 * 0.2 * 1.0, 1e-12);
}

TEST(AttitudePidTest, IntegralNeverExceedsClamp) {
  AttitudePid pid;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> err(-1.0, 1.0);
  const AttitudePidGains g;
  for (int k = 0; k < 20000; ++k) {
    AttitudeCommand cmd;
    cmd.roll = k < 10000 ? 0.5 : err(rng);
    cmd.pitch = -0.5;
    cmd.yaw = err(rng);
    pid.update(Vec3::Zero(), Vec3::Zero(), cmd, 0.001);
    const Vec3 i = pid.integral_term();
    ASSERT_LE(std::abs(i.x()), g.roll.integral_limit + 1e-18);
    ASSERT_LE(std::abs(i.y()), g.pitch.integral_limit + 1e-18);
    ASSERT_LE(std::abs(i.z()), g.yaw.integral_limit + 1e-18);
  }
  pid.reset();
  EXPECT_EQ(pid.integral_term(), Vec3::Zero());
}

TEST(AttitudePidTest, DerivativeOpposesRate) {
  AttitudePidGains g;
  g.roll = {0.0, 0.0, 0.5, 0.0};
  AttitudePid pid(g);
  EXPECT_NEAR(pid.update(Vec3::Zero(), Vec3(2, 0, 0), AttitudeCommand{}, 0.001).x(), -1.0, 1e-15);
}

TEST(AttitudePidTest, YawErrorWraps) {
  AttitudePidGains g;
  g.yaw = {1.0, 0.0, 0.0, 0.0};
  AttitudePid pid(g);
  const double yaw = std::numbers::pi - 0.05;
  AttitudeCommand cmd;
  cmd.yaw = -std::numbers::pi + 0.05;
  EXPECT_NEAR(pid.update(Vec3(0, 0, yaw), Vec3::Zero(), cmd, 0.001).z(), 0.1, 1e-12);
}

TEST(AttitudePidTest, StabilisesAFreeQuadWithinSettlingTime) {
  // Rigid body with the default inertia, commanded to a 0.1 rad roll.
  const QuadParams quad;
  AttitudePid pid;
  AttitudeCommand cmd;
  cmd.roll = 0.1;
  QuadState s;
  const double dt = 0.001;
  double last_outside = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec3 m = pid.update(s, cmd, dt);
    const Vec3 w = s.body_rate;
    const Vec3 w_dot = quad.inertia.inverse() * (m - w.cross(quad.inertia * w));
    s.body_rate += dt * w_dot;
    s.rotation = project_to_so3(s.rotation * exp_so3(dt * s.body_rate));
    if (std::abs(euler_zyx(s.rotation).x() - 0.1) > 0.005) last_outside = (k + 1) * dt;
  }
  EXPECT_LE(last_outside, 0.2);
  EXPECT_NEAR(euler_zyx(s.rotation).x(), 0.1, 0.005);
}

TEST(LeaderPdTest, AtTargetGivesHoverInput) {
  const SystemParams p = presets::rod_two_quad();
  const HoverEquilibrium eq = build_equilibrium(p, Vec3(0, 0, 1));
  const Vec3 target = quad_position(eq.state, p, 0);
  const LeaderInput in = leader_pd(eq.state, p, eq, target, ControlGains{});
  EXPECT_EQ(in.roll, 0.0);
  EXPECT_EQ(in.pitch, 0.0);
  EXPECT_NEAR(in.thrust, eq.thrusts[0], 1e-15);
  EXPECT_FALSE(in.saturated);
}

TEST(LeaderPdTest, TargetAheadPitchesForward) {
  const SystemParams p = presets::rod_two_quad();
  const HoverEquilibrium eq = build_equilibrium(p, Vec3(0, 0, 1));
  ControlGains gains;
  const Vec3 ahead = quad_position(eq.state, p, 0) + e1();
  const LeaderInput in = leader_pd(eq.state, p, eq, ahead, gains);
  EXPECT_GT(in.pitch, 0.0);
  EXPECT_LE(in.pitch, gains.max_tilt);
  EXPECT_EQ(in.roll, 0.0);
  const LeaderInput far = leader_pd(eq.state, p, eq, ahead + 100.0 * e1(), gains);
  EXPECT_EQ(far.pitch, gains.max_tilt);
  EXPECT_TRUE(far.saturated);
}

TEST(NoiseInjectorTest, SeededAndZeroMean) {
  FeedbackErrors base;
  base.eta = Vec3::Zero();
  base.eta_dot = Vec3::Zero();
  base.xi = {Vec3::Zero(), Vec3::Zero()};
  base.xi_dot = base.xi;
  NoiseInjector a(42, 0.01, 0.02), b(42, 0.01, 0.02), off(42, 0.0, 0.0);
  EXPECT_FALSE(off.enabled());
  Vec3 sum = Vec3::Zero();
  double sq = 0.0;
  const int count = 20000;
  for (int k = 0; k < count; ++k) {
    FeedbackErrors ea = base, eb = base;
    a.apply(ea);
    b.apply(eb);
    ASSERT_EQ(ea.eta, eb.eta);
    ASSERT_EQ(ea.xi_dot[1], eb.xi_dot[1]);
    ASSERT_EQ(ea.xi[1].z(), 0.0);
    sum += ea.eta;
    sq += ea.eta_dot.squaredNorm();
  }
  EXPECT_LE((sum / count).norm(), 5.0 * 0.01 / std::sqrt(count));
  EXPECT_NEAR(std::sqrt(sq / (3.0 * count)), 0.02, 0.02 * 0.03);
}
