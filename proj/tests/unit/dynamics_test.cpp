#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../support/oracles.hpp"
#include "cablelift/dynamics.hpp"
#include "cablelift/presets.hpp"

using namespace cablelift;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::vector<Vec3> hover_thrusts(const SystemParams& p) {
  std::vector<Vec3> u;
  for (const auto& q : p.quads) {
    u.push_back((q.mass + p.payload_mass / p.n()) * p.gravity * e3());
  }
  return u;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  return Vec3(normal(rng), normal(rng), normal(rng)).normalized();
}

/// Cables tilted by `angle` toward alternating horizontal directions.
SystemState tilted(const SystemParams& p, double angle) {
  SystemState s = hover_state(p.n());
  for (int i = 0; i < p.n(); ++i) {
    const Vec3 axis = (i % 2 == 0) ? e2() : Vec3(1, 1, 0).normalized();
    s.cables[i].q = axis_angle(axis, angle) * (-e3());
  }
  return s;
}

SystemState random_state(const SystemParams& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  SystemState s = hover_state(p.n(), Vec3(uni(rng), uni(rng), uni(rng)));
  s.v0 = Vec3(uni(rng), uni(rng), uni(rng));
  s.R0 = exp_so3(0.6 * Vec3(uni(rng), uni(rng), uni(rng)));
  s.Omega0 = 2.0 * Vec3(uni(rng), uni(rng), uni(rng));
  for (auto& c : s.cables) {
    c.q = (-e3() + 0.8 * Vec3(uni(rng), uni(rng), 0.3 * uni(rng))).normalized();
    const Vec3 w = 3.0 * Vec3(uni(rng), uni(rng), uni(rng));
    c.omega = w - w.dot(c.q) * c.q;
  }
  return s;
}

oracle::System to_oracle(const SystemParams& p) {
  oracle::System sys{p.payload_mass, p.payload_inertia, p.gravity, {}};
  for (const auto& q : p.quads) {
    sys.quads.push_back({q.mass, q.inertia, q.cable_length, q.attachment});
  }
  return sys;
}

double max_rotation_defect(const SystemState& s) {
  double worst = (s.R0.transpose() * s.R0 - Mat3::Identity()).norm();
  for (int i = 0; i < s.n(); ++i) {
    worst = std::max(worst, std::abs(s.cables[i].q.norm() - 1.0));
    worst = std::max(worst, std::abs(s.cables[i].omega.dot(s.cables[i].q)));
    const Mat3& r = s.quads[i].rotation;
    worst = std::max(worst, (r.transpose() * r - Mat3::Identity()).norm());
  }
  return worst;
}

}  // namespace

TEST(QuadPosition, HoverGeometry) {
  SystemParams p = presets::rod_two_quad();
  p.quads[0].attachment = Vec3(0.3, 0, 0);
  SystemState s = hover_state(2);
  EXPECT_TRUE(quad_position(s, p, 0).isApprox(Vec3(0.3, 0, 0.5)));

  const SystemParams single = presets::single_quad_pendulum();
  SystemState t = hover_state(1, Vec3(1, 2, 3));
  EXPECT_TRUE(quad_position(t, single, 0).isApprox(Vec3(1, 2, 3.5)));

  s.R0 = axis_angle(e3(), std::numbers::pi / 2);
  EXPECT_LE((quad_position(s, p, 0) - Vec3(0, 0.3, 0.5)).norm(), 1e-15);
}

TEST(QuadPosition, VelocityIsTimeDerivative) {
  const SystemParams p = presets::triangle_three_quad();
  std::mt19937_64 rng(2);
  const SystemState s = random_state(p, rng);
  const double h = 1e-7;
  SystemState fwd = s;
  SystemState bwd = s;
  fwd.x0 += h * s.v0;
  bwd.x0 -= h * s.v0;
  fwd.R0 = s.R0 * exp_so3(h * s.Omega0);
  bwd.R0 = s.R0 * exp_so3(-h * s.Omega0);
  for (int i = 0; i < 3; ++i) {
    fwd.cables[i].q = exp_so3(h * s.cables[i].omega) * s.cables[i].q;
    bwd.cables[i].q = exp_so3(-h * s.cables[i].omega) * s.cables[i].q;
    const Vec3 fd = (quad_position(fwd, p, i) - quad_position(bwd, p, i)) / (2 * h);
    EXPECT_LE((fd - quad_velocity(s, p, i)).norm(), 1e-7);
  }
}

TEST(Energy, HoverAndRigidTranslation) {
  const SystemParams p = presets::rod_two_quad();
  SystemState s = hover_state(2);
  const Energy e = energy(s, p);
  EXPECT_EQ(e.kinetic, 0.0);
  EXPECT_NEAR(e.potential, 2 * 0.052 * 9.81 * 0.5, 1e-12);
  EXPECT_NEAR(e.potential, 0.51012, 1e-12);

  s.v0 = Vec3(1, 0, 0);
  EXPECT_NEAR(energy(s, p).kinetic, 0.5 * p.total_mass(), 1e-15);
}

TEST(Accelerations, HoverEquilibriumIsStationary) {
  for (const auto& p : {presets::rod_two_quad(), presets::triangle_three_quad(),
                        presets::single_quad_pendulum()}) {
    const Derivatives d = accelerations(hover_state(p.n(), Vec3(0.4, -1, 2)),
                                        ActuationCommand::reduced(hover_thrusts(p)), p);
    EXPECT_LE(d.payload_accel.norm(), 1e-10);
    EXPECT_LE(d.payload_angular_accel.norm(), 1e-10);
    for (int i = 0; i < p.n(); ++i) {
      EXPECT_LE(d.cable_accel[i].norm(), 1e-10);
      EXPECT_NEAR(d.tensions[i], p.payload_mass * p.gravity / p.n(), 1e-12);
    }
  }
}

TEST(Accelerations, ZeroThrustIsUniformFreeFall) {
  const SystemParams p = presets::triangle_three_quad();
  const Derivatives d = accelerations(hover_state(3), ActuationCommand::reduced({Vec3::Zero(), Vec3::Zero(), Vec3::Zero()}), p);
  EXPECT_LE((d.payload_accel - Vec3(0, 0, -9.81)).norm(), 1e-12);
  EXPECT_LE(d.payload_angular_accel.norm(), 1e-12);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LE(d.cable_accel[i].norm(), 1e-12);
    EXPECT_NEAR(d.tensions[i], 0.0, 1e-12);
  }
}

TEST(Accelerations, UnitNormConsistency) {
  const SystemParams p = presets::triangle_three_quad();
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) {
    const SystemState s = random_state(p, rng);
    std::vector<Vec3> u = hover_thrusts(p);
    for (auto& ui : u) ui += 0.3 * random_unit(rng);
    const Derivatives d = accelerations(s, ActuationCommand::reduced(u), p);
    for (int i = 0; i < 3; ++i) {
      const Vec3 q_dot = s.cables[i].omega.cross(s.cables[i].q);
      EXPECT_NEAR(d.cable_accel[i].dot(s.cables[i].q), -q_dot.squaredNorm(), 1e-8);
    }
  }
}

// Euler-Lagrange equations evaluated numerically in local coordinates must
// agree with the assembled coupled solve on random states.
TEST(Accelerations, MatchesLagrangianOracle) {
  std::mt19937_64 rng(1234);
  const std::vector<SystemParams> systems = {presets::single_quad_pendulum(),
                                             presets::rod_two_quad(),
                                             presets::triangle_three_quad()};
  for (const auto& base : systems) {
    SystemParams p = base;
    // Non-trivial attachments and inertia for the single-quad case.
    if (p.n() == 1) {
      p.quads[0].attachment = Vec3(0.1, -0.05, 0.02);
      p.payload_inertia = Vec3(2e-4, 3e-4, 4e-4).asDiagonal();
    }
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const SystemState s = random_state(p, rng);
      std::vector<Vec3> u = hover_thrusts(p);
      for (auto& ui : u) ui += 0.4 * random_unit(rng);
      const Derivatives d = accelerations(s, ActuationCommand::reduced(u), p);

      oracle::Configuration cfg{s.x0, s.v0, s.R0, s.Omega0, {}, {}};
      for (const auto& c : s.cables) {
        cfg.q.push_back(c.q);
        cfg.q_dot.push_back(c.omega.cross(c.q));
      }
      const oracle::Accelerations ref = oracle::LagrangianOracle(to_oracle(p), cfg, u).solve();

      auto rel = [](const Vec3& a, const Vec3& b) { return (a - b).norm() / std::max(1.0, b.norm()); };
      worst = std::max(worst, rel(d.payload_accel, ref.x0_ddot));
      worst = std::max(worst, rel(d.payload_angular_accel, ref.Omega0_dot));
      for (int i = 0; i < p.n(); ++i) worst = std::max(worst, rel(d.cable_accel[i], ref.q_ddot[i]));
    }
    EXPECT_LE(worst, 1e-6) << "n = " << p.n();
  }
}

TEST(Accelerations, SingularGeometryFailsLoudly) {
  SystemParams p = presets::rod_two_quad();
  p.quads[1].cable_length = 0.0;  // bypasses validate() on purpose
  EXPECT_THROW(accelerations(hover_state(2), ActuationCommand::reduced(hover_thrusts(p)), p),
               DynamicsError);
  EXPECT_THROW(p.validate(), ModelError);
}

TEST(Accelerations, FullModeQuadRotation) {
  const SystemParams p = presets::rod_two_quad();
  SystemState s = hover_state(2);
  s.quads[0].body_rate = Vec3(1, -2, 3);
  const Vec3 moment(1e-4, -2e-4, 5e-5);
  const auto cmd = ActuationCommand::full({0.6, 0.6}, {moment, Vec3::Zero()});
  const Derivatives d = accelerations(s, cmd, p);
  const Mat3& J = p.quads[0].inertia;
  const Vec3 w = s.quads[0].body_rate;
  EXPECT_LE((J * d.quad_angular_accel[0] + w.cross(J * w) - moment).norm(), 1e-15);
  EXPECT_THROW(ActuationCommand::full({-0.1, 0.6}, {Vec3::Zero(), Vec3::Zero()}), ModelError);
}

TEST(Step, EquilibriumHoldsFor1000Steps) {
  const SystemParams p = presets::triangle_three_quad();
  const SystemState start = hover_state(3, Vec3(0, 0, 1));
  SystemState s = start;
  const auto cmd = ActuationCommand::reduced(hover_thrusts(p));
  for (int k = 0; k < 1000; ++k) s = step(s, cmd, p, 1e-3);
  EXPECT_LE((s.x0 - start.x0).norm(), 1e-9);
  EXPECT_LE((s.R0 - start.R0).norm(), 1e-9);
  for (int i = 0; i < 3; ++i) EXPECT_LE((s.cables[i].q - start.cables[i].q).norm(), 1e-9);
}

TEST(Step, FreeFallClosedForm) {
  const SystemParams p = presets::rod_two_quad();
  const SystemState start = tilted(p, 10 * kDeg);
  SystemState s = start;
  const auto cmd = ActuationCommand::reduced({Vec3::Zero(), Vec3::Zero()});
  for (int k = 0; k < 500; ++k) s = step(s, cmd, p, 1e-3);
  EXPECT_NEAR(s.x0.z(), -0.5 * 9.81 * 0.25, 1e-9);
  EXPECT_NEAR(s.x0.z(), -1.226, 1e-3);
  for (int i = 0; i < 2; ++i) EXPECT_LE((s.cables[i].q - start.cables[i].q).norm(), 1e-9);
}

TEST(Step, EnergyConservedWithoutThrust) {
  const SystemParams p = presets::rod_two_quad();
  SystemState s = tilted(p, 10 * kDeg);
  // Give the internal modes motion so the check exercises the coupling.
  s.cables[0].omega = Vec3(1.0, -0.5, 0.0);
  s.cables[0].omega -= s.cables[0].omega.dot(s.cables[0].q) * s.cables[0].q;
  s.Omega0 = Vec3(0.2, 0.5, -0.3);
  const double e0 = energy(s, p).total();
  const auto cmd = ActuationCommand::reduced({Vec3::Zero(), Vec3::Zero()});
  double worst = 0.0;
  for (int k = 0; k < 5000; ++k) {
    s = step(s, cmd, p, 1e-3);
    worst = std::max(worst, std::abs(energy(s, p).total() - e0) / std::abs(e0));
  }
  EXPECT_LE(worst, 1e-6);
  EXPECT_LE(max_rotation_defect(s), 1e-8);
}

TEST(Step, MomentumConservedWithoutGravityOrThrust) {
  SystemParams p = presets::triangle_three_quad();
  p.gravity = 0.0;
  std::mt19937_64 rng(8);
  SystemState s = random_state(p, rng);
  const Vec3 p0 = linear_momentum(s, p);
  const auto cmd = ActuationCommand::reduced({Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
  for (int k = 0; k < 2000; ++k) s = step(s, cmd, p, 1e-3);
  EXPECT_LE((linear_momentum(s, p) - p0).norm(), 1e-8 * p0.norm());
}

TEST(Step, ManifoldPreservedUnderFullActuation) {
  const SystemParams p = presets::triangle_three_quad();
  std::mt19937_64 rng(10);
  SystemState s = random_state(p, rng);
  for (auto& q : s.quads) q.body_rate = Vec3(2, -1, 0.5);
  const auto cmd = ActuationCommand::full({0.6, 0.5, 0.7}, {Vec3(1e-5, 0, 0), Vec3(0, -1e-5, 0), Vec3(0, 0, 1e-5)});
  for (int k = 0; k < 3000; ++k) {
    s = step(s, cmd, p, 1e-3);
    ASSERT_LE(max_rotation_defect(s), 1e-8) << "step " << k;
  }
}

TEST(Step, FourthOrderConvergence) {
  const SystemParams p = presets::triangle_three_quad();
  std::mt19937_64 rng(12);
  SystemState start = random_state(p, rng);
  std::vector<Vec3> u = hover_thrusts(p);
  u[0] += Vec3(0.05, 0, 0.02);
  const auto cmd = ActuationCommand::reduced(u);
  auto integrate = [&](double dt) {
    SystemState s = start;
    const int steps = static_cast<int>(std::lround(0.4 / dt));
    for (int k = 0; k < steps; ++k) s = step(s, cmd, p, dt);
    return s;
  };
  const SystemState ref = integrate(1e-5);
  auto error = [&](const SystemState& s) {
    double e = (s.x0 - ref.x0).norm() + (s.R0 - ref.R0).norm();
    for (int i = 0; i < 3; ++i) e += (s.cables[i].q - ref.cables[i].q).norm();
    return e;
  };
  const double e4 = error(integrate(4e-3));
  const double e2 = error(integrate(2e-3));
  const double e1 = error(integrate(1e-3));
  EXPECT_GT(e4 / e2, 12.0);
  EXPECT_LT(e4 / e2, 20.0);
  EXPECT_GT(e2 / e1, 12.0);
  EXPECT_LT(e2 / e1, 20.0);
}

TEST(Step, RejectsBadStepAndNonFiniteState) {
  const SystemParams p = presets::rod_two_quad();
  const auto cmd = ActuationCommand::reduced(hover_thrusts(p));
  EXPECT_THROW(step(hover_state(2), cmd, p, 0.0), std::invalid_argument);
  EXPECT_THROW(step(hover_state(2), cmd, p, 0.02), std::invalid_argument);
  SystemState bad = hover_state(2);
  bad.v0.x() = std::numeric_limits<double>::infinity();
  try {
    step(bad, cmd, p, 1e-3);
    FAIL() << "expected DynamicsError";
  } catch (const DynamicsError& e) {
    EXPECT_NE(std::string(e.what()).find("x0="), std::string::npos);
  }
}
