#ifndef CABLELIFT_CONTROLLERS_HPP_
#define CABLELIFT_CONTROLLERS_HPP_

#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cablelift/linearization.hpp"
#include "cablelift/model.hpp"

namespace cablelift {

using Mat32 = Eigen::Matrix<double, 3, 2>;

/// PAC and CAC blocks for one follower.
struct FollowerGains {
  Mat3 K_eta = Mat3::Zero();
  Mat3 K_eta_dot = Mat3::Zero();
  Mat32 K_xi = Mat32::Zero();
  Mat32 K_xi_dot = Mat32::Zero();
};

struct PidAxisGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double integral_limit = 0.0;  // bound on |ki * integral|, N m
};

struct AttitudePidGains {
  PidAxisGains roll{0.033, 0.01, 0.0016, 0.002};
  PidAxisGains pitch{0.033, 0.01, 0.0016, 0.002};
  PidAxisGains yaw{0.055, 0.01, 0.0027, 0.002};
};

/// Leader position loop, force units.
struct LeaderPdGains {
  double kp_xy = 0.03;  // N/m
  double kd_xy = 0.08;  // N s/m
  double kp_z = 0.3;
  double kd_z = 0.3;
};

struct ControlGains {
  /// followers[k] drives quad k + 1; quad 0 is the leader.
  std::vector<FollowerGains> followers;
  AttitudePidGains attitude;
  LeaderPdGains leader;
  double max_tilt = 0.35;  // rad
  /// Optional human model for analysis: 3 x 2(6+2n) feedback on z.
  std::optional<Eigen::MatrixXd> human_gain;

  /// Throws ModelError for negative PID gains, non-finite matrices, or a
  /// follower count other than n - 1.
  void validate(int n) const;
};

/// Stacked feedback: leader rows from human_gain (or zero),
/// follower rows from the PAC and CAC blocks.
Eigen::MatrixXd stacked_gain(const ControlGains& gains, int n);

/// du_PAC = -(K_eta eta0 + K_eta_dot eta0_dot)
Vec3 pac(const Vec3& eta, const Vec3& eta_dot, const FollowerGains& gains);
/// du_CAC = -(K_xi C^T xi + K_xi_dot C^T xi_dot), C = [e1 e2]
Vec3 cac(const Vec3& xi, const Vec3& xi_dot, const FollowerGains& gains);

/// Feedback errors measured from a full state, target R0 = I, q = -e3.
struct FeedbackErrors {
  Vec3 eta;       // so3_error(I, R0)
  Vec3 eta_dot;   // Omega0
  std::vector<Vec3> xi;      // e3 x q_i
  std::vector<Vec3> xi_dot;  // e3 x dq_i/dt
};

FeedbackErrors feedback_errors(const SystemState& state);

/// u_d = u_e + pac + cac for follower quad i (i >= 1).
Vec3 follower_outer_loop(const FeedbackErrors& errors, const HoverEquilibrium& eq,
                         const ControlGains& gains, int i);
Vec3 follower_outer_loop(const SystemState& state, const HoverEquilibrium& eq,
                         const ControlGains& gains, int i);

/// Desired attitude and thrust handed to the onboard attitude loop.
struct AttitudeCommand {
  double roll = 0.0;    // rad
  double pitch = 0.0;   // rad
  double yaw = 0.0;     // rad, held at zero
  double thrust = 0.0;  // N, >= 0
  bool saturated = false;
};

/// Small-angle inversion of m a = u about hover with ZYX Euler angles:
/// pitch = u_x / (m g), roll = -u_y / (m g), thrust = max(u_z, 0), then
/// roll and pitch are clamped to +-max_tilt.
AttitudeCommand allocate(const Vec3& u, double mass, double gravity, double max_tilt = 0.35);

/// Moment-level PID on ZYX Euler angles. The derivative acts on the
/// measured Euler rates; the integral is clamped for anti-windup.
class AttitudePid {
 public:
  explicit AttitudePid(AttitudePidGains gains = {}) : gains_(gains) {}

  Vec3 update(const QuadState& quad, const AttitudeCommand& desired, double dt);
  Vec3 update(const Vec3& euler, const Vec3& euler_rate, const AttitudeCommand& desired,
              double dt);
  /// Current ki * integral per axis.
  [[nodiscard]] Vec3 integral_term() const;
  void reset() { integral_.setZero(); }

 private:
  AttitudePidGains gains_;
  Vec3 integral_ = Vec3::Zero();
};

/// The human channel for the leader.
struct LeaderInput {
  double roll = 0.0;
  double pitch = 0.0;
  double thrust = 0.0;
  bool saturated = false;
};

inline AttitudeCommand to_attitude_command(const LeaderInput& in) {
  return {in.roll, in.pitch, 0.0, in.thrust, in.saturated};
}

/// Point-to-point PD on the leader's position, through allocate.
LeaderInput leader_pd(const SystemState& state, const SystemParams& params,
                      const HoverEquilibrium& eq, const Vec3& target, const ControlGains& gains);

/// Zero-mean Gaussian noise on the feedback errors.
class NoiseInjector {
 public:
  NoiseInjector(std::uint64_t seed, double angle_sigma, double rate_sigma)
      : rng_(seed), angle_sigma_(angle_sigma), rate_sigma_(rate_sigma) {}

  void apply(FeedbackErrors& errors);
  [[nodiscard]] bool enabled() const { return angle_sigma_ > 0.0 || rate_sigma_ > 0.0; }

 private:
  Vec3 draw(double sigma);

  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  double angle_sigma_;
  double rate_sigma_;
};

}  // namespace cablelift

#endif  // CABLELIFT_CONTROLLERS_HPP_
