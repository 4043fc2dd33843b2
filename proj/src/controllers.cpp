#include "cablelift/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cablelift/dynamics.hpp"

namespace cablelift {

namespace {

bool finite_and_non_negative(const PidAxisGains& g) {
  for (double v : {g.kp, g.ki, g.kd, g.integral_limit}) {
    if (!std::isfinite(v) || v < 0.0) return false;
  }
  return true;
}

double clamp_flag(double value, double bound, bool& saturated) {
  if (value > bound) {
    saturated = true;
    return bound;
  }
  if (value < -bound) {
    saturated = true;
    return -bound;
  }
  return value;
}

}  // namespace

void ControlGains::validate(int n) const {
  if (static_cast<int>(followers.size()) != n - 1) {
    throw ModelError("expected one gain set per follower");
  }
  for (const auto& f : followers) {
    if (!f.K_eta.allFinite() || !f.K_eta_dot.allFinite() || !f.K_xi.allFinite() ||
        !f.K_xi_dot.allFinite()) {
      throw ModelError("follower gains must be finite");
    }
  }
  for (const auto* axis : {&attitude.roll, &attitude.pitch, &attitude.yaw}) {
    if (!finite_and_non_negative(*axis)) throw ModelError("PID gains must be finite and >= 0");
  }
  for (double v : {leader.kp_xy, leader.kd_xy, leader.kp_z, leader.kd_z}) {
    if (!std::isfinite(v) || v < 0.0) throw ModelError("leader gains must be finite and >= 0");
  }
  if (!(max_tilt > 0.0 && max_tilt < 1.5)) throw ModelError("max_tilt must lie in (0, 1.5) rad");
  if (human_gain) {
    if (human_gain->rows() != 3 || human_gain->cols() != 2 * reduced_config_dim(n) ||
        !human_gain->allFinite()) {
      throw ModelError("human gain must be a finite 3 x 2(6+2n) matrix");
    }
  }
}

Eigen::MatrixXd stacked_gain(const ControlGains& gains, int n) {
  const int d = reduced_config_dim(n);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(3 * n, 2 * d);
  if (gains.human_gain) k.topRows(3) = *gains.human_gain;
  for (int i = 1; i < n; ++i) {
    const auto& g = gains.followers.at(i - 1);
    k.block<3, 3>(3 * i, 3) = g.K_eta;
    k.block<3, 3>(3 * i, d + 3) = g.K_eta_dot;
    k.block<3, 2>(3 * i, 6 + 2 * i) = g.K_xi;
    k.block<3, 2>(3 * i, d + 6 + 2 * i) = g.K_xi_dot;
  }
  return k;
}

Vec3 pac(const Vec3& eta, const Vec3& eta_dot, const FollowerGains& gains) {
  return -(gains.K_eta * eta + gains.K_eta_dot * eta_dot);
}

Vec3 cac(const Vec3& xi, const Vec3& xi_dot, const FollowerGains& gains) {
  return -(gains.K_xi * xi.head<2>() + gains.K_xi_dot * xi_dot.head<2>());
}

FeedbackErrors feedback_errors(const SystemState& state) {
  FeedbackErrors e;
  e.eta = so3_error(Mat3::Identity(), state.R0);
  e.eta_dot = state.Omega0;
  for (const auto& c : state.cables) {
    e.xi.push_back(-s2_error(-e3(), c.q));
    e.xi_dot.push_back(e3().cross(c.omega.cross(c.q)));
  }
  return e;
}

Vec3 follower_outer_loop(const FeedbackErrors& errors, const HoverEquilibrium& eq,
                         const ControlGains& gains, int i) {
  if (i < 1 || i >= eq.n()) throw ModelError("follower index must be in [1, n)");
  const auto& g = gains.followers.at(i - 1);
  return eq.thrust_vectors[i] + pac(errors.eta, errors.eta_dot, g) +
         cac(errors.xi[i], errors.xi_dot[i], g);
}

Vec3 follower_outer_loop(const SystemState& state, const HoverEquilibrium& eq,
                         const ControlGains& gains, int i) {
  return follower_outer_loop(feedback_errors(state), eq, gains, i);
}

AttitudeCommand allocate(const Vec3& u, double mass, double gravity, double max_tilt) {
  const double weight = mass * gravity;
  AttitudeCommand cmd;
  cmd.pitch = clamp_flag(u.x() / weight, max_tilt, cmd.saturated);
  cmd.roll = clamp_flag(-u.y() / weight, max_tilt, cmd.saturated);
  cmd.thrust = std::max(u.z(), 0.0);
  return cmd;
}

Vec3 AttitudePid::update(const QuadState& quad, const AttitudeCommand& desired, double dt) {
  const Vec3 euler = euler_zyx(quad.rotation);
  return update(euler, euler_zyx_rates(euler, quad.body_rate), desired, dt);
}

Vec3 AttitudePid::update(const Vec3& euler, const Vec3& euler_rate,
                         const AttitudeCommand& desired, double dt) {
  const Vec3 target(desired.roll, desired.pitch, desired.yaw);
  Vec3 error = target - euler;
  error.z() = std::remainder(error.z(), 2.0 * std::numbers::pi);
  const PidAxisGains* axes[3] = {&gains_.roll, &gains_.pitch, &gains_.yaw};
  Vec3 moment;
  for (int k = 0; k < 3; ++k) {
    const auto& g = *axes[k];
    integral_(k) += error(k) * dt;
    if (g.ki > 0.0) {
      const double bound = g.integral_limit / g.ki;
      integral_(k) = std::clamp(integral_(k), -bound, bound);
    } else {
      integral_(k) = 0.0;
    }
    moment(k) = g.kp * error(k) + g.ki * integral_(k) - g.kd * euler_rate(k);
  }
  return moment;
}

Vec3 AttitudePid::integral_term() const {
  return {gains_.roll.ki * integral_.x(), gains_.pitch.ki * integral_.y(),
          gains_.yaw.ki * integral_.z()};
}

LeaderInput leader_pd(const SystemState& state, const SystemParams& params,
                      const HoverEquilibrium& eq, const Vec3& target, const ControlGains& gains) {
  const auto& g = gains.leader;
  const auto& quad = params.quads.at(0);
  const Vec3 err = target - quad_position(state, params, 0);
  const Vec3 v = quad_velocity(state, params, 0);
  Vec3 u = eq.thrust_vectors[0];
  u.x() += g.kp_xy * err.x() - g.kd_xy * v.x();
  u.y() += g.kp_xy * err.y() - g.kd_xy * v.y();
  u.z() += g.kp_z * err.z() - g.kd_z * v.z();
  const AttitudeCommand cmd = allocate(u, quad.mass, params.gravity, gains.max_tilt);
  return {cmd.roll, cmd.pitch, cmd.thrust, cmd.saturated};
}

Vec3 NoiseInjector::draw(double sigma) {
  if (sigma <= 0.0) return Vec3::Zero();
  const double x = normal_(rng_), y = normal_(rng_), z = normal_(rng_);
  return sigma * Vec3(x, y, z);
}

void NoiseInjector::apply(FeedbackErrors& errors) {
  errors.eta += draw(angle_sigma_);
  errors.eta_dot += draw(rate_sigma_);
  for (std::size_t i = 0; i < errors.xi.size(); ++i) {
    errors.xi[i].head<2>() += draw(angle_sigma_).head<2>();
    errors.xi_dot[i].head<2>() += draw(rate_sigma_).head<2>();
  }
}

}  // namespace cablelift
