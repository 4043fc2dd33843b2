#ifndef CABLELIFT_MANIFOLD_HPP_
#define CABLELIFT_MANIFOLD_HPP_

#include <stdexcept>

#include <Eigen/Dense>

namespace cablelift {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Validity tolerance for unit vectors and rotation matrices.
inline constexpr double kManifoldTolerance = 1e-9;

/// Raised by log_so3 when the rotation angle is too close to pi for the
/// rotation axis to be recovered unambiguously.
class BranchError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline Vec3 e1() { return Vec3::UnitX(); }
inline Vec3 e2() { return Vec3::UnitY(); }
inline Vec3 e3() { return Vec3::UnitZ(); }

/// Skew-symmetric matrix with hat(v) * w == v.cross(w).
Mat3 hat(const Vec3& v);

/// Inverse of hat. Throws std::invalid_argument when ||M + M^T|| exceeds
/// `tolerance`.
Vec3 vee(const Mat3& m, double tolerance = kManifoldTolerance);

bool is_unit(const Vec3& q, double tolerance = kManifoldTolerance);
bool is_rotation(const Mat3& r, double tolerance = kManifoldTolerance);

/// Nearest rotation in the Frobenius sense (polar factor).
Mat3 project_to_so3(const Mat3& r);

/// Attitude error 1/2 (Rd^T R - R^T Rd)^vee.
Vec3 so3_error(const Mat3& desired, const Mat3& actual);

/// Cable direction error qd x q.
Vec3 s2_error(const Vec3& desired, const Vec3& actual);

/// 1 - qd . q, in [0, 2].
double config_error_cable(const Vec3& desired, const Vec3& actual);

/// 1/2 tr(I - Rd^T R), in [0, 2].
double config_error_payload(const Mat3& desired, const Mat3& actual);

/// Rodrigues formula; Taylor series below |v| = 1e-6.
Mat3 exp_so3(const Vec3& v);

/// Principal logarithm. Throws BranchError within 1e-6 rad of angle pi.
Vec3 log_so3(const Mat3& r);

/// Right Jacobian of exp: R^T dR/dt = (J_r(v) dv/dt)^ for R = exp(v^).
Mat3 right_jacobian(const Vec3& v);
Mat3 right_jacobian_inverse(const Vec3& v);

/// Time derivative of right_jacobian_inverse(v(t)) given dv/dt.
Mat3 right_jacobian_inverse_rate(const Vec3& v, const Vec3& v_dot);

/// Rotation about a principal or arbitrary axis (axis need not be unit).
Mat3 axis_angle(const Vec3& axis, double angle);

/// Z-Y-X (yaw-pitch-roll) Euler angles. Returned as (roll, pitch, yaw).
Vec3 euler_zyx(const Mat3& r);
Mat3 from_euler_zyx(double roll, double pitch, double yaw);

/// Euler angle rates (roll, pitch, yaw) from body angular velocity.
Vec3 euler_zyx_rates(const Vec3& euler, const Vec3& body_rate);

}  // namespace cablelift

#endif  // CABLELIFT_MANIFOLD_HPP_
