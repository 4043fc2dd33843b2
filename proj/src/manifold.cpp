#include "cablelift/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cablelift {

namespace {

constexpr double kExpSeriesThreshold = 1e-6;
constexpr double kJacobianSeriesThreshold = 1e-2;
constexpr double kLogBranchMargin = 1e-6;

}  // namespace

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m, double tolerance) {
  if ((m + m.transpose()).norm() > tolerance) {
    throw std::invalid_argument("vee: matrix is not skew-symmetric");
  }
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

bool is_unit(const Vec3& q, double tolerance) {
  return q.allFinite() && std::abs(q.norm() - 1.0) <= tolerance;
}

bool is_rotation(const Mat3& r, double tolerance) {
  if (!r.allFinite()) return false;
  const Mat3 gram = r.transpose() * r - Mat3::Identity();
  return gram.cwiseAbs().maxCoeff() <= tolerance &&
         std::abs(r.determinant() - 1.0) <= tolerance;
}

Mat3 project_to_so3(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Vec3 so3_error(const Mat3& desired, const Mat3& actual) {
  const Mat3 m = desired.transpose() * actual - actual.transpose() * desired;
  // Skew by construction; skip the tolerance check.
  return 0.5 * Vec3(m(2, 1), m(0, 2), m(1, 0));
}

Vec3 s2_error(const Vec3& desired, const Vec3& actual) {
  return desired.cross(actual);
}

double config_error_cable(const Vec3& desired, const Vec3& actual) {
  return std::clamp(1.0 - desired.dot(actual), 0.0, 2.0);
}

double config_error_payload(const Mat3& desired, const Mat3& actual) {
  const double psi = 0.5 * (3.0 - (desired.transpose() * actual).trace());
  return std::clamp(psi, 0.0, 2.0);
}

Mat3 exp_so3(const Vec3& v) {
  const double theta = v.norm();
  const Mat3 k = hat(v);
  double a;
  double b;
  if (theta < kExpSeriesThreshold) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 log_so3(const Mat3& r) {
  const Vec3 axis2(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = 0.5 * axis2.norm();
  const double c = 0.5 * (r.trace() - 1.0);
  const double theta = std::atan2(s, c);
  if (std::numbers::pi - theta < kLogBranchMargin) {
    throw BranchError("log_so3: rotation angle within 1e-6 of pi");
  }
  double factor;
  if (theta < kExpSeriesThreshold) {
    factor = 0.5 * (1.0 + theta * theta / 6.0);
  } else {
    factor = theta / (2.0 * std::sin(theta));
  }
  return factor * axis2;
}

Mat3 right_jacobian(const Vec3& v) {
  const double theta = v.norm();
  const double t2 = theta * theta;
  double a;
  double b;
  if (theta < kJacobianSeriesThreshold) {
    a = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    b = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    a = (1.0 - std::cos(theta)) / t2;
    b = (theta - std::sin(theta)) / (t2 * theta);
  }
  const Mat3 k = hat(v);
  return Mat3::Identity() - a * k + b * k * k;
}

namespace {

// J_r^{-1}(v) = I + v^/2 + beta(|v|) v^2, and gamma = beta'(theta) / theta.
void inverse_jacobian_coefficients(double theta, double& beta, double& gamma) {
  const double t2 = theta * theta;
  if (theta < kJacobianSeriesThreshold) {
    beta = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0 + t2 * t2 * t2 / 1209600.0;
    gamma = 1.0 / 360.0 + t2 / 7560.0 + t2 * t2 / 201600.0;
    return;
  }
  const double half = 0.5 * theta;
  const double cot_half = std::cos(half) / std::sin(half);
  const double csc2_half = 1.0 / (std::sin(half) * std::sin(half));
  beta = 1.0 / t2 - cot_half / (2.0 * theta);
  const double beta_prime =
      -2.0 / (t2 * theta) + csc2_half / (4.0 * theta) + cot_half / (2.0 * t2);
  gamma = beta_prime / theta;
}

}  // namespace

Mat3 right_jacobian_inverse(const Vec3& v) {
  double beta;
  double gamma;
  inverse_jacobian_coefficients(v.norm(), beta, gamma);
  const Mat3 k = hat(v);
  return Mat3::Identity() + 0.5 * k + beta * k * k;
}

Mat3 right_jacobian_inverse_rate(const Vec3& v, const Vec3& v_dot) {
  double beta;
  double gamma;
  inverse_jacobian_coefficients(v.norm(), beta, gamma);
  const Mat3 k = hat(v);
  const Mat3 k_dot = hat(v_dot);
  return 0.5 * k_dot + gamma * v.dot(v_dot) * k * k + beta * (k_dot * k + k * k_dot);
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return exp_so3(axis.normalized() * angle);
}

Vec3 euler_zyx(const Mat3& r) {
  const double pitch = -std::asin(std::clamp(r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return Vec3(roll, pitch, yaw);
}

Mat3 from_euler_zyx(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 euler_zyx_rates(const Vec3& euler, const Vec3& body_rate) {
  const double sr = std::sin(euler.x());
  const double cr = std::cos(euler.x());
  const double cp = std::cos(euler.y());
  const double tp = std::tan(euler.y());
  const double p = body_rate.x();
  const double q = body_rate.y();
  const double r = body_rate.z();
  return Vec3(p + (q * sr + r * cr) * tp, q * cr - r * sr, (q * sr + r * cr) / cp);
}

}  // namespace cablelift
