#include "cablelift/dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace cablelift {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kMaxStep = 0.01;

// Flat layout: x0, v0, R0 (column-major), Omega0, then per cable (q, omega),
// then per quad (R, Omega).
constexpr int kPayloadSize = 18;
constexpr int kCableSize = 6;
constexpr int kQuadSize = 12;

int flat_size(int n) { return kPayloadSize + n * (kCableSize + kQuadSize); }

VectorXd pack(const SystemState& s) {
  const int n = s.n();
  VectorXd y(flat_size(n));
  y.segment<3>(0) = s.x0;
  y.segment<3>(3) = s.v0;
  y.segment<9>(6) = s.R0.reshaped();
  y.segment<3>(15) = s.Omega0;
  int k = kPayloadSize;
  for (const auto& c : s.cables) {
    y.segment<3>(k) = c.q;
    y.segment<3>(k + 3) = c.omega;
    k += kCableSize;
  }
  for (const auto& q : s.quads) {
    y.segment<9>(k) = q.rotation.reshaped();
    y.segment<3>(k + 9) = q.body_rate;
    k += kQuadSize;
  }
  return y;
}

SystemState unpack(const VectorXd& y, int n) {
  SystemState s;
  s.x0 = y.segment<3>(0);
  s.v0 = y.segment<3>(3);
  s.R0 = y.segment<9>(6).reshaped(3, 3);
  s.Omega0 = y.segment<3>(15);
  s.cables.resize(n);
  s.quads.resize(n);
  int k = kPayloadSize;
  for (auto& c : s.cables) {
    c.q = y.segment<3>(k);
    c.omega = y.segment<3>(k + 3);
    k += kCableSize;
  }
  for (auto& q : s.quads) {
    q.rotation = y.segment<9>(k).reshaped(3, 3);
    q.body_rate = y.segment<3>(k + 9);
    k += kQuadSize;
  }
  return s;
}

VectorXd flat_rate(const SystemState& s, const ActuationCommand& cmd, const SystemParams& params) {
  const Derivatives d = accelerations(s, cmd, params);
  const int n = s.n();
  VectorXd dy(flat_size(n));
  dy.segment<3>(0) = s.v0;
  dy.segment<3>(3) = d.payload_accel;
  dy.segment<9>(6) = (s.R0 * hat(s.Omega0)).reshaped();
  dy.segment<3>(15) = d.payload_angular_accel;
  int k = kPayloadSize;
  for (int i = 0; i < n; ++i) {
    dy.segment<3>(k) = s.cables[i].omega.cross(s.cables[i].q);
    dy.segment<3>(k + 3) = d.cable_angular_accel[i];
    k += kCableSize;
  }
  const bool full = cmd.mode == ActuationMode::kFull;
  for (int i = 0; i < n; ++i) {
    if (full) {
      dy.segment<9>(k) = (s.quads[i].rotation * hat(s.quads[i].body_rate)).reshaped();
      dy.segment<3>(k + 9) = d.quad_angular_accel[i];
    } else {
      dy.segment<12>(k).setZero();
    }
    k += kQuadSize;
  }
  return dy;
}

void project(SystemState& s) {
  s.R0 = project_to_so3(s.R0);
  for (auto& c : s.cables) {
    c.q.normalize();
    c.omega -= c.omega.dot(c.q) * c.q;
  }
  for (auto& q : s.quads) q.rotation = project_to_so3(q.rotation);
}

}  // namespace

Vec3 quad_position(const SystemState& state, const SystemParams& params, int i) {
  const auto& quad = params.quads.at(i);
  return state.x0 + state.R0 * quad.attachment - quad.cable_length * state.cables.at(i).q;
}

Vec3 quad_velocity(const SystemState& state, const SystemParams& params, int i) {
  const auto& quad = params.quads.at(i);
  const auto& cable = state.cables.at(i);
  return state.v0 + state.R0 * state.Omega0.cross(quad.attachment) -
         quad.cable_length * cable.omega.cross(cable.q);
}

Energy energy(const SystemState& state, const SystemParams& params) {
  Energy e;
  e.kinetic = 0.5 * params.payload_mass * state.v0.squaredNorm() +
              0.5 * state.Omega0.dot(params.payload_inertia * state.Omega0);
  e.potential = params.payload_mass * params.gravity * state.x0.z();
  for (int i = 0; i < params.n(); ++i) {
    const auto& quad = params.quads[i];
    const Vec3& rate = state.quads[i].body_rate;
    e.kinetic += 0.5 * quad.mass * quad_velocity(state, params, i).squaredNorm() +
                 0.5 * rate.dot(quad.inertia * rate);
    e.potential += quad.mass * params.gravity * quad_position(state, params, i).z();
  }
  return e;
}

Vec3 linear_momentum(const SystemState& state, const SystemParams& params) {
  Vec3 p = params.payload_mass * state.v0;
  for (int i = 0; i < params.n(); ++i) {
    p += params.quads[i].mass * quad_velocity(state, params, i);
  }
  return p;
}

Derivatives accelerations(const SystemState& state, const ActuationCommand& cmd,
                          const SystemParams& params) {
  const int n = params.n();
  if (state.n() != n) throw ModelError("state and parameters disagree on n");
  const std::vector<Vec3> u = cmd.inertial_thrusts(state);

  const double g = params.gravity;
  const Mat3& R0 = state.R0;
  const Vec3& Om0 = state.Omega0;
  const Mat3 Om0_hat2 = hat(Om0) * hat(Om0);
  const Mat3& J0 = params.payload_inertia;

  // Unknowns: [x0'' (3), Omega0' (3), q_1'' (3), ..., q_n'' (3)].
  const int dim = 6 + 3 * n;
  MatrixXd A = MatrixXd::Zero(dim, dim);
  VectorXd b = VectorXd::Zero(dim);

  // Payload translation, summed over all bodies.
  A.block<3, 3>(0, 0) = params.total_mass() * Mat3::Identity();
  b.segment<3>(0) = -params.total_mass() * g * e3();
  // Payload rotation about its centre of mass, body frame.
  A.block<3, 3>(3, 3) = J0;
  b.segment<3>(3) = -Om0.cross(J0 * Om0);

  for (int i = 0; i < n; ++i) {
    const auto& quad = params.quads[i];
    const double m = quad.mass;
    const double l = quad.cable_length;
    const Mat3 rho_hat = hat(quad.attachment);
    const Vec3& q = state.cables[i].q;
    const Mat3 q_hat2 = hat(q) * hat(q);
    const Vec3 q_dot = state.cables[i].omega.cross(q);
    const Vec3 centripetal = R0 * Om0_hat2 * quad.attachment;
    const int row = 6 + 3 * i;

    A.block<3, 3>(0, 3) -= m * R0 * rho_hat;
    A.block<3, 3>(0, row) = -m * l * Mat3::Identity();
    b.segment<3>(0) += u[i] - m * centripetal;

    A.block<3, 3>(3, 0) += m * rho_hat * R0.transpose();
    A.block<3, 3>(3, 3) -= m * rho_hat * rho_hat;
    A.block<3, 3>(3, row) = -m * l * rho_hat * R0.transpose();
    b.segment<3>(3) += rho_hat * R0.transpose() * (u[i] - m * g * e3()) -
                       m * rho_hat * Om0_hat2 * quad.attachment;

    // Quad translation projected onto the cable's tangent plane; the
    // tension drops out and the normal row pins q . q'' = -|q'|^2.
    A.block<3, 3>(row, 0) = m * q_hat2;
    A.block<3, 3>(row, 3) = -m * q_hat2 * R0 * rho_hat;
    A.block<3, 3>(row, row) = m * l * Mat3::Identity();
    b.segment<3>(row) = q_hat2 * (u[i] - m * centripetal - m * g * e3()) -
                        m * l * q_dot.squaredNorm() * q;
  }

  Eigen::FullPivLU<MatrixXd> lu(A);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw DynamicsError("accelerations: singular coupled mass matrix (degenerate geometry)");
  }
  const VectorXd x = lu.solve(b);

  Derivatives d;
  d.payload_accel = x.segment<3>(0);
  d.payload_angular_accel = x.segment<3>(3);
  d.cable_accel.resize(n);
  d.cable_angular_accel.resize(n);
  d.quad_angular_accel.resize(n);
  d.tensions.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& quad = params.quads[i];
    const Vec3& q = state.cables[i].q;
    const Vec3 q_ddot = x.segment<3>(6 + 3 * i);
    d.cable_accel[i] = q_ddot;
    d.cable_angular_accel[i] = q.cross(q_ddot);

    const Vec3 quad_accel = d.payload_accel +
                            R0 * (Om0_hat2 * quad.attachment -
                                  hat(quad.attachment) * d.payload_angular_accel) -
                            quad.cable_length * q_ddot;
    d.tensions[i] = q.dot(quad.mass * quad_accel - u[i] + quad.mass * g * e3());

    if (cmd.mode == ActuationMode::kFull) {
      const Vec3& w = state.quads[i].body_rate;
      d.quad_angular_accel[i] =
          quad.inertia.ldlt().solve(cmd.moments.at(i) - w.cross(quad.inertia * w));
    } else {
      d.quad_angular_accel[i].setZero();
    }
  }
  return d;
}

SystemState step(const SystemState& state, const ActuationCommand& cmd,
                 const SystemParams& params, double dt) {
  if (!(dt > 0.0 && dt <= kMaxStep)) {
    throw std::invalid_argument("step: dt must lie in (0, 0.01] s");
  }
  const int n = state.n();
  const VectorXd y = pack(state);
  const VectorXd k1 = flat_rate(state, cmd, params);
  const VectorXd k2 = flat_rate(unpack(y + 0.5 * dt * k1, n), cmd, params);
  const VectorXd k3 = flat_rate(unpack(y + 0.5 * dt * k2, n), cmd, params);
  const VectorXd k4 = flat_rate(unpack(y + dt * k3, n), cmd, params);
  const VectorXd next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw DynamicsError("step: non-finite state after integration\n" + describe(state));
  }
  SystemState out = unpack(next, n);
  project(out);
  return out;
}

std::string describe(const SystemState& s) {
  std::ostringstream os;
  os << std::setprecision(17);
  const Eigen::IOFormat row(Eigen::FullPrecision, Eigen::DontAlignCols, ", ", ", ", "", "", "[", "]");
  os << "x0=" << s.x0.transpose().format(row) << " v0=" << s.v0.transpose().format(row)
     << " R0=" << s.R0.reshaped().transpose().format(row)
     << " Omega0=" << s.Omega0.transpose().format(row) << '\n';
  for (int i = 0; i < s.n(); ++i) {
    os << "cable " << i + 1 << ": q=" << s.cables[i].q.transpose().format(row)
       << " omega=" << s.cables[i].omega.transpose().format(row) << '\n';
    os << "quad " << i + 1 << ": R=" << s.quads[i].rotation.reshaped().transpose().format(row)
       << " Omega=" << s.quads[i].body_rate.transpose().format(row) << '\n';
  }
  return os.str();
}

}  // namespace cablelift
