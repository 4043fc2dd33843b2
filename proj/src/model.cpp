#include "cablelift/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace cablelift {

namespace {

bool is_spd(const Mat3& m) {
  if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * m.norm()) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
  return eig.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

double SystemParams::total_mass() const {
  return std::accumulate(quads.begin(), quads.end(), payload_mass,
                         [](double acc, const QuadParams& q) { return acc + q.mass; });
}

void SystemParams::validate() const {
  if (quads.empty()) throw ModelError("system needs at least one quadcopter");
  if (!(payload_mass > 0.0)) throw ModelError("payload mass must be positive");
  if (!is_spd(payload_inertia)) throw ModelError("payload inertia must be SPD");
  if (!(gravity >= 0.0) || !std::isfinite(gravity)) throw ModelError("gravity must be finite and >= 0");
  for (std::size_t i = 0; i < quads.size(); ++i) {
    const auto& q = quads[i];
    std::ostringstream who;
    who << "quad " << i + 1 << ": ";
    if (!(q.mass > 0.0)) throw ModelError(who.str() + "mass must be positive");
    if (!(q.cable_length > 0.0)) throw ModelError(who.str() + "cable length must be positive");
    if (!q.attachment.allFinite()) throw ModelError(who.str() + "attachment must be finite");
    if (!is_spd(q.inertia)) throw ModelError(who.str() + "inertia must be SPD");
  }
}

void SystemState::validate(double tolerance) const {
  if (static_cast<int>(quads.size()) != n()) throw ModelError("cable and quad counts differ");
  if (!x0.allFinite() || !v0.allFinite() || !Omega0.allFinite()) {
    throw ModelError("payload state is not finite");
  }
  if (!is_rotation(R0, tolerance)) throw ModelError("payload attitude is not a rotation");
  for (int i = 0; i < n(); ++i) {
    const auto& c = cables[i];
    if (!is_unit(c.q, tolerance)) throw ModelError("cable direction is not unit length");
    if (!c.omega.allFinite() || std::abs(c.omega.dot(c.q)) > tolerance) {
      throw ModelError("cable angular velocity must be orthogonal to the cable");
    }
    if (!is_rotation(quads[i].rotation, tolerance) || !quads[i].body_rate.allFinite()) {
      throw ModelError("quad attitude is not a rotation");
    }
  }
}

ActuationCommand ActuationCommand::reduced(std::vector<Vec3> u) {
  ActuationCommand cmd;
  cmd.mode = ActuationMode::kReduced;
  cmd.thrust_vectors = std::move(u);
  return cmd;
}

ActuationCommand ActuationCommand::full(std::vector<double> f, std::vector<Vec3> m) {
  if (f.size() != m.size()) throw ModelError("thrust and moment counts differ");
  for (double fi : f) {
    if (!(fi >= 0.0)) throw ModelError("rotor thrust must be non-negative");
  }
  ActuationCommand cmd;
  cmd.mode = ActuationMode::kFull;
  cmd.thrusts = std::move(f);
  cmd.moments = std::move(m);
  return cmd;
}

std::vector<Vec3> ActuationCommand::inertial_thrusts(const SystemState& state) const {
  if (mode == ActuationMode::kReduced) {
    if (static_cast<int>(thrust_vectors.size()) != state.n()) {
      throw ModelError("command size does not match the number of quads");
    }
    return thrust_vectors;
  }
  if (static_cast<int>(thrusts.size()) != state.n()) {
    throw ModelError("command size does not match the number of quads");
  }
  std::vector<Vec3> u(thrusts.size());
  for (std::size_t i = 0; i < thrusts.size(); ++i) {
    u[i] = thrusts[i] * state.quads[i].rotation.col(2);
  }
  return u;
}

SystemState hover_state(int n, const Vec3& x0) {
  SystemState s;
  s.x0 = x0;
  s.cables.assign(n, CableState{});
  s.quads.assign(n, QuadState{});
  return s;
}

}  // namespace cablelift
