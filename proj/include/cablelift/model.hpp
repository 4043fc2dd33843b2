#ifndef CABLELIFT_MODEL_HPP_
#define CABLELIFT_MODEL_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include "cablelift/manifold.hpp"

namespace cablelift {

/// Thrown for invalid parameters or states supplied by the caller.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One quadcopter and the cable that ties it to the payload.
struct QuadParams {
  double mass = 0.052;                                          // kg
  Mat3 inertia = Vec3(3e-5, 3e-5, 5e-5).asDiagonal();           // kg m^2
  double cable_length = 0.5;                                    // m
  Vec3 attachment = Vec3::Zero();  // payload body frame, m
};

struct SystemParams {
  double payload_mass = 0.024;  // kg
  Mat3 payload_inertia = Mat3::Identity() * 1e-4;
  std::vector<QuadParams> quads;
  double gravity = 9.81;

  [[nodiscard]] int n() const { return static_cast<int>(quads.size()); }
  [[nodiscard]] double total_mass() const;

  /// Throws ModelError on n < 1, non-positive masses or lengths, or
  /// inertias that are not symmetric positive definite.
  void validate() const;
};

struct CableState {
  Vec3 q = -e3();                  // unit direction, quad -> attachment
  Vec3 omega = Vec3::Zero();       // rad/s, kept orthogonal to q
};

struct QuadState {
  Mat3 rotation = Mat3::Identity();
  Vec3 body_rate = Vec3::Zero();   // rad/s, body frame
};

/// Point on R^3 x SO(3) x (S^2 x SO(3))^n with its velocities.
struct SystemState {
  Vec3 x0 = Vec3::Zero();
  Vec3 v0 = Vec3::Zero();
  Mat3 R0 = Mat3::Identity();
  Vec3 Omega0 = Vec3::Zero();
  std::vector<CableState> cables;
  std::vector<QuadState> quads;

  [[nodiscard]] int n() const { return static_cast<int>(cables.size()); }

  /// Throws ModelError if any manifold invariant is violated beyond `tolerance`.
  void validate(double tolerance = 1e-8) const;
};

enum class ActuationMode { kReduced, kFull };

/// Reduced mode: one inertial thrust vector per quad. Full mode: scalar
/// thrust along each quad's b3 plus a body moment.
struct ActuationCommand {
  ActuationMode mode = ActuationMode::kReduced;
  std::vector<Vec3> thrust_vectors;  // reduced, N
  std::vector<double> thrusts;       // full, N, >= 0
  std::vector<Vec3> moments;         // full, N m

  static ActuationCommand reduced(std::vector<Vec3> u);
  static ActuationCommand full(std::vector<double> f, std::vector<Vec3> m);

  /// u_i in the inertial frame for the given state.
  [[nodiscard]] std::vector<Vec3> inertial_thrusts(const SystemState& state) const;
};

struct Derivatives {
  Vec3 payload_accel;                    // d2 x0 / dt2
  Vec3 payload_angular_accel;            // d Omega0 / dt
  std::vector<Vec3> cable_accel;         // d2 q_i / dt2
  std::vector<Vec3> cable_angular_accel; // d omega_i / dt
  std::vector<Vec3> quad_angular_accel;  // d Omega_i / dt
  std::vector<double> tensions;          // N, positive when taut
};

/// Hover-like state: level payload at x0, vertical cables, level quads.
SystemState hover_state(int n, const Vec3& x0 = Vec3::Zero());

}  // namespace cablelift

#endif  // CABLELIFT_MODEL_HPP_
