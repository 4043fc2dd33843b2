#ifndef CABLELIFT_DYNAMICS_HPP_
#define CABLELIFT_DYNAMICS_HPP_

#include <stdexcept>
#include <string>

#include "cablelift/model.hpp"

namespace cablelift {

/// Numerical failure inside the equations of motion or the integrator.
class DynamicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Energy {
  double kinetic = 0.0;    // J
  double potential = 0.0;  // J
  [[nodiscard]] double total() const { return kinetic + potential; }
};

Vec3 quad_position(const SystemState& state, const SystemParams& params, int i);
Vec3 quad_velocity(const SystemState& state, const SystemParams& params, int i);

Energy energy(const SystemState& state, const SystemParams& params);

/// Total linear momentum m0 v0 + sum m_i dx_i/dt.
Vec3 linear_momentum(const SystemState& state, const SystemParams& params);

/// Solves the coupled payload / cable equations for (x0'', Omega0', q_i'')
/// and evaluates each quad's rotational dynamics. Throws DynamicsError when
/// the coupled mass matrix is singular.
Derivatives accelerations(const SystemState& state, const ActuationCommand& cmd,
                          const SystemParams& params);

/// One fixed RK4 step followed by projection back onto the manifold.
/// dt must lie in (0, 0.01] s. The command is held over the step.
SystemState step(const SystemState& state, const ActuationCommand& cmd,
                 const SystemParams& params, double dt);

/// Human-readable dump used in numeric failure diagnostics.
std::string describe(const SystemState& state);

}  // namespace cablelift

#endif  // CABLELIFT_DYNAMICS_HPP_
