#ifndef CABLELIFT_LINEARIZATION_HPP_
#define CABLELIFT_LINEARIZATION_HPP_

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cablelift/model.hpp"
#include "cablelift/parallel.hpp"

namespace cablelift {

/// The state lies outside the local chart used for the reduced coordinates
/// (payload rotation near pi, or a cable in the upper hemisphere).
class ChartError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class LinearizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Level payload, vertical cables, level quads, zero velocities, with each
/// quad carrying its own weight plus an equal share of the payload.
struct HoverEquilibrium {
  SystemState state;
  std::vector<Vec3> thrust_vectors;  // u_i, N
  std::vector<double> thrusts;       // f_i, N

  [[nodiscard]] int n() const { return state.n(); }
};

HoverEquilibrium build_equilibrium(const SystemParams& params, const Vec3& x0 = Vec3::Zero());

/// Number of configuration coordinates 6 + 2n.
inline int reduced_config_dim(int n) { return 6 + 2 * n; }

/// z = [dx0, eta0, C^T xi_1 .. C^T xi_n, and their rates]. Cables use the
/// gnomonic chart through -e3, so C^T xi = (q_y, -q_x) / q_z, which equals
/// C^T (e3 x dq) to first order.
struct ReducedState {
  Eigen::VectorXd z;

  [[nodiscard]] int n() const { return static_cast<int>((z.size() / 2 - 6) / 2); }
  [[nodiscard]] int config_dim() const { return static_cast<int>(z.size() / 2); }
  [[nodiscard]] Vec3 payload_offset() const { return z.segment<3>(0); }
  [[nodiscard]] Vec3 payload_attitude() const { return z.segment<3>(3); }
  [[nodiscard]] Vec2 cable(int i) const { return z.segment<2>(6 + 2 * i); }
  [[nodiscard]] Vec3 payload_velocity() const { return z.segment<3>(config_dim()); }
  [[nodiscard]] Vec3 payload_attitude_rate() const { return z.segment<3>(config_dim() + 3); }
  [[nodiscard]] Vec2 cable_rate(int i) const { return z.segment<2>(config_dim() + 6 + 2 * i); }
};

/// Chart coordinates of a full state. Throws ChartError outside the chart.
ReducedState full_to_reduced(const SystemState& state, const HoverEquilibrium& eq);

/// Inverse chart; quad attitudes are set to the equilibrium values.
SystemState reduced_to_full(const ReducedState& reduced, const HoverEquilibrium& eq);

/// dz/dt of the nonlinear reduced-mode dynamics with u_i = u_ie + du_i.
Eigen::VectorXd reduced_vector_field(const SystemParams& params, const HoverEquilibrium& eq,
                                     const Eigen::VectorXd& z, const Eigen::VectorXd& du);

/// Kinetic-energy metric of the reduced coordinates at hover.
Eigen::MatrixXd reduced_mass_matrix(const SystemParams& params);

/// M x'' + G x = B du and dz/dt = A0 z + B0 du about hover.
struct LinearModel {
  int n = 0;
  Eigen::MatrixXd M;
  Eigen::MatrixXd G;
  Eigen::MatrixXd B;
  Eigen::MatrixXd A0;
  Eigen::MatrixXd B0;
};

struct LinearizeOptions {
  double step = 1e-5;
  /// Central differences at step and step/2 must agree to this relative level.
  double richardson_tolerance = 1e-5;
  Execution execution = Execution::kParallel;
};

LinearModel linearize(const SystemParams& params, const HoverEquilibrium& eq,
                      const LinearizeOptions& options = {});

/// Plain-text model format: a "cablelift-linear-model 1" line, "n <n>", then
/// one block per matrix: "<name> <rows> <cols>" followed by rows of
/// whitespace-separated values in row-major order.
void write_linear_model(std::ostream& os, const LinearModel& model);
LinearModel read_linear_model(std::istream& is);

struct ClosedLoopAnalysis {
  Eigen::VectorXcd eigenvalues;             // eig(A0 - B0 K)
  bool hurwitz = false;                     // all real parts < 0
  Eigen::VectorXcd controlled_eigenvalues;  // on the controlled subspace
  bool controlled_hurwitz = false;
  double controlled_abscissa = 0.0;         // max real part there
  int controlled_dim = 0;
};

/// Indices of z spanning the controlled subspace's ambient space: every
/// coordinate except the payload translation and its rate.
std::vector<int> attitude_coordinates(int n);

/// Orthonormal basis of the controllable subspace of (A, B).
Eigen::MatrixXd controllable_subspace(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                      double tolerance = 1e-9);

/// Eigen-analysis of A0 - B0 K. The controlled subspace drops the
/// translation modes (owned by the leader) and anything not reachable from
/// the actuated quads. `actuated` lists 0-based quad indices; empty means
/// the followers (or quad 0 when n == 1).
ClosedLoopAnalysis closed_loop(const LinearModel& model, const Eigen::MatrixXd& gain,
                               std::vector<int> actuated = {});

}  // namespace cablelift

#endif  // CABLELIFT_LINEARIZATION_HPP_
