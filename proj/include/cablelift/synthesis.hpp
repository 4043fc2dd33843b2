#ifndef CABLELIFT_SYNTHESIS_HPP_
#define CABLELIFT_SYNTHESIS_HPP_

#include <stdexcept>

#include <Eigen/Dense>

#include "cablelift/controllers.hpp"
#include "cablelift/linearization.hpp"

namespace cablelift {

class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solves A X + X A^T + Q = 0 by complex Schur decomposition.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

/// Stabilizing solution of A^T X + X A - X B R^-1 B^T X + Q = 0. Stable
/// Hamiltonian eigenvectors give the initial guess, Newton-Kleinman polishes
/// it. Throws SynthesisError when no stabilizing solution is found.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& r);

/// K = R^-1 B^T X.
Eigen::MatrixXd lqr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                    const Eigen::MatrixXd& q, const Eigen::MatrixXd& r);

struct SynthesisOptions {
  double attitude_weight = 10.0;  // eta0 and cable chart coordinates
  double rate_weight = 1.0;
  double input_weight = 100.0;
  /// Controlled-subspace eigenvalues must satisfy Re <= -required_margin.
  double required_margin = 0.1;
  int max_refine_iterations = 600;
};

struct SynthesisReport {
  double lqr_abscissa = 0.0;        // unstructured optimum
  double truncated_abscissa = 0.0;  // after keeping only PAC / CAC blocks
  double final_abscissa = 0.0;
  bool refined = false;
  int iterations = 0;
  double truncated_cost = 0.0;
  double final_cost = 0.0;
  ClosedLoopAnalysis analysis;
};

/// Quadratic-regulator synthesis of the follower PAC / CAC gains on the
/// controlled subspace. The unstructured optimum is truncated to the PAC /
/// CAC pattern; if that misses the margin, the same cost is minimised by
/// descent over the structured entries, starting from the truncation.
/// Throws SynthesisError if the final gains fail the margin.
ControlGains synthesize_gains(const LinearModel& model, const SynthesisOptions& options = {},
                              SynthesisReport* report = nullptr);

}  // namespace cablelift

#endif  // CABLELIFT_SYNTHESIS_HPP_
