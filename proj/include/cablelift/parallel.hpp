#ifndef CABLELIFT_PARALLEL_HPP_
#define CABLELIFT_PARALLEL_HPP_

#include <functional>

#include <Eigen/Dense>

namespace cablelift {

/// Selects the serial reference kernel or its OpenMP counterpart. Both
/// produce bit-identical results.
enum class Execution { kSerial, kParallel };

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Central-difference Jacobian of `f` at `x`, one column per coordinate.
/// Columns are independent, so the parallel kernel splits them across
/// threads. `f` must be safe to call concurrently.
Eigen::MatrixXd central_difference_jacobian(const VectorField& f, const Eigen::VectorXd& x,
                                            double step, Execution exec);

/// Number of OpenMP threads the parallel kernels will use.
int parallel_threads();

}  // namespace cablelift

#endif  // CABLELIFT_PARALLEL_HPP_
