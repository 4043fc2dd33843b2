#include "cablelift/parallel.hpp"

#include <omp.h>

namespace cablelift {

namespace {

Eigen::VectorXd column(const VectorField& f, const Eigen::VectorXd& x, double step, int j) {
  Eigen::VectorXd xp = x;
  Eigen::VectorXd xm = x;
  xp(j) += step;
  xm(j) -= step;
  return (f(xp) - f(xm)) / (2.0 * step);
}

}  // namespace

Eigen::MatrixXd central_difference_jacobian(const VectorField& f, const Eigen::VectorXd& x,
                                            double step, Execution exec) {
  const Eigen::Index cols = x.size();
  const Eigen::Index rows = f(x).size();
  Eigen::MatrixXd jac(rows, cols);
  if (exec == Execution::kSerial) {
    for (Eigen::Index j = 0; j < cols; ++j) jac.col(j) = column(f, x, step, static_cast<int>(j));
    return jac;
  }
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index j = 0; j < cols; ++j) {
    jac.col(j) = column(f, x, step, static_cast<int>(j));
  }
  return jac;
}

int parallel_threads() { return omp_get_max_threads(); }

}  // namespace cablelift
