#include "cablelift/linearization.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cablelift/dynamics.hpp"

namespace cablelift {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Maps chart rates (a', b') to q' at q = -e3.
Eigen::Matrix<double, 3, 2> cable_rate_map() {
  Eigen::Matrix<double, 3, 2> p;
  p << 0, 1, -1, 0, 0, 0;
  return p;
}

// x = N / D with derivatives.
struct Quotient {
  double value, rate, accel;
};

Quotient quotient(double n, double n_dot, double n_ddot, double d, double d_dot, double d_ddot) {
  return {n / d, (n_dot * d - n * d_dot) / (d * d),
          n_ddot / d - 2 * n_dot * d_dot / (d * d) - n * d_ddot / (d * d) +
              2 * n * d_dot * d_dot / (d * d * d)};
}

void check_cable(const Vec3& q, int i) {
  if (!(q.z() < 0.0)) {
    throw ChartError("cable " + std::to_string(i + 1) + " is outside the lower hemisphere");
  }
}

Vec3 payload_log(const Mat3& r) {
  try {
    return log_so3(r);
  } catch (const BranchError& e) {
    throw ChartError(std::string("payload attitude outside chart: ") + e.what());
  }
}

MatrixXd read_block(std::istream& is, const std::string& expected) {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> name >> rows >> cols) || name != expected || rows < 0 || cols < 0) {
    throw std::runtime_error("linear model: expected block '" + expected + "'");
  }
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!(is >> m(r, c))) throw std::runtime_error("linear model: truncated block " + expected);
    }
  }
  return m;
}

void write_block(std::ostream& os, const std::string& name, const MatrixXd& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      os << m(r, c);
    }
    os << '\n';
  }
}

std::vector<int> input_columns(const std::vector<int>& quads) {
  std::vector<int> cols;
  for (int i : quads) {
    for (int k = 0; k < 3; ++k) cols.push_back(3 * i + k);
  }
  return cols;
}

}  // namespace

HoverEquilibrium build_equilibrium(const SystemParams& params, const Vec3& x0) {
  HoverEquilibrium eq;
  const int n = params.n();
  eq.state = hover_state(n, x0);
  for (const auto& quad : params.quads) {
    const double f = (quad.mass + params.payload_mass / n) * params.gravity;
    eq.thrusts.push_back(f);
    eq.thrust_vectors.push_back(f * e3());
  }
  return eq;
}

ReducedState full_to_reduced(const SystemState& state, const HoverEquilibrium& eq) {
  const int n = state.n();
  if (n != eq.n()) throw ModelError("state and equilibrium have different quad counts");
  const int d = reduced_config_dim(n);
  ReducedState out{VectorXd::Zero(2 * d)};
  const Vec3 eta = payload_log(state.R0);
  out.z.segment<3>(0) = state.x0 - eq.state.x0;
  out.z.segment<3>(3) = eta;
  out.z.segment<3>(d) = state.v0;
  out.z.segment<3>(d + 3) = right_jacobian_inverse(eta) * state.Omega0;
  for (int i = 0; i < n; ++i) {
    const Vec3& q = state.cables[i].q;
    check_cable(q, i);
    const Vec3 q_dot = state.cables[i].omega.cross(q);
    const Quotient a = quotient(q.y(), q_dot.y(), 0, q.z(), q_dot.z(), 0);
    const Quotient b = quotient(-q.x(), -q_dot.x(), 0, q.z(), q_dot.z(), 0);
    out.z.segment<2>(6 + 2 * i) << a.value, b.value;
    out.z.segment<2>(d + 6 + 2 * i) << a.rate, b.rate;
  }
  return out;
}

SystemState reduced_to_full(const ReducedState& reduced, const HoverEquilibrium& eq) {
  const int n = reduced.n();
  if (n != eq.n() || reduced.z.size() != 2 * reduced_config_dim(n)) {
    throw ModelError("reduced state has the wrong dimension");
  }
  SystemState s = eq.state;
  const Vec3 eta = reduced.payload_attitude();
  s.x0 = eq.state.x0 + reduced.payload_offset();
  s.v0 = reduced.payload_velocity();
  s.R0 = exp_so3(eta);
  s.Omega0 = right_jacobian(eta) * reduced.payload_attitude_rate();
  for (int i = 0; i < n; ++i) {
    const Vec2 c = reduced.cable(i);
    const Vec2 c_dot = reduced.cable_rate(i);
    const Vec3 p(c.y(), -c.x(), -1.0);
    const Vec3 p_dot(c_dot.y(), -c_dot.x(), 0.0);
    const double r = p.norm();
    const Vec3 q = p / r;
    const Vec3 q_dot = (p_dot - q * q.dot(p_dot)) / r;
    s.cables[i].q = q;
    s.cables[i].omega = q.cross(q_dot);
  }
  return s;
}

VectorXd reduced_vector_field(const SystemParams& params, const HoverEquilibrium& eq,
                              const VectorXd& z, const VectorXd& du) {
  const int n = eq.n();
  const int d = reduced_config_dim(n);
  if (z.size() != 2 * d || du.size() != 3 * n) {
    throw ModelError("reduced vector field: dimension mismatch");
  }
  const ReducedState reduced{z};
  const SystemState s = reduced_to_full(reduced, eq);
  std::vector<Vec3> u = eq.thrust_vectors;
  for (int i = 0; i < n; ++i) u[i] += du.segment<3>(3 * i);
  const Derivatives acc = accelerations(s, ActuationCommand::reduced(u), params);

  VectorXd dz(2 * d);
  dz.head(d) = z.tail(d);
  const Vec3 eta = reduced.payload_attitude();
  const Vec3 eta_dot = reduced.payload_attitude_rate();
  dz.segment<3>(d) = acc.payload_accel;
  dz.segment<3>(d + 3) = right_jacobian_inverse(eta) * acc.payload_angular_accel +
                         right_jacobian_inverse_rate(eta, eta_dot) * s.Omega0;
  for (int i = 0; i < n; ++i) {
    const Vec3& q = s.cables[i].q;
    const Vec3 q_dot = s.cables[i].omega.cross(q);
    const Vec3& q_ddot = acc.cable_accel[i];
    const Quotient a = quotient(q.y(), q_dot.y(), q_ddot.y(), q.z(), q_dot.z(), q_ddot.z());
    const Quotient b = quotient(-q.x(), -q_dot.x(), -q_ddot.x(), q.z(), q_dot.z(), q_ddot.z());
    dz.segment<2>(d + 6 + 2 * i) << a.accel, b.accel;
  }
  return dz;
}

MatrixXd reduced_mass_matrix(const SystemParams& params) {
  const int n = params.n();
  const int d = reduced_config_dim(n);
  MatrixXd v0 = MatrixXd::Zero(3, d);
  MatrixXd omega = MatrixXd::Zero(3, d);
  v0.block<3, 3>(0, 0).setIdentity();
  omega.block<3, 3>(0, 3).setIdentity();
  MatrixXd m = params.payload_mass * v0.transpose() * v0 +
               omega.transpose() * params.payload_inertia * omega;
  for (int i = 0; i < n; ++i) {
    const auto& quad = params.quads[i];
    MatrixXd vi = MatrixXd::Zero(3, d);
    vi.block<3, 3>(0, 0).setIdentity();
    vi.block<3, 3>(0, 3) = -hat(quad.attachment);
    vi.block<3, 2>(0, 6 + 2 * i) = -quad.cable_length * cable_rate_map();
    m += quad.mass * vi.transpose() * vi;
  }
  return m;
}

LinearModel linearize(const SystemParams& params, const HoverEquilibrium& eq,
                      const LinearizeOptions& options) {
  params.validate();
  const int n = params.n();
  if (eq.n() != n) throw ModelError("equilibrium and params have different quad counts");
  const int d = reduced_config_dim(n);
  const VectorField f = [&](const VectorXd& x) {
    return reduced_vector_field(params, eq, x.head(2 * d), x.tail(3 * n));
  };
  const VectorXd origin = VectorXd::Zero(2 * d + 3 * n);
  const MatrixXd jac = central_difference_jacobian(f, origin, options.step, options.execution);
  const MatrixXd half = central_difference_jacobian(f, origin, options.step / 2, options.execution);
  const double scale = std::max(1.0, jac.cwiseAbs().maxCoeff());
  const double residual = (jac - half).cwiseAbs().maxCoeff() / scale;
  if (!std::isfinite(residual) || residual > options.richardson_tolerance) {
    std::ostringstream msg;
    msg << "finite-difference residual " << residual << " exceeds "
        << options.richardson_tolerance;
    throw LinearizationError(msg.str());
  }

  LinearModel model;
  model.n = n;
  model.A0 = jac.leftCols(2 * d);
  model.B0 = jac.rightCols(3 * n);
  model.A0.topRows(d).setZero();
  model.A0.block(0, d, d, d).setIdentity();
  model.B0.topRows(d).setZero();
  model.M = reduced_mass_matrix(params);
  model.G = -model.M * model.A0.block(d, 0, d, d);
  model.B = model.M * model.B0.bottomRows(d);
  return model;
}

void write_linear_model(std::ostream& os, const LinearModel& model) {
  const auto old_precision = os.precision(17);
  os << "cablelift-linear-model 1\n" << "n " << model.n << '\n';
  write_block(os, "M", model.M);
  write_block(os, "G", model.G);
  write_block(os, "B", model.B);
  write_block(os, "A0", model.A0);
  write_block(os, "B0", model.B0);
  os.precision(old_precision);
}

LinearModel read_linear_model(std::istream& is) {
  std::string magic, key;
  int version = 0;
  LinearModel model;
  if (!(is >> magic >> version) || magic != "cablelift-linear-model" || version != 1) {
    throw std::runtime_error("linear model: bad header");
  }
  if (!(is >> key >> model.n) || key != "n" || model.n < 1) {
    throw std::runtime_error("linear model: bad quad count");
  }
  model.M = read_block(is, "M");
  model.G = read_block(is, "G");
  model.B = read_block(is, "B");
  model.A0 = read_block(is, "A0");
  model.B0 = read_block(is, "B0");
  const int d = reduced_config_dim(model.n);
  if (model.M.rows() != d || model.M.cols() != d || model.G.rows() != d ||
      model.G.cols() != d || model.B.rows() != d || model.B.cols() != 3 * model.n ||
      model.A0.rows() != 2 * d || model.A0.cols() != 2 * d || model.B0.rows() != 2 * d ||
      model.B0.cols() != 3 * model.n) {
    throw std::runtime_error("linear model: block dimensions do not match n");
  }
  return model;
}

std::vector<int> attitude_coordinates(int n) {
  const int d = reduced_config_dim(n);
  std::vector<int> keep;
  for (int k = 3; k < d; ++k) keep.push_back(k);
  for (int k = d + 3; k < 2 * d; ++k) keep.push_back(k);
  return keep;
}

MatrixXd controllable_subspace(const MatrixXd& a, const MatrixXd& b, double tolerance) {
  const Eigen::Index dim = a.rows();
  const double a_norm = std::max(a.norm(), 1e-300);
  auto orth = [&](const MatrixXd& m) {
    if (m.cols() == 0) return MatrixXd(dim, 0);
    Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > tolerance * std::max(sv(0), 1.0)) ++rank;
    return MatrixXd(svd.matrixU().leftCols(rank));
  };
  MatrixXd basis = orth(b / std::max(b.norm(), 1e-300));
  for (Eigen::Index iter = 0; iter < dim; ++iter) {
    MatrixXd stacked(dim, 2 * basis.cols());
    stacked << basis, a * basis / a_norm;
    MatrixXd next = orth(stacked);
    if (next.cols() == basis.cols()) break;
    basis = std::move(next);
  }
  return basis;
}

ClosedLoopAnalysis closed_loop(const LinearModel& model, const MatrixXd& gain,
                               std::vector<int> actuated) {
  const int n = model.n;
  const int d = reduced_config_dim(n);
  if (gain.rows() != 3 * n || gain.cols() != 2 * d) {
    throw ModelError("gain must be 3n x 2(6+2n)");
  }
  if (actuated.empty()) {
    if (n == 1) {
      actuated.push_back(0);
    } else {
      for (int i = 1; i < n; ++i) actuated.push_back(i);
    }
  }
  const MatrixXd a_cl = model.A0 - model.B0 * gain;
  ClosedLoopAnalysis out;
  out.eigenvalues = a_cl.eigenvalues();
  out.hurwitz = (out.eigenvalues.real().array() < 0.0).all();

  const std::vector<int> keep = attitude_coordinates(n);
  const std::vector<int> cols = input_columns(actuated);
  const MatrixXd a_sub = model.A0(keep, keep);
  const MatrixXd b_sub = model.B0(keep, cols);
  const MatrixXd basis = controllable_subspace(a_sub, b_sub);
  out.controlled_dim = static_cast<int>(basis.cols());
  if (out.controlled_dim == 0) {
    out.controlled_eigenvalues.resize(0);
    out.controlled_abscissa = 0.0;
    return out;
  }
  const MatrixXd restricted = basis.transpose() * a_cl(keep, keep) * basis;
  out.controlled_eigenvalues = restricted.eigenvalues();
  out.controlled_abscissa = out.controlled_eigenvalues.real().maxCoeff();
  out.controlled_hurwitz = out.controlled_abscissa < 0.0;
  return out;
}

}  // namespace cablelift
