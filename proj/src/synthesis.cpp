#include "cablelift/synthesis.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace cablelift {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

namespace {

double abscissa(const MatrixXd& a) { return a.eigenvalues().real().maxCoeff(); }

// Quadratic cost tr(P) of the structured gain on the controlled subspace,
// with the gradient restricted to the free entries.
struct StructuredProblem {
  MatrixXd ar, br, qr, r, basis, mask;

  MatrixXd closed(const MatrixXd& k) const { return ar - br * k * basis; }

  double cost(const MatrixXd& k, MatrixXd* gradient) const {
    const MatrixXd acl = closed(k);
    if (abscissa(acl) >= 0.0) return std::numeric_limits<double>::infinity();
    const MatrixXd kr = k * basis;
    const MatrixXd p = solve_lyapunov(acl.transpose(), qr + kr.transpose() * r * kr);
    if (gradient) {
      const MatrixXd l = solve_lyapunov(acl, MatrixXd::Identity(acl.rows(), acl.cols()));
      *gradient = (2.0 * (r * kr - br.transpose() * p) * l * basis.transpose()).cwiseProduct(mask);
    }
    return p.trace();
  }
};

}  // namespace

MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& q) {
  const Eigen::Index n = a.rows();
  Eigen::ComplexSchur<MatrixXd> schur(a);
  const MatrixXcd& u = schur.matrixU();
  const MatrixXcd& t = schur.matrixT();
  const MatrixXcd c = -u.adjoint() * q.cast<std::complex<double>>() * u;
  MatrixXcd y = MatrixXcd::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = c.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) rhs -= std::conj(t(j, k)) * y.col(k);
    MatrixXcd lhs = t;
    lhs.diagonal().array() += std::conj(t(j, j));
    y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  MatrixXd x = (u * y * u.adjoint()).real();
  if ((q - q.transpose()).cwiseAbs().maxCoeff() == 0.0) x = 0.5 * (x + x.transpose()).eval();
  return x;
}

MatrixXd solve_care(const MatrixXd& a, const MatrixXd& b, const MatrixXd& q,
                    const MatrixXd& r) {
  const Eigen::Index n = a.rows();
  const MatrixXd r_inv = r.inverse();
  const MatrixXd s = b * r_inv * b.transpose();
  MatrixXd h(2 * n, 2 * n);
  h << a, -s, -q, -a.transpose();
  Eigen::EigenSolver<MatrixXd> eig(h);
  MatrixXcd stable(2 * n, n);
  Eigen::Index count = 0;
  for (Eigen::Index k = 0; k < 2 * n; ++k) {
    if (eig.eigenvalues()(k).real() < 0.0) {
      if (count == n) throw SynthesisError("CARE: Hamiltonian has too many stable eigenvalues");
      stable.col(count++) = eig.eigenvectors().col(k);
    }
  }
  if (count != n) throw SynthesisError("CARE: Hamiltonian has eigenvalues on the imaginary axis");
  const MatrixXcd u1 = stable.topRows(n);
  const MatrixXcd u2 = stable.bottomRows(n);
  MatrixXd x = (u2 * u1.fullPivLu().inverse()).real();
  x = 0.5 * (x + x.transpose()).eval();

  // Newton-Kleinman refinement.
  for (int iter = 0; iter < 30; ++iter) {
    const MatrixXd k = r_inv * b.transpose() * x;
    const MatrixXd acl = a - b * k;
    if (abscissa(acl) >= 0.0) throw SynthesisError("CARE: iterate is not stabilizing");
    const MatrixXd next = solve_lyapunov(acl.transpose(), q + k.transpose() * r * k);
    const double change = (next - x).cwiseAbs().maxCoeff();
    x = next;
    if (change <= 1e-13 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
  }
  const MatrixXd residual = a.transpose() * x + x * a - x * s * x + q;
  if (!x.allFinite() ||
      residual.cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, q.cwiseAbs().maxCoeff())) {
    throw SynthesisError("CARE: residual too large");
  }
  return x;
}

MatrixXd lqr(const MatrixXd& a, const MatrixXd& b, const MatrixXd& q, const MatrixXd& r) {
  return r.inverse() * b.transpose() * solve_care(a, b, q, r);
}

ControlGains synthesize_gains(const LinearModel& model, const SynthesisOptions& options,
                              SynthesisReport* report) {
  const int n = model.n;
  if (n < 2) throw SynthesisError("gain synthesis needs at least one follower");
  const int d = reduced_config_dim(n);
  const std::vector<int> keep = attitude_coordinates(n);
  std::vector<int> cols;
  for (int c = 3; c < 3 * n; ++c) cols.push_back(c);

  const MatrixXd a_sub = model.A0(keep, keep);
  const MatrixXd b_sub = model.B0(keep, cols);
  StructuredProblem prob;
  prob.basis = controllable_subspace(a_sub, b_sub);
  const MatrixXd& v = prob.basis;

  Eigen::VectorXd weights(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    weights(k) = keep[k] < d ? options.attitude_weight : options.rate_weight;
  }
  prob.ar = v.transpose() * a_sub * v;
  prob.br = v.transpose() * b_sub;
  prob.qr = v.transpose() * weights.asDiagonal() * v;
  prob.r = options.input_weight * MatrixXd::Identity(cols.size(), cols.size());

  // Position of each z index inside `keep`.
  std::vector<int> where(2 * d, -1);
  for (std::size_t k = 0; k < keep.size(); ++k) where[keep[k]] = static_cast<int>(k);
  prob.mask = MatrixXd::Zero(cols.size(), keep.size());
  for (int i = 1; i < n; ++i) {
    const int row = 3 * (i - 1);
    for (int c : {3, 4, 5, d + 3, d + 4, d + 5, 6 + 2 * i, 7 + 2 * i, d + 6 + 2 * i,
                  d + 7 + 2 * i}) {
      prob.mask.block(row, where[c], 3, 1).setOnes();
    }
  }

  const MatrixXd k_opt = lqr(prob.ar, prob.br, prob.qr, prob.r) * v.transpose();
  MatrixXd k = k_opt.cwiseProduct(prob.mask);

  SynthesisReport rep;
  rep.lqr_abscissa = abscissa(prob.closed(k_opt));
  rep.truncated_abscissa = abscissa(prob.closed(k));
  MatrixXd grad;
  double cost = prob.cost(k, &grad);
  rep.truncated_cost = cost;

  if (rep.truncated_abscissa > -options.required_margin) {
    if (!std::isfinite(cost)) {
      throw SynthesisError("truncated quadratic-regulator gains do not stabilize");
    }
    rep.refined = true;
    double step = 1e-3;
    for (int iter = 0; iter < options.max_refine_iterations && step > 1e-14; ++iter) {
      rep.iterations = iter + 1;
      MatrixXd next_grad;
      const MatrixXd trial = k - step * grad;
      const double next = prob.cost(trial, &next_grad);
      if (next < cost) {
        k = trial;
        cost = next;
        grad = next_grad;
        step *= 1.2;
      } else {
        step *= 0.5;
      }
    }
  }
  rep.final_cost = cost;

  ControlGains gains;
  MatrixXd k_full = MatrixXd::Zero(3 * n, 2 * d);
  k_full(cols, keep) = k;
  for (int i = 1; i < n; ++i) {
    FollowerGains g;
    g.K_eta = k_full.block<3, 3>(3 * i, 3);
    g.K_eta_dot = k_full.block<3, 3>(3 * i, d + 3);
    g.K_xi = k_full.block<3, 2>(3 * i, 6 + 2 * i);
    g.K_xi_dot = k_full.block<3, 2>(3 * i, d + 6 + 2 * i);
    gains.followers.push_back(g);
  }
  rep.analysis = closed_loop(model, stacked_gain(gains, n));
  rep.final_abscissa = rep.analysis.controlled_abscissa;
  if (report) *report = rep;
  if (!(rep.final_abscissa <= -options.required_margin)) {
    std::ostringstream msg;
    msg << "synthesized gains miss the stability margin: max Re = " << rep.final_abscissa;
    throw SynthesisError(msg.str());
  }
  return gains;
}

}  // namespace cablelift
