#ifndef MATSAC_QP_HPP
#define MATSAC_QP_HPP

/// Dense convex quadratic program with inequality constraints,
///
///     min 1/2 x^T Q x + c^T x   subject to   G x <= h,
///
/// solved by a primal active-set method: starting from a feasible point,
/// repeatedly solve the equality-constrained subproblem on the working set
/// through a null-space (QR) reduction, step to the nearest blocking
/// constraint, and drop constraints with negative multipliers at stationary
/// points.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace matsac {

struct QpOptions {
  double feas_tol = 1e-8;      // accepted primal constraint violation
  double kkt_tol = 1e-8;       // accepted stationarity residual (relative)
  int max_iterations = 100000;
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // one per constraint row, zero off the active set
  double objective = 0.0;
  double max_violation = 0.0;   // max(Gx - h), negative when strictly interior
  double stationarity = 0.0;    // ||Qx + c + G^T lambda||_inf / max(1, ||c||_inf)
  int iterations = 0;
  bool converged = false;
};

inline QpResult solve_qp(const Eigen::MatrixXd& q_in, const Eigen::VectorXd& c,
                         const Eigen::MatrixXd& g_in, const Eigen::VectorXd& h_in,
                         const Eigen::VectorXd& x0, const QpOptions& opt = {}) {
  const Eigen::Index n = q_in.rows();
  const Eigen::Index m = g_in.rows();
  if (q_in.cols() != n || c.size() != n || x0.size() != n)
    throw std::invalid_argument("solve_qp: objective dimension mismatch");
  if (g_in.cols() != n || h_in.size() != m)
    throw std::invalid_argument("solve_qp: constraint dimension mismatch");

  Eigen::MatrixXd q = 0.5 * (q_in + q_in.transpose());

  // Normalized constraint rows stabilize the ratio test and rank checks.
  Eigen::MatrixXd g = g_in;
  Eigen::VectorXd h = h_in;
  for (Eigen::Index i = 0; i < m; ++i) {
    double nrm = g.row(i).norm();
    if (nrm == 0.0) {
      if (h(i) < 0.0) throw std::invalid_argument("solve_qp: infeasible zero row");
      continue;
    }
    g.row(i) /= nrm;
    h(i) /= nrm;
  }

  QpResult res;
  res.x = x0;
  if (m > 0 && ((g * res.x - h).maxCoeff() > opt.feas_tol))
    throw std::invalid_argument("solve_qp: start point infeasible");

  std::vector<Eigen::Index> active;
  std::vector<bool> in_active(static_cast<std::size_t>(m), false);
  Eigen::VectorXd lambda_active;

  Eigen::LDLT<Eigen::MatrixXd> q_ldlt(q);

  auto eq_step = [&](Eigen::VectorXd& p, Eigen::VectorXd& lambda) {
    Eigen::VectorXd grad = q * res.x + c;
    const auto na = static_cast<Eigen::Index>(active.size());
    if (na == 0) {
      p = q_ldlt.solve(-grad);
      if (!p.allFinite() || (q * p + grad).lpNorm<Eigen::Infinity>() >
                                1e-6 * std::max(1.0, grad.lpNorm<Eigen::Infinity>()))
        throw std::runtime_error("solve_qp: hessian solve failed");
      lambda.resize(0);
      return;
    }
    Eigen::MatrixXd gat(n, na);
    for (Eigen::Index j = 0; j < na; ++j)
      gat.col(j) = g.row(active[static_cast<std::size_t>(j)]).transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gat);
    Eigen::MatrixXd qfull = qr.householderQ();
    Eigen::MatrixXd rtop = qr.matrixQR().topRows(na).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < na; ++j)
      if (std::abs(rtop(j, j)) < 1e-12)
        throw std::runtime_error("solve_qp: degenerate working set");
    if (na >= n) {
      p = Eigen::VectorXd::Zero(n);
    } else {
      Eigen::MatrixXd zbasis = qfull.rightCols(n - na);
      Eigen::MatrixXd qr_red = zbasis.transpose() * q * zbasis;
      Eigen::VectorXd rhs = -zbasis.transpose() * grad;
      Eigen::VectorXd y = qr_red.ldlt().solve(rhs);
      if (!y.allFinite()) throw std::runtime_error("solve_qp: reduced hessian solve failed");
      p = zbasis * y;
    }
    lambda = qr.solve(-grad);
  };

  const double step_tol = 1e-13;
  int it = 0;
  while (it < opt.max_iterations) {
    ++it;
    Eigen::VectorXd p, lambda;
    eq_step(p, lambda);

    if (p.lpNorm<Eigen::Infinity>() <= step_tol * (1.0 + res.x.lpNorm<Eigen::Infinity>())) {
      if (active.empty()) {
        res.converged = true;
        break;
      }
      Eigen::Index drop = -1;
      double most_negative = -1e-12;
      for (Eigen::Index j = 0; j < lambda.size(); ++j)
        if (lambda(j) < most_negative) {
          most_negative = lambda(j);
          drop = j;
        }
      if (drop < 0) {
        lambda_active = lambda;
        res.converged = true;
        break;
      }
      in_active[static_cast<std::size_t>(active[static_cast<std::size_t>(drop)])] = false;
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
      continue;
    }

    double alpha = 1.0;
    Eigen::Index blocker = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_active[static_cast<std::size_t>(i)]) continue;
      double d = g.row(i).dot(p);
      if (d <= 1e-14 * p.lpNorm<Eigen::Infinity>()) continue;
      double slack = h(i) - g.row(i).dot(res.x);
      double ai = std::max(slack, 0.0) / d;
      if (ai < alpha) {
        alpha = ai;
        blocker = i;
      }
    }
    res.x += alpha * p;
    if (blocker >= 0) {
      active.push_back(blocker);
      in_active[static_cast<std::size_t>(blocker)] = true;
    }
  }

  res.iterations = it;
  res.multipliers = Eigen::VectorXd::Zero(m);
  if (res.converged && lambda_active.size() == static_cast<Eigen::Index>(active.size()))
    for (std::size_t j = 0; j < active.size(); ++j)
      res.multipliers(active[j]) = lambda_active(static_cast<Eigen::Index>(j));

  res.objective = 0.5 * res.x.dot(q * res.x) + c.dot(res.x);
  res.max_violation = m > 0 ? (g_in * res.x - h_in).maxCoeff() : 0.0;
  Eigen::VectorXd stat = q * res.x + c;
  if (m > 0) stat += g.transpose() * res.multipliers;
  res.stationarity = stat.lpNorm<Eigen::Infinity>() / std::max(1.0, c.lpNorm<Eigen::Infinity>());
  return res;
}

}  // namespace matsac

#endif  // MATSAC_QP_HPP
