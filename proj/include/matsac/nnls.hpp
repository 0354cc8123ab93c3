#ifndef MATSAC_NNLS_HPP
#define MATSAC_NNLS_HPP

/// Nonnegative least squares, min ||Ax - b||_2 over x >= 0, by the
/// Lawson-Hanson active-set iteration: grow a passive set greedily on the
/// dual w = A^T (b - Ax), solve the unconstrained subproblem on it, and step
/// back to the boundary whenever the subproblem solution leaves the positive
/// orthant.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace matsac {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual_sq = 0.0;  // ||Ax - b||^2 at the returned point
  int iterations = 0;
  bool converged = false;
};

inline NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                       double dual_tol = 1e-12, int max_iter = -1) {
  const Eigen::Index m = a.rows(), n = a.cols();
  if (m != b.size()) throw std::invalid_argument("nnls: dimension mismatch");
  if (n == 0) throw std::invalid_argument("nnls: no columns");
  if (max_iter < 0) max_iter = static_cast<int>(30 + 10 * n);

  NnlsResult res;
  res.x = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Index> passive;
  std::vector<bool> in_passive(static_cast<std::size_t>(n), false);

  Eigen::VectorXd w = a.transpose() * b;
  double tol = dual_tol * std::max(1.0, w.lpNorm<Eigen::Infinity>());

  auto solve_passive = [&]() -> Eigen::VectorXd {
    Eigen::MatrixXd ap(m, static_cast<Eigen::Index>(passive.size()));
    for (std::size_t j = 0; j < passive.size(); ++j) ap.col(static_cast<Eigen::Index>(j)) = a.col(passive[j]);
    return ap.colPivHouseholderQr().solve(b);
  };

  int it = 0;
  while (it < max_iter) {
    ++it;
    w = a.transpose() * (b - a * res.x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!in_passive[static_cast<std::size_t>(i)] && w(i) > best_w) {
        best_w = w(i);
        best = i;
      }
    if (best < 0) {
      res.converged = true;
      break;
    }
    passive.push_back(best);
    in_passive[static_cast<std::size_t>(best)] = true;

    while (true) {
      Eigen::VectorXd z = solve_passive();
      double zmin = z.minCoeff();
      if (zmin > 0.0) {
        res.x.setZero();
        for (std::size_t j = 0; j < passive.size(); ++j)
          res.x(passive[j]) = z(static_cast<Eigen::Index>(j));
        break;
      }
      double alpha = 1.0;
      for (std::size_t j = 0; j < passive.size(); ++j)
        if (z(static_cast<Eigen::Index>(j)) <= 0.0) {
          double xj = res.x(passive[j]);
          alpha = std::min(alpha, xj / (xj - z(static_cast<Eigen::Index>(j))));
        }
      double scale = 0.0;
      for (std::size_t j = 0; j < passive.size(); ++j) {
        double xj = res.x(passive[j]);
        xj += alpha * (z(static_cast<Eigen::Index>(j)) - xj);
        res.x(passive[j]) = xj;
        scale = std::max(scale, xj);
      }
      std::vector<Eigen::Index> keep;
      for (std::size_t j = 0; j < passive.size(); ++j) {
        bool at_bound = z(static_cast<Eigen::Index>(j)) <= 0.0 &&
                        res.x(passive[j]) <= 1e-12 * std::max(1.0, scale);
        if (at_bound) {
          res.x(passive[j]) = 0.0;
          in_passive[static_cast<std::size_t>(passive[j])] = false;
        } else {
          keep.push_back(passive[j]);
        }
      }
      passive = keep;
      if (passive.empty()) break;
    }
  }
  res.iterations = it;
  res.residual_sq = (a * res.x - b).squaredNorm();
  return res;
}

}  // namespace matsac

#endif  // MATSAC_NNLS_HPP
