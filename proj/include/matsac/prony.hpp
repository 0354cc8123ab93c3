#ifndef MATSAC_PRONY_HPP
#define MATSAC_PRONY_HPP

/// Pole recovery from Fourier coefficients of a circle trace.
///
/// If G(z(t)) restricted to |t| = 1 extends to a function with d simple poles
/// t_1..t_d outside the unit circle (and is otherwise analytic there,
/// vanishing at infinity), its negative-power Fourier coefficients satisfy a
/// rank-d Hankel structure.  The recovery pipeline is: trapezoid/FFT Fourier
/// coefficients, singular-value rank detection on a Hankel block, the null
/// vector of the rank-(d+1) block as a polynomial whose roots are the
/// reciprocals 1/t_j, then a companion-matrix root solve.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "matsac/model.hpp"

namespace matsac {

/// Trapezoid-rule Fourier coefficients of a periodic function, indexed
/// k = -n_samples/2 .. n_samples/2 - 1.
struct FourierCoefficients {
  int n_samples = 0;
  std::vector<Complex> values;

  int k_min() const { return -n_samples / 2; }
  int k_max() const { return n_samples / 2 - 1; }

  const Complex& at(int k) const {
    if (k < k_min() || k > k_max())
      throw std::invalid_argument(
          "FourierCoefficients: index outside the computed range");
    return values[static_cast<std::size_t>(k - k_min())];
  }
};

/// Computes hat G_k = (1/n_samples) sum_n f(theta_n) e^{-ik theta_n} on the
/// equispaced angles theta_n = 2 pi n / n_samples via one FFT.  n_samples
/// must be even and at least 4.
template <typename Sampler>
FourierCoefficients fourier_coefficients(Sampler&& sample, int n_samples) {
  if (n_samples < 4 || n_samples % 2 != 0)
    throw std::invalid_argument("fourier_coefficients: n_samples must be even and >= 4");
  std::vector<Complex> in(static_cast<std::size_t>(n_samples));
  for (int n = 0; n < n_samples; ++n)
    in[static_cast<std::size_t>(n)] = sample(2.0 * pi * n / n_samples);
  std::vector<Complex> out(static_cast<std::size_t>(n_samples));
  Eigen::FFT<double> fft;
  fft.fwd(out, in);

  FourierCoefficients fc;
  fc.n_samples = n_samples;
  fc.values.resize(static_cast<std::size_t>(n_samples));
  for (int k = fc.k_min(); k <= fc.k_max(); ++k) {
    int idx = k >= 0 ? k : k + n_samples;
    fc.values[static_cast<std::size_t>(k - fc.k_min())] =
        out[static_cast<std::size_t>(idx)] / static_cast<double>(n_samples);
  }
  return fc;
}

/// Hankel block H(i, j) = hat G_{i+j+1}, i = 0..rows-1, j = 0..cols-1, built
/// from the decaying power tail of the circle trace.
inline Eigen::MatrixXcd build_hankel(const FourierCoefficients& fc, int rows, int cols) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("build_hankel: block dimensions must be positive");
  if (rows + cols - 1 > fc.k_max())
    throw std::invalid_argument("build_hankel: not enough Fourier coefficients");
  Eigen::MatrixXcd h(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) h(i, j) = fc.at(i + j + 1);
  return h;
}

struct RankDetection {
  int rank = 0;
  bool saturated = false;
};

/// Smallest d with s_{d+1} / s_1 < noise_floor.  If no singular value drops
/// below the floor the full length is returned with the saturation flag set.
/// An identically zero spectrum (s_1 = 0) detects rank 0.
inline RankDetection detect_rank(std::span<const double> singular_values,
                                 double noise_floor) {
  if (singular_values.empty())
    throw std::invalid_argument("detect_rank: empty singular value list");
  if (!(noise_floor > 0.0) || !(noise_floor < 1.0))
    throw std::invalid_argument("detect_rank: noise_floor must lie in (0, 1)");
  double s1 = singular_values[0];
  if (s1 == 0.0) return {0, false};
  for (std::size_t d = 1; d < singular_values.size(); ++d)
    if (singular_values[d] / s1 < noise_floor)
      return {static_cast<int>(d), false};
  return {static_cast<int>(singular_values.size()), true};
}

namespace detail {

/// Roots of p_0 + p_1 t + ... + p_m t^m via the balanced companion matrix.
/// Leading coefficients within 1e-14 of the largest magnitude are trimmed;
/// trailing near-zero coefficients contribute roots at the origin.
inline std::vector<Complex> polynomial_roots(std::vector<Complex> p) {
  double scale = 0.0;
  for (const auto& c : p) scale = std::max(scale, std::abs(c));
  if (scale == 0.0)
    throw std::invalid_argument("polynomial_roots: zero polynomial");
  double tol = 1e-14 * scale;

  while (!p.empty() && std::abs(p.back()) <= tol) p.pop_back();
  if (p.size() <= 1) return {};

  std::size_t zeros = 0;
  while (zeros + 1 < p.size() && std::abs(p[zeros]) <= tol) ++zeros;
  std::vector<Complex> roots(zeros, Complex(0.0, 0.0));
  p.erase(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(zeros));

  const auto m = static_cast<Eigen::Index>(p.size()) - 1;
  if (m == 0) return roots;
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(m, m);
  for (Eigen::Index i = 0; i + 1 < m; ++i) companion(i + 1, i) = 1.0;
  for (Eigen::Index i = 0; i < m; ++i)
    companion(i, m - 1) = -p[static_cast<std::size_t>(i)] / p.back();

  // Parlett-Reinsch balancing in radix-2 powers.
  bool changed = true;
  while (changed) {
    changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j == i) continue;
        c += std::abs(companion(j, i));
        r += std::abs(companion(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double f = 1.0;
      double s = c + r;
      while (c < r / 2.0) {
        c *= 2.0;
        r /= 2.0;
        f *= 2.0;
      }
      while (c >= r * 2.0) {
        c /= 2.0;
        r *= 2.0;
        f /= 2.0;
      }
      if (c + r < 0.95 * s) {
        changed = true;
        companion.col(i) *= f;
        companion.row(i) /= f;
      }
    }
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(companion, false);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("polynomial_roots: eigenvalue iteration failed");
  for (Eigen::Index i = 0; i < m; ++i) roots.push_back(eig.eigenvalues()(i));
  return roots;
}

}  // namespace detail

namespace detail {

/// Fallback noise floor when the data carries no noise level: place it at
/// the geometric mean across the largest log-scale gap in the singular
/// values.
inline double heuristic_noise_floor(std::span<const double> s) {
  if (s.size() < 2 || s[0] == 0.0) return 1e-10;
  double best_gap = -1.0, floor = 1e-10;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    double hi = std::max(s[i], 1e-300);
    double lo = std::max(s[i + 1], 1e-300);
    double gap = std::log(hi / lo);
    if (gap > best_gap) {
      best_gap = gap;
      floor = std::sqrt(hi * lo) / s[0];
    }
  }
  return std::clamp(floor, 1e-15, 0.5);
}

}  // namespace detail

struct PronyResult {
  int d_max = 0;
  int l = 0;
  std::vector<double> singular_values;  // of the l x d_max detection block
  double noise_floor = 0.0;             // threshold actually applied
  bool heuristic_floor = false;
  int detected_rank = 0;
  bool saturated = false;
  std::vector<Complex> poly_coeffs;     // null-vector polynomial, degree d
  std::vector<Complex> exterior_poles;  // t_j with |t_j| > 1 + tol_interior
  std::vector<Complex> rejected_roots;  // reciprocal roots failing the filter
};

/// Full recovery: rank detection on the l x d_max block, null vector of the
/// l x (d+1) block as polynomial coefficients, roots inverted to candidate
/// nodes, and nodes kept only when strictly exterior (|t| > 1 + tol_interior).
/// Kept nodes are sorted by argument, then modulus.  Passing no noise floor
/// selects the largest-log-gap heuristic.
inline PronyResult prony_poles(const FourierCoefficients& fc, int d_max, int l,
                               std::optional<double> noise_floor,
                               double tol_interior = 1e-3) {
  if (d_max < 1) throw std::invalid_argument("prony_poles: d_max must be positive");
  if (l < d_max) throw std::invalid_argument("prony_poles: need l >= d_max");
  if (!(tol_interior > 0.0))
    throw std::invalid_argument("prony_poles: tol_interior must be positive");
  if (l + d_max > fc.k_max())
    throw std::invalid_argument(
        "prony_poles: not enough Fourier coefficients for the Hankel blocks "
        "(need n_samples >= 2 (d_max + l + 1))");

  PronyResult res;
  res.d_max = d_max;
  res.l = l;

  Eigen::MatrixXcd h = build_hankel(fc, l, d_max);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
  res.singular_values.assign(svd.singularValues().data(),
                             svd.singularValues().data() + svd.singularValues().size());
  res.heuristic_floor = !noise_floor.has_value();
  res.noise_floor = noise_floor.has_value()
                        ? *noise_floor
                        : detail::heuristic_noise_floor(res.singular_values);
  RankDetection det = detect_rank(res.singular_values, res.noise_floor);
  res.detected_rank = det.rank;
  res.saturated = det.saturated;
  if (det.rank == 0) return res;

  Eigen::MatrixXcd h1 = build_hankel(fc, l, det.rank + 1);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd1(h1, Eigen::ComputeFullV);
  Eigen::VectorXcd p = svd1.matrixV().col(det.rank);
  res.poly_coeffs.assign(p.data(), p.data() + p.size());

  std::vector<Complex> roots = detail::polynomial_roots(res.poly_coeffs);
  for (const auto& root : roots) {
    if (root == Complex(0.0, 0.0)) continue;  // node at infinity
    Complex t = 1.0 / root;
    if (std::abs(t) > 1.0 + tol_interior)
      res.exterior_poles.push_back(t);
    else
      res.rejected_roots.push_back(t);
  }
  std::sort(res.exterior_poles.begin(), res.exterior_poles.end(),
            [](const Complex& lhs, const Complex& rhs) {
              double la = std::arg(lhs), ra = std::arg(rhs);
              if (la != ra) return la < ra;
              return std::abs(lhs) < std::abs(rhs);
            });
  return res;
}

}  // namespace matsac

#endif  // MATSAC_PRONY_HPP
