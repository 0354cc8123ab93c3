#ifndef MATSAC_INTERP_HPP
#define MATSAC_INTERP_HPP

/// Interpolants that extend Matsubara samples to an imaginary-axis segment.
///
/// The pole-basis interpolant targets gapped discrete spectra: it expands G
/// in simple real poles clustered toward the spectral gap and fits the
/// expansion weights to the samples by a truncated-SVD least-squares solve.
///
/// The reciprocal-spline interpolant targets quasi-particle spectra: it
/// interpolates H = 1/G on the sampled segment [ai, bi] with a C^4 quintic
/// spline (closed by rational end-derivative estimates, stored in Hermite
/// form as value plus two derivatives per knot) and evaluates G as 1/H.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iostream>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "matsac/model.hpp"

namespace matsac {

/// G(z) ~ (1/2pi) sum_k X_k / (z - x_k) with fixed real nodes x_k.
struct PoleBasisInterpolant {
  std::vector<double> nodes;
  std::vector<Complex> weights;
  double b = 0.0;         // half-length of the target segment [-bi, bi]
  double residual = 0.0;  // ||C X - g||_2 of the least-squares fit
  int svd_rank = 0;       // columns kept by the cutoff
};

/// Real nodes x_k = epsilon / cos(k pi / (n_nodes - 1)) for the half-range
/// k = 0..n_nodes/2-1, mirrored to negative values so the set is exactly
/// antisymmetric.  Returned sorted ascending.  n_nodes must be even so no
/// node falls at infinity.
inline std::vector<double> chebyshev_pole_nodes(double epsilon, int n_nodes) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("chebyshev_pole_nodes: epsilon must be positive");
  if (n_nodes < 2 || n_nodes % 2 != 0)
    throw std::invalid_argument("chebyshev_pole_nodes: n_nodes must be even and >= 2");
  int half = n_nodes / 2;
  std::vector<double> nodes(static_cast<std::size_t>(n_nodes));
  for (int k = 0; k < half; ++k) {
    double x = epsilon / std::cos(k * pi / (n_nodes - 1.0));
    nodes[static_cast<std::size_t>(half + k)] = x;
    nodes[static_cast<std::size_t>(half - 1 - k)] = -x;
  }
  return nodes;
}

/// Least-squares fit of pole weights to the dataset samples through the
/// truncated pseudoinverse: singular values below svd_cutoff times the
/// largest are discarded.
inline PoleBasisInterpolant fit_pole_weights(const MatsubaraDataset& data,
                                             std::span<const double> nodes,
                                             double svd_cutoff = 1e-8) {
  if (nodes.empty()) throw std::invalid_argument("fit_pole_weights: empty node list");
  if (data.points.size() != data.samples.size() || data.points.empty())
    throw std::invalid_argument("fit_pole_weights: dataset points/samples mismatch");
  if (!(svd_cutoff > 0.0) || !(svd_cutoff < 1.0))
    throw std::invalid_argument("fit_pole_weights: svd_cutoff must lie in (0, 1)");

  // The weights stand in for redistributed spectral mass, so they are real
  // decision variables; splitting each sample into its real and imaginary
  // part keeps the fitted expansion Schwarz-symmetric and accurate on the
  // conjugate half of the segment, where no samples live.
  const auto n = static_cast<Eigen::Index>(data.points.size());
  const auto m = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXcd c(n, m);
  Eigen::VectorXcd g(n);
  Eigen::MatrixXd a(2 * n, m);
  Eigen::VectorXd b(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i) = data.samples[static_cast<std::size_t>(i)];
    Complex z = data.points[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < m; ++k) {
      Complex ck = 1.0 / (2.0 * pi * (z - nodes[static_cast<std::size_t>(k)]));
      c(i, k) = ck;
      a(i, k) = ck.real();
      a(n + i, k) = ck.imag();
    }
    b(i) = g(i).real();
    b(n + i) = g(i).imag();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0)
    throw std::runtime_error("fit_pole_weights: design matrix is identically zero");
  Eigen::VectorXd u = svd.matrixU().transpose() * b;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) >= svd_cutoff * s(0)) {
      u(i) /= s(i);
      ++rank;
    } else {
      u(i) = 0.0;
    }
  }
  Eigen::VectorXd x = svd.matrixV() * u;

  PoleBasisInterpolant out;
  out.nodes.assign(nodes.begin(), nodes.end());
  out.weights.resize(static_cast<std::size_t>(x.size()));
  for (Eigen::Index k = 0; k < x.size(); ++k)
    out.weights[static_cast<std::size_t>(k)] = Complex(x(k), 0.0);
  out.b = (2.0 * data.n_points - 1.0) * pi / data.beta;
  out.residual = (c * x.cast<Complex>() - g).norm();
  out.svd_rank = rank;
  return out;
}

/// Evaluates the pole expansion.  Points farther than 2b from the origin are
/// rejected; points between b and 2b are extrapolation and draw a warning.
inline Complex eval_pole_interpolant(const PoleBasisInterpolant& interp, Complex z) {
  double m = std::abs(z);
  if (m > 2.0 * interp.b)
    throw std::domain_error("eval_pole_interpolant: point too far outside the fitted disk");
  if (m > interp.b)
    std::cerr << "matsac: warning: pole interpolant extrapolating beyond |z| = b\n";
  Complex acc(0.0, 0.0);
  for (std::size_t k = 0; k < interp.nodes.size(); ++k) {
    Complex d = z - interp.nodes[k];
    if (d == Complex(0.0, 0.0))
      throw std::domain_error("eval_pole_interpolant: z coincides with a basis node");
    acc += interp.weights[k] / d;
  }
  return acc / (2.0 * pi);
}

/// Quintic Hermite spline for H = 1/G on the knot ordinates y_n = Im z_n.
struct ReciprocalSplineInterpolant {
  double a = 0.0;
  double b = 0.0;
  double step = 0.0;
  int order = 5;
  std::vector<double> knots;
  std::vector<Complex> value;   // H(y_n)
  std::vector<Complex> deriv1;  // H'(y_n)
  std::vector<Complex> deriv2;  // H''(y_n)
};

namespace detail {

/// First and second derivatives of H at an end knot, estimated from the ten
/// outermost samples.  A [5/2] rational least-squares fit is tried first:
/// near the segment ends H = 1/G is the reciprocal of a pole sum, so a low
/// rational resolves variation at the knot-spacing scale that defeats
/// polynomial estimates, while polynomial data up to degree five still sits
/// in its zero-residual class.  The fit is rejected in favour of the
/// interpolating polynomial when its denominator places a root within a few
/// spacings of the end knot (the fit latched onto noise, not structure).
inline void end_derivatives(const ReciprocalSplineInterpolant& sp, bool right,
                            Complex& d1, Complex& d2) {
  const std::size_t n = sp.knots.size();
  const std::size_t w = std::min<std::size_t>(n, 10);
  const std::size_t i0 = right ? n - w : 0;
  const std::size_t ie = right ? n - 1 : 0;
  const double h = sp.step;
  auto u_of = [&](std::size_t r) { return (sp.knots[i0 + r] - sp.knots[ie]) / h; };

  if (w == 10) {
    Eigen::MatrixXcd a(10, 8);
    Eigen::VectorXcd rhs(10);
    for (std::size_t r = 0; r < 10; ++r) {
      double u = u_of(r);
      double pw = 1.0;
      for (int c = 0; c <= 5; ++c) {
        a(static_cast<Eigen::Index>(r), c) = pw;
        pw *= u;
      }
      a(static_cast<Eigen::Index>(r), 6) = -sp.value[i0 + r] * u;
      a(static_cast<Eigen::Index>(r), 7) = -sp.value[i0 + r] * u * u;
      rhs(static_cast<Eigen::Index>(r)) = sp.value[i0 + r];
    }
    Eigen::VectorXcd cf = a.completeOrthogonalDecomposition().solve(rhs);
    bool finite = cf.allFinite();
    Complex b1 = cf(6), b2 = cf(7);
    double min_root = std::numeric_limits<double>::infinity();
    if (b2 == Complex(0.0, 0.0)) {
      if (b1 != Complex(0.0, 0.0)) min_root = 1.0 / std::abs(b1);
    } else {
      Complex disc = std::sqrt(b1 * b1 - 4.0 * b2);
      if (std::real(std::conj(b1) * disc) < 0.0) disc = -disc;
      Complex big = -0.5 * (b1 + disc);
      if (big == Complex(0.0, 0.0)) {
        min_root = 1.0 / std::sqrt(std::abs(b2));
      } else {
        min_root = std::min(std::abs(big / b2), std::abs(1.0 / big));
      }
    }
    if (finite && min_root >= 2.5) {
      d1 = (cf(1) - cf(0) * b1) / h;
      d2 = 2.0 * (cf(2) - cf(1) * b1 - cf(0) * b2 + cf(0) * b1 * b1) / (h * h);
      if (std::isfinite(d1.real()) && std::isfinite(d1.imag()) &&
          std::isfinite(d2.real()) && std::isfinite(d2.imag()))
        return;
    }
  }

  Eigen::MatrixXcd v(w, w);
  Eigen::VectorXcd f(w);
  for (std::size_t r = 0; r < w; ++r) {
    double u = u_of(r);
    double pw = 1.0;
    for (std::size_t c = 0; c < w; ++c) {
      v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = pw;
      pw *= u;
    }
    f(static_cast<Eigen::Index>(r)) = sp.value[i0 + r];
  }
  Eigen::VectorXcd cf = v.fullPivLu().solve(f);
  d1 = cf(1) / h;
  d2 = 2.0 * cf(2) / (h * h);
}

/// Fills deriv1/deriv2 with the knot derivatives of the C^4 quintic spline
/// that interpolates the stored values on the uniform knot grid, closed by
/// pinning the end-knot derivatives to the end_derivatives estimates.
/// Unknowns are scaled as p_i = h H'(y_i) and P_i = h^2 H''(y_i), which
/// keeps every row O(1) regardless of h; each row couples three adjacent
/// knots, so the system is sparse and is factorised once and solved for the
/// real and imaginary components separately.
inline void solve_spline_derivatives(ReciprocalSplineInterpolant& sp) {
  const auto n = static_cast<Eigen::Index>(sp.knots.size());
  const double h = sp.step;
  auto p = [](Eigen::Index i) { return 2 * i; };
  auto pp = [](Eigen::Index i) { return 2 * i + 1; };
  auto f = [&sp](Eigen::Index i) { return sp.value[static_cast<std::size_t>(i)]; };

  Complex lo1, lo2, hi1, hi2;
  end_derivatives(sp, false, lo1, lo2);
  end_derivatives(sp, true, hi1, hi2);

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(10 * n));
  Eigen::VectorXd rhs_re = Eigen::VectorXd::Zero(2 * n);
  Eigen::VectorXd rhs_im = Eigen::VectorXd::Zero(2 * n);
  Eigen::Index row = 0;
  auto push = [&entries, &row](Eigen::Index col, double v) {
    entries.emplace_back(row, col, v);
  };
  auto close_row = [&](const Complex& rhs) {
    rhs_re(row) = rhs.real();
    rhs_im(row) = rhs.imag();
    ++row;
  };

  // Continuity of the third and fourth derivatives at every interior knot.
  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    push(p(j - 1), -8.0);
    push(pp(j - 1), -1.0);
    push(pp(j), 6.0);
    push(p(j + 1), 8.0);
    push(pp(j + 1), -1.0);
    close_row(20.0 * f(j - 1) - 40.0 * f(j) + 20.0 * f(j + 1));
    push(p(j - 1), -7.0);
    push(pp(j - 1), -1.0);
    push(p(j), -16.0);
    push(p(j + 1), -7.0);
    push(pp(j + 1), 1.0);
    close_row(15.0 * f(j - 1) - 15.0 * f(j + 1));
  }
  push(p(0), 1.0);
  close_row(lo1 * h);
  push(pp(0), 1.0);
  close_row(lo2 * h * h);
  push(p(n - 1), 1.0);
  close_row(hi1 * h);
  push(pp(n - 1), 1.0);
  close_row(hi2 * h * h);

  Eigen::SparseMatrix<double> a(2 * n, 2 * n);
  a.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("reciprocal step: spline system is singular");
  Eigen::VectorXd sol_re = lu.solve(rhs_re);
  Eigen::VectorXd sol_im = lu.solve(rhs_im);
  for (Eigen::Index i = 0; i < n; ++i) {
    sp.deriv1[static_cast<std::size_t>(i)] = Complex(sol_re(p(i)), sol_im(p(i))) / h;
    sp.deriv2[static_cast<std::size_t>(i)] = Complex(sol_re(pp(i)), sol_im(pp(i))) / (h * h);
  }
}

}  // namespace detail

/// Builds the spline for H = 1/G from the dataset.  Knot derivatives come
/// from the global C^4 interpolation conditions, closed by rational
/// end-derivative estimates.  Only order 5 is implemented.
inline ReciprocalSplineInterpolant fit_reciprocal_spline(const MatsubaraDataset& data,
                                                         int order = 5) {
  if (order != 5)
    throw std::invalid_argument("fit_reciprocal_spline: only order 5 is implemented");
  const std::size_t n = data.points.size();
  if (n != data.samples.size() || n < 6)
    throw std::invalid_argument("fit_reciprocal_spline: need at least six samples");

  ReciprocalSplineInterpolant sp;
  sp.order = order;
  sp.knots.resize(n);
  sp.value.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sp.knots[i] = data.points[i].imag();
    if (i > 0 && !(sp.knots[i] > sp.knots[i - 1]))
      throw std::invalid_argument("fit_reciprocal_spline: knots must increase");
    if (data.samples[i] == Complex(0.0, 0.0))
      throw std::runtime_error("reciprocal step: zero sample");
    sp.value[i] = 1.0 / data.samples[i];
  }
  sp.a = sp.knots.front();
  sp.b = sp.knots.back();
  sp.step = (sp.b - sp.a) / static_cast<double>(n - 1);

  sp.deriv1.resize(n);
  sp.deriv2.resize(n);
  detail::solve_spline_derivatives(sp);
  return sp;
}

namespace detail {

/// Quintic Hermite basis on [0, 1]: phi_k weight value/first/second
/// derivative at the left end, psi_k the same at the right end.
inline void quintic_basis(double u, double out_phi[3], double out_psi[3]) {
  double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
  out_phi[0] = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
  out_phi[1] = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
  out_phi[2] = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5;
  out_psi[0] = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
  out_psi[1] = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
  out_psi[2] = 0.5 * u3 - u4 + 0.5 * u5;
}

inline Complex eval_spline_h(const ReciprocalSplineInterpolant& sp, double y) {
  const auto& k = sp.knots;
  const std::size_t n = k.size();
  double slack = 1e-9 * std::max(1.0, sp.b);
  if (y < sp.a - slack || y > sp.b + slack)
    throw std::domain_error("reciprocal interpolant: point outside [ai, bi]");
  y = std::clamp(y, sp.a, sp.b);
  auto it = std::upper_bound(k.begin(), k.end(), y);
  std::size_t m = static_cast<std::size_t>(std::distance(k.begin(), it));
  m = m == 0 ? 0 : m - 1;
  m = std::min(m, n - 2);
  double h = k[m + 1] - k[m];
  double u = (y - k[m]) / h;
  double phi[3], psi[3];
  quintic_basis(u, phi, psi);
  return sp.value[m] * phi[0] + sp.deriv1[m] * (h * phi[1]) +
         sp.deriv2[m] * (h * h * phi[2]) + sp.value[m + 1] * psi[0] +
         sp.deriv1[m + 1] * (h * psi[1]) + sp.deriv2[m + 1] * (h * h * psi[2]);
}

}  // namespace detail

/// H(z) for z = iy on the fitted segment.
inline Complex eval_reciprocal_h(const ReciprocalSplineInterpolant& sp, Complex z) {
  if (std::abs(z.real()) > 1e-9 * std::max(1.0, std::abs(z)))
    throw std::domain_error("reciprocal interpolant: point off the imaginary axis");
  return detail::eval_spline_h(sp, z.imag());
}

/// G(z) = 1/H(z) for z = iy on the fitted segment.
inline Complex eval_reciprocal_interpolant(const ReciprocalSplineInterpolant& sp, Complex z) {
  Complex h = eval_reciprocal_h(sp, z);
  if (h == Complex(0.0, 0.0))
    throw std::runtime_error("reciprocal step: interpolated value is zero");
  return 1.0 / h;
}

}  // namespace matsac

#endif  // MATSAC_INTERP_HPP
