#ifndef MATSAC_UNZIP_HPP
#define MATSAC_UNZIP_HPP

/// Conformal maps that open ("unzip") an imaginary-axis segment into the unit
/// circle.  Each map sends the exterior of the segment to the exterior of the
/// unit disk; sampling an interpolant at z(e^{i theta}) turns it into a
/// periodic function whose Fourier coefficients feed the exponential-sum
/// recovery step, and exterior nodes t with |t| > 1 pull back to physical
/// pole locations.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "matsac/model.hpp"

namespace matsac {

/// Joukowski-type map for the symmetric segment [-bi, bi]:
///   z(t) = i b (t + 1/t) / 2.
/// The unit circle covers the segment twice; |t| > 1 covers its exterior.
struct MoleculeMap {
  double b = 0.0;
};

/// Map for the one-sided segment [ai, bi] with 0 < a < b:
///   w(t) = (r/2)(t + 1/t),   z(t) = -qi (w + 1) / (w - 1),
/// where q = sqrt(ab) and r = (b - q)/(b + q).  t = 1 lands on bi, t = -1 on
/// ai, and t = i on the geometric midpoint qi.
struct CondensedMap {
  double a = 0.0;
  double b = 0.0;
  double q = 0.0;
  double r = 0.0;
};

/// Map parameters for a Matsubara grid with n points: b = (2n - 1) pi / beta.
inline MoleculeMap make_molecule_map(double beta, int n) {
  if (!(beta > 0.0)) throw std::invalid_argument("make_molecule_map: beta must be positive");
  if (n < 1) throw std::invalid_argument("make_molecule_map: need at least one point");
  return MoleculeMap{(2.0 * n - 1.0) * pi / beta};
}

/// Map parameters a = pi / beta, b = (2n - 1) pi / beta for n >= 2.
inline CondensedMap make_condensed_map(double beta, int n) {
  if (!(beta > 0.0)) throw std::invalid_argument("make_condensed_map: beta must be positive");
  if (n < 2) throw std::invalid_argument("make_condensed_map: need at least two points");
  double a = pi / beta;
  double b = (2.0 * n - 1.0) * pi / beta;
  double q = std::sqrt(a * b);
  double r = (b - q) / (b + q);
  return CondensedMap{a, b, q, r};
}

inline Complex z_of_t(const MoleculeMap& map, Complex t) {
  if (t == Complex(0.0, 0.0)) throw std::domain_error("z_of_t: t must be nonzero");
  return Complex(0.0, map.b) * (t + 1.0 / t) * 0.5;
}

inline Complex z_of_t(const CondensedMap& map, Complex t) {
  if (t == Complex(0.0, 0.0)) throw std::domain_error("z_of_t: t must be nonzero");
  Complex w = 0.5 * map.r * (t + 1.0 / t);
  if (w == Complex(1.0, 0.0))
    throw std::domain_error("z_of_t: t maps to the point at infinity");
  return Complex(0.0, -map.q) * (w + 1.0) / (w - 1.0);
}

/// Equispaced circle angles theta_n = 2 pi n / n_samples, n = 0..n_samples-1.
inline std::vector<double> circle_angles(int n_samples) {
  if (n_samples < 1) throw std::invalid_argument("circle_angles: need at least one sample");
  std::vector<double> theta(static_cast<std::size_t>(n_samples));
  for (int n = 0; n < n_samples; ++n)
    theta[static_cast<std::size_t>(n)] = 2.0 * pi * n / n_samples;
  return theta;
}

/// Physical location of a recovered exterior node; requires |t| > 1.
inline Complex pullback_pole(const MoleculeMap& map, Complex t) {
  if (!(std::abs(t) > 1.0))
    throw std::invalid_argument("pullback_pole: node must lie outside the unit circle");
  return z_of_t(map, t);
}

inline Complex pullback_pole(const CondensedMap& map, Complex t) {
  if (!(std::abs(t) > 1.0))
    throw std::invalid_argument("pullback_pole: node must lie outside the unit circle");
  return z_of_t(map, t);
}

}  // namespace matsac

#endif  // MATSAC_UNZIP_HPP
