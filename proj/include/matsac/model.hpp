#ifndef MATSAC_MODEL_HPP
#define MATSAC_MODEL_HPP

/// Spectral models and the forward map from a spectral function to Green's
/// function samples on the imaginary-frequency grid.
///
/// A spectral function A(x) >= 0 on the real line induces
///
///     G(z) = (1/2pi) \int A(x) / (z - x) dx,   z off the real axis,
///
/// and conversely A(x) = -2 Im G(x + i0+).  Three model families are
/// supported: sums of weighted point masses (DeltaModel), sums of complex
/// poles in the lower half-plane (PoleModel), and Gaussian mixtures
/// (GaussianMixture).  The first two make G rational; the third is evaluated
/// by adaptive quadrature.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace matsac {

using Complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

/// Sum of point masses A(x) = sum_j weight_j * delta(x - location_j) with
/// real locations bounded away from zero.
struct DeltaModel {
  struct Atom {
    double location = 0.0;
    double weight = 0.0;
  };
  std::vector<Atom> atoms;

  /// Smallest |location|; the spectral gap around the origin.
  double gap() const {
    double g = 0.0;
    bool first = true;
    for (const auto& a : atoms) {
      double m = std::abs(a.location);
      if (first || m < g) g = m;
      first = false;
    }
    return g;
  }

  void validate() const {
    if (atoms.empty()) throw std::invalid_argument("delta model: no atoms");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (!(atoms[i].weight > 0.0))
        throw std::invalid_argument("delta model: weights must be positive");
      if (!(std::abs(atoms[i].location) > 0.0))
        throw std::invalid_argument("delta model: locations must be nonzero");
      for (std::size_t j = 0; j < i; ++j)
        if (atoms[i].location == atoms[j].location)
          throw std::invalid_argument("delta model: duplicate location");
    }
  }
};

/// Sum of simple poles G(z) = (1/2pi) sum_j weight_j / (z - location_j) with
/// locations strictly in the lower half-plane.
struct PoleModel {
  struct Pole {
    Complex location;
    Complex weight;
  };
  std::vector<Pole> poles;

  void validate() const {
    if (poles.empty()) throw std::invalid_argument("pole model: no poles");
    for (std::size_t i = 0; i < poles.size(); ++i) {
      if (!(poles[i].location.imag() < 0.0))
        throw std::invalid_argument(
            "pole model: locations must have negative imaginary part");
      if (poles[i].weight == Complex(0.0, 0.0))
        throw std::invalid_argument("pole model: weights must be nonzero");
      for (std::size_t j = 0; j < i; ++j)
        if (poles[i].location == poles[j].location)
          throw std::invalid_argument("pole model: duplicate location");
    }
  }
};

/// Mixture A(x) = sum_j mass_j * N(x; center_j, variance_j) of Gaussian
/// densities.
struct GaussianMixture {
  struct Component {
    double center = 0.0;
    double variance = 0.0;
    double mass = 0.0;
  };
  std::vector<Component> components;

  void validate() const {
    if (components.empty())
      throw std::invalid_argument("gaussian mixture: no components");
    for (const auto& c : components) {
      if (!(c.variance > 0.0))
        throw std::invalid_argument("gaussian mixture: variance must be positive");
      if (!(c.mass > 0.0))
        throw std::invalid_argument("gaussian mixture: mass must be positive");
    }
  }
};

using SpectralModel = std::variant<DeltaModel, PoleModel, GaussianMixture>;

inline void validate(const SpectralModel& model) {
  std::visit([](const auto& m) { m.validate(); }, model);
}

/// Imaginary-frequency samples of a Green's function: points z_n and values
/// G(z_n), plus the noise parameters used to synthesize them (if any).
struct MatsubaraDataset {
  double beta = 0.0;
  int n_points = 0;
  std::vector<Complex> points;
  std::vector<Complex> samples;
  std::optional<double> noise_sigma;
  std::optional<std::uint64_t> seed;
};

/// First n positive fermionic Matsubara frequencies z_n = (2n - 1) pi i / beta,
/// n = 1..n.
inline std::vector<Complex> matsubara_grid(double beta, int n) {
  if (!(beta > 0.0)) throw std::invalid_argument("matsubara_grid: beta must be positive");
  if (n < 1) throw std::invalid_argument("matsubara_grid: need at least one point");
  std::vector<Complex> z(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k)
    z[static_cast<std::size_t>(k - 1)] = Complex(0.0, (2.0 * k - 1.0) * pi / beta);
  return z;
}

inline Complex eval_green_rational(const DeltaModel& model, Complex z) {
  Complex g(0.0, 0.0);
  for (const auto& a : model.atoms) {
    Complex d = z - Complex(a.location, 0.0);
    if (d == Complex(0.0, 0.0))
      throw std::domain_error("eval_green_rational: z coincides with a pole");
    g += Complex(a.weight, 0.0) / d;
  }
  return g / (2.0 * pi);
}

inline Complex eval_green_rational(const PoleModel& model, Complex z) {
  Complex g(0.0, 0.0);
  for (const auto& p : model.poles) {
    Complex d = z - p.location;
    if (d == Complex(0.0, 0.0))
      throw std::domain_error("eval_green_rational: z coincides with a pole");
    g += p.weight / d;
  }
  return g / (2.0 * pi);
}

namespace detail {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], computed
/// by Newton iteration on the Legendre recurrence.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendreRule(int n) : nodes(n), weights(n) {
    for (int i = 0; i < n; ++i) {
      double x = std::cos(pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

inline const GaussLegendreRule& gl15() {
  static const GaussLegendreRule rule(15);
  return rule;
}

template <typename F>
Complex gl_panel(F&& f, double lo, double hi) {
  const auto& rule = gl15();
  double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  Complex acc(0.0, 0.0);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * acc;
}

template <typename F>
Complex integrate_recurse(F&& f, double lo, double hi, double tol, int depth) {
  Complex whole = gl_panel(f, lo, hi);
  double mid = 0.5 * (lo + hi);
  Complex left = gl_panel(f, lo, mid);
  Complex right = gl_panel(f, mid, hi);
  Complex refined = left + right;
  if (std::abs(refined - whole) <= tol || depth >= 48) return refined;
  return integrate_recurse(f, lo, mid, 0.5 * tol, depth + 1) +
         integrate_recurse(f, mid, hi, 0.5 * tol, depth + 1);
}

/// Adaptive Gauss-Legendre integration of a complex-valued integrand with a
/// relative tolerance anchored to the first whole-interval estimate.
template <typename F>
Complex integrate_adaptive(F&& f, double lo, double hi, double rel_tol) {
  Complex first = gl_panel(f, lo, hi);
  double scale = std::abs(first);
  if (scale == 0.0) scale = 1.0;
  return integrate_recurse(f, lo, hi, rel_tol * scale, 0);
}

}  // namespace detail

/// Green's function of a Gaussian mixture by adaptive quadrature over
/// [center - 10 sd, center + 10 sd] per component, relative tolerance 1e-12.
inline Complex eval_green_gaussian(const GaussianMixture& model, Complex z) {
  if (z.imag() == 0.0)
    throw std::invalid_argument("eval_green_gaussian: z must lie off the real axis");
  Complex g(0.0, 0.0);
  for (const auto& c : model.components) {
    double sd = std::sqrt(c.variance);
    double norm = c.mass / std::sqrt(2.0 * pi * c.variance);
    auto integrand = [&](double x) {
      double u = (x - c.center) / sd;
      return Complex(norm * std::exp(-0.5 * u * u), 0.0) / (z - Complex(x, 0.0));
    };
    g += detail::integrate_adaptive(integrand, c.center - 10.0 * sd,
                                    c.center + 10.0 * sd, 1e-12);
  }
  return g / (2.0 * pi);
}

inline Complex eval_green(const SpectralModel& model, Complex z) {
  return std::visit(
      [&](const auto& m) -> Complex {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianMixture>)
          return eval_green_gaussian(m, z);
        else
          return eval_green_rational(m, z);
      },
      model);
}

/// Root-mean-square magnitude M = sqrt(mean |g_n|^2) of a sample vector.
inline double average_magnitude(std::span<const Complex> samples) {
  if (samples.empty())
    throw std::invalid_argument("average_magnitude: empty sample vector");
  double acc = 0.0;
  for (const auto& s : samples) acc += std::norm(s);
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

namespace detail {

/// Stream of standard complex normal deviates (E|eta|^2 = 1) built on
/// mt19937_64.  Each deviate consumes exactly two engine draws: the first is
/// mapped to u1 in (0, 1], the second to u2 in [0, 1), and
/// eta = sqrt(-log u1) * exp(2 pi i u2).
class ComplexNormalStream {
 public:
  explicit ComplexNormalStream(std::uint64_t seed) : eng_(seed) {}

  Complex next() {
    double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    double r = std::sqrt(-std::log(u1));
    return Complex(r * std::cos(2.0 * pi * u2), r * std::sin(2.0 * pi * u2));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace detail

/// Returns a copy of the dataset with samples perturbed by
/// sigma * M * eta_n, where M is the RMS sample magnitude and eta_n are
/// unit-variance complex normal deviates drawn in sample order.  sigma = 0
/// leaves the samples bit-identical.
inline MatsubaraDataset add_noise(const MatsubaraDataset& data, double sigma,
                                  std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma must be nonnegative");
  MatsubaraDataset out = data;
  out.noise_sigma = sigma;
  out.seed = seed;
  if (sigma == 0.0) return out;
  double m = average_magnitude(out.samples);
  detail::ComplexNormalStream stream(seed);
  for (auto& s : out.samples) s += sigma * m * stream.next();
  return out;
}

/// Forward model: exact samples G(z_n) on the first n Matsubara frequencies,
/// then noise per add_noise.
inline MatsubaraDataset synthesize(const SpectralModel& model, double beta, int n,
                                   double sigma, std::uint64_t seed) {
  validate(model);
  MatsubaraDataset data;
  data.beta = beta;
  data.n_points = n;
  data.points = matsubara_grid(beta, n);
  data.samples.reserve(data.points.size());
  for (const auto& z : data.points) data.samples.push_back(eval_green(model, z));
  return add_noise(data, sigma, seed);
}

}  // namespace matsac

#endif  // MATSAC_MODEL_HPP
